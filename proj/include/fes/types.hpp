#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace fes {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ErrorCode {
    InvalidArgument,
    ShapeError,
    InputOutOfRange,
    IntegrationDiverged,
    InvalidInterval,
    NoConvergence,
    StepSizeOutOfRange,
    BestResponseFailed,
    RelaxationOutOfRange,
    InvalidSamplingPeriod,
    NotPerronMatrix,
    BelowMinimumSamplingPeriod,
    OutsideCertifiedRegion,
    UnstableOpenLoop,
    ConfigError,
};

[[nodiscard]] const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    /// Message without the code prefix.
    [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

/// Raised when the state becomes non-finite. In a closed loop this usually
/// means the chosen (tau, eps) destabilized the interconnection.
class IntegrationDiverged : public Error {
public:
    explicit IntegrationDiverged(const std::string& what, long sample = -1)
        : Error(ErrorCode::IntegrationDiverged, what), sample_(sample) {}

    [[nodiscard]] long sample() const noexcept { return sample_; }

private:
    long sample_;
};

/// Componentwise interval set [lower, upper].
struct BoxSet {
    Vec lower;
    Vec upper;

    BoxSet() = default;
    BoxSet(Vec lo, Vec hi);

    [[nodiscard]] static BoxSet uniform(Eigen::Index n, double lo, double hi);
    [[nodiscard]] static BoxSet unbounded(Eigen::Index n);

    [[nodiscard]] Eigen::Index size() const noexcept { return lower.size(); }
    [[nodiscard]] bool contains(const Vec& x, double tol = 1e-12) const;
    [[nodiscard]] Vec project(const Vec& x) const;
    [[nodiscard]] Vec midpoint() const;
};

inline void require_size(const Vec& v, Eigen::Index n, const char* what) {
    if (v.size() != n) {
        throw Error(ErrorCode::ShapeError, std::string(what) + ": expected size " + std::to_string(n) +
                                               ", got " + std::to_string(v.size()));
    }
}

}  // namespace fes
