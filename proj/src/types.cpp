#include "fes/types.hpp"

#include <limits>

namespace fes {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ShapeError: return "ShapeError";
        case ErrorCode::InputOutOfRange: return "InputOutOfRange";
        case ErrorCode::IntegrationDiverged: return "IntegrationDiverged";
        case ErrorCode::InvalidInterval: return "InvalidInterval";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::StepSizeOutOfRange: return "StepSizeOutOfRange";
        case ErrorCode::BestResponseFailed: return "BestResponseFailed";
        case ErrorCode::RelaxationOutOfRange: return "RelaxationOutOfRange";
        case ErrorCode::InvalidSamplingPeriod: return "InvalidSamplingPeriod";
        case ErrorCode::NotPerronMatrix: return "NotPerronMatrix";
        case ErrorCode::BelowMinimumSamplingPeriod: return "BelowMinimumSamplingPeriod";
        case ErrorCode::OutsideCertifiedRegion: return "OutsideCertifiedRegion";
        case ErrorCode::UnstableOpenLoop: return "UnstableOpenLoop";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

BoxSet::BoxSet(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size()) {
        throw Error(ErrorCode::ShapeError, "box bounds have different sizes");
    }
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
        if (!(lower[i] <= upper[i])) {
            throw Error(ErrorCode::InvalidArgument, "box is empty in component " + std::to_string(i));
        }
    }
}

BoxSet BoxSet::uniform(Eigen::Index n, double lo, double hi) {
    return BoxSet(Vec::Constant(n, lo), Vec::Constant(n, hi));
}

BoxSet BoxSet::unbounded(Eigen::Index n) {
    const double inf = std::numeric_limits<double>::infinity();
    return BoxSet(Vec::Constant(n, -inf), Vec::Constant(n, inf));
}

bool BoxSet::contains(const Vec& x, double tol) const {
    if (x.size() != lower.size()) {
        return false;
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (!(x[i] >= lower[i] - tol && x[i] <= upper[i] + tol)) {
            return false;
        }
    }
    return true;
}

Vec BoxSet::project(const Vec& x) const {
    require_size(x, lower.size(), "BoxSet::project");
    return x.cwiseMax(lower).cwiseMin(upper);
}

Vec BoxSet::midpoint() const {
    Vec m(lower.size());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const bool lo_finite = std::isfinite(lower[i]);
        const bool hi_finite = std::isfinite(upper[i]);
        if (lo_finite && hi_finite) {
            m[i] = 0.5 * (lower[i] + upper[i]);
        } else if (lo_finite) {
            m[i] = lower[i];
        } else if (hi_finite) {
            m[i] = upper[i];
        } else {
            m[i] = 0.0;
        }
    }
    return m;
}

}  // namespace fes
