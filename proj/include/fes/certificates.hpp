#pragma once

#include "fes/algorithms.hpp"
#include "fes/plant.hpp"
#include "fes/types.hpp"

#include <string>
#include <vector>

namespace fes {

/// Constants entering the small-gain certificate of the sampled closed loop.
struct CertificateBundle {
    // plant
    double mu = 0.0;
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double ell_g = 0.0;
    double ell_x = 0.0;
    ScalarGain sigma_c;
    // problem
    double ell_u_star = 0.0;
    // algorithm
    double c_T = 0.0;
    double ell_T = 0.0;
    double lambda_min_P = 1.0;
    double lambda_max_P = 1.0;

    [[nodiscard]] double ell_W() const;
    [[nodiscard]] double sigma(double z) const;
    [[nodiscard]] double norm_P() const { return lambda_max_P; }
    [[nodiscard]] double norm_P_inv() const { return 1.0 / lambda_min_P; }
    [[nodiscard]] double kappa_P() const { return lambda_max_P / lambda_min_P; }
    void validate() const;
};

[[nodiscard]] CertificateBundle make_bundle(const LyapunovCertificate& plant_cert, double ell_u_star,
                                            const AlgorithmOperator& op);

/// c_W = sqrt(alpha2/alpha1) exp(-tau mu / 2).
[[nodiscard]] double c_w(const CertificateBundle& b, double tau);

/// The 2x2 nonnegative small-gain matrix coupling |du|_P and W.
[[nodiscard]] Eigen::Matrix2d build_M(const CertificateBundle& b, double tau, double eps);

/// Perron root (tr + sqrt((a-d)^2 + 4bc)) / 2 of an entrywise nonnegative 2x2.
[[nodiscard]] double spectral_radius_2x2(const Eigen::Matrix2d& M);

/// log(alpha2/alpha1) / mu.
[[nodiscard]] double tau_min(const CertificateBundle& b);

/// Upper relaxation bound eps_bar(tau); +inf when the loop gain vanishes.
[[nodiscard]] double eps_max(const CertificateBundle& b, double tau);

enum class Verdict { Certified, BelowMinimumSamplingPeriod, RelaxationTooLarge, InvalidRelaxation };

[[nodiscard]] const char* to_string(Verdict v) noexcept;

struct RegionCheck {
    Verdict verdict = Verdict::InvalidRelaxation;
    double tau_min = 0.0;
    double eps_max = 0.0;         ///< eps_bar(tau), NaN below tau_min
    double eps_admissible = 0.0;  ///< min(eps_bar, 1), 0 below tau_min
    double c_W = 0.0;
    Eigen::Matrix2d M = Eigen::Matrix2d::Zero();
    double rho = 0.0;

    [[nodiscard]] bool certified() const noexcept { return verdict == Verdict::Certified; }
};

/// Checks tau > tau_min, eps in (0, 1] and eps < eps_bar(tau).
[[nodiscard]] RegionCheck certify(const CertificateBundle& b, double tau, double eps);

/// Constants (c_M, r) with |M^k| <= r c_M^k.
struct PowerBound {
    double c_M = 0.0;
    double r = 1.0;
    bool repeated_eigenvalue = false;
};

[[nodiscard]] PowerBound power_bound(const Eigen::Matrix2d& M);

struct IssConstants {
    double c_W = 0.0;
    double c_M = 0.0;
    double r = 1.0;
    double m1 = 1.0;
    double m2 = 1.0;
    double eta1 = 1.0;
    double eta2 = 1.0;
};

/// Throws OutsideCertifiedRegion unless (tau, eps) is certified with rho(M) < 1.
[[nodiscard]] IssConstants iss_constants(const CertificateBundle& b, double tau, double eps);

/// ISS gain  eta2 c_M/(1-c_M) |( |P| ell_u* tau zeta, (sqrt(tau)/c_W) sigma(zeta) )|.
[[nodiscard]] double iss_gain(const CertificateBundle& b, double tau, double eps, double zeta);

/// eta1 c_M^k |(dx0, du0)| + gamma(z_sup).
[[nodiscard]] double iss_envelope(const CertificateBundle& b, double tau, double eps, double dx0_norm,
                                  double du0_norm, double z_sup, long k);

/// ell_g (1 + ell_x) gamma(zeta).
[[nodiscard]] double asymptotic_gain(const CertificateBundle& b, double tau, double eps, double zeta);

struct SweepPoint {
    double tau = 0.0;
    double eps = 0.0;
    double rho = 0.0;
    bool certified = false;
};

/// rho(M) and the region verdict on the tau x eps grid (tau-major order).
/// Rows are distributed over up to `workers` threads; results do not depend on it.
[[nodiscard]] std::vector<SweepPoint> sweep_region(const CertificateBundle& b, const std::vector<double>& tau_grid,
                                                   const std::vector<double>& eps_grid, int workers = 1);

}  // namespace fes
