#include "fes/certificates.hpp"

#include "fes/kernels/small_gain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace fes {

namespace {

constexpr double kRepeatedGap = 1e-10;
constexpr double kRepeatedLift = 1e-8;

void check_tau(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw Error(ErrorCode::InvalidSamplingPeriod, "tau must be positive and finite, got " + std::to_string(tau));
    }
}

void check_eps(double eps) {
    if (!(eps > 0.0 && eps <= 1.0)) {
        throw Error(ErrorCode::RelaxationOutOfRange, "eps must lie in (0, 1], got " + std::to_string(eps));
    }
}

// Unit eigenvector of the 2x2 M for the real eigenvalue lambda.
Eigen::Vector2d eigenvector(const Eigen::Matrix2d& M, double lambda) {
    const Eigen::Vector2d r1(M(0, 0) - lambda, M(0, 1));
    const Eigen::Vector2d r2(M(1, 0), M(1, 1) - lambda);
    const Eigen::Vector2d& row = r1.squaredNorm() >= r2.squaredNorm() ? r1 : r2;
    Eigen::Vector2d v(-row(1), row(0));
    return v.normalized();
}

bool in_region(double tau, double eps, double tmin, double emax) {
    return tau > tmin && eps > 0.0 && eps <= 1.0 && eps < emax;
}

}  // namespace

double CertificateBundle::ell_W() const { return std::sqrt(alpha1) * ell_x; }

double CertificateBundle::sigma(double z) const {
    if (!sigma_c) return 0.0;
    return std::sqrt(std::max(0.0, sigma_c(z)));
}

void CertificateBundle::validate() const {
    auto finite_nonneg = [](double v, const char* name) {
        if (!std::isfinite(v) || v < 0.0) {
            throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be finite and nonnegative");
        }
    };
    if (!(mu > 0.0) || !std::isfinite(mu)) throw Error(ErrorCode::InvalidArgument, "mu must be positive");
    if (!(alpha1 > 0.0) || !(alpha2 >= alpha1) || !std::isfinite(alpha2)) {
        throw Error(ErrorCode::InvalidArgument, "need 0 < alpha1 <= alpha2 < inf");
    }
    finite_nonneg(ell_g, "ell_g");
    finite_nonneg(ell_x, "ell_x");
    finite_nonneg(ell_u_star, "ell_u_star");
    finite_nonneg(ell_T, "ell_T");
    if (!(c_T >= 0.0 && c_T < 1.0)) throw Error(ErrorCode::InvalidArgument, "c_T must lie in [0, 1)");
    if (!(lambda_min_P > 0.0) || !(lambda_max_P >= lambda_min_P) || !std::isfinite(lambda_max_P)) {
        throw Error(ErrorCode::InvalidArgument, "need 0 < lambda_min(P) <= lambda_max(P) < inf");
    }
}

CertificateBundle make_bundle(const LyapunovCertificate& plant_cert, double ell_u_star, const AlgorithmOperator& op) {
    CertificateBundle b;
    b.mu = plant_cert.mu;
    b.alpha1 = plant_cert.alpha1;
    b.alpha2 = plant_cert.alpha2;
    b.ell_g = plant_cert.ell_g;
    b.ell_x = plant_cert.ell_x;
    b.sigma_c = plant_cert.sigma_c;
    b.ell_u_star = ell_u_star;
    b.c_T = op.c_T;
    b.ell_T = op.ell_T;
    b.lambda_min_P = op.lambda_min_P();
    b.lambda_max_P = op.lambda_max_P();
    b.validate();
    return b;
}

double c_w(const CertificateBundle& b, double tau) {
    check_tau(tau);
    return std::sqrt(b.alpha2 / b.alpha1) * std::exp(-tau * b.mu / 2.0);
}

Eigen::Matrix2d build_M(const CertificateBundle& b, double tau, double eps) {
    check_tau(tau);
    check_eps(eps);
    const double cW = c_w(b, tau);
    const double sa1 = std::sqrt(b.alpha1);
    const double lW = b.ell_W();
    Eigen::Matrix2d M;
    M(0, 0) = 1.0 - eps * (1.0 - b.c_T);
    M(0, 1) = (b.norm_P() * b.ell_T * b.ell_g / sa1) * eps * cW;
    M(1, 0) = b.norm_P_inv() * (1.0 + b.c_T) * eps * lW * cW;
    M(1, 1) = (1.0 + (lW * b.ell_T * b.ell_g / sa1) * eps * cW) * cW;
    return M;
}

double spectral_radius_2x2(const Eigen::Matrix2d& M) {
    if ((M.array() < 0.0).any() || !M.allFinite()) {
        throw Error(ErrorCode::NotPerronMatrix, "matrix must be entrywise nonnegative and finite");
    }
    const double a = M(0, 0), b = M(0, 1), c = M(1, 0), d = M(1, 1);
    // (a-d)^2 + 4bc equals tr^2 - 4 det but cannot go negative through cancellation.
    return 0.5 * (a + d + std::sqrt((a - d) * (a - d) + 4.0 * b * c));
}

double tau_min(const CertificateBundle& b) { return std::log(b.alpha2 / b.alpha1) / b.mu; }

double eps_max(const CertificateBundle& b, double tau) {
    check_tau(tau);
    const double tmin = tau_min(b);
    if (!(tau > tmin)) {
        throw Error(ErrorCode::BelowMinimumSamplingPeriod,
                    "tau = " + std::to_string(tau) + " does not exceed tau_min = " + std::to_string(tmin));
    }
    const double ratio = b.alpha2 / b.alpha1;
    const double e = std::exp(tau * b.mu / 2.0);
    const double num = e * (e - std::sqrt(ratio));
    const double loop = b.ell_g * b.ell_x * b.ell_T * (1.0 + b.kappa_P() * (1.0 + b.c_T) / (1.0 - b.c_T));
    if (loop == 0.0) return std::numeric_limits<double>::infinity();
    return num / (loop * ratio);
}

const char* to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::Certified: return "certified";
        case Verdict::BelowMinimumSamplingPeriod: return "below_minimum_sampling_period";
        case Verdict::RelaxationTooLarge: return "relaxation_too_large";
        case Verdict::InvalidRelaxation: return "invalid_relaxation";
    }
    return "unknown";
}

RegionCheck certify(const CertificateBundle& b, double tau, double eps) {
    check_tau(tau);
    RegionCheck out;
    out.tau_min = tau_min(b);
    out.c_W = c_w(b, tau);
    if (tau > out.tau_min) {
        out.eps_max = eps_max(b, tau);
        out.eps_admissible = std::min(out.eps_max, 1.0);
    } else {
        out.eps_max = std::numeric_limits<double>::quiet_NaN();
        out.eps_admissible = 0.0;
    }
    if (!(eps > 0.0 && eps <= 1.0)) {
        out.verdict = Verdict::InvalidRelaxation;
        return out;
    }
    out.M = build_M(b, tau, eps);
    out.rho = spectral_radius_2x2(out.M);
    if (!(tau > out.tau_min)) {
        out.verdict = Verdict::BelowMinimumSamplingPeriod;
    } else if (!(eps < out.eps_max)) {
        out.verdict = Verdict::RelaxationTooLarge;
    } else {
        out.verdict = Verdict::Certified;
    }
    return out;
}

PowerBound power_bound(const Eigen::Matrix2d& M) {
    const double rho = spectral_radius_2x2(M);
    const double a = M(0, 0), d = M(1, 1);
    const double lambda2 = a + d - rho;
    PowerBound pb;
    if (rho - lambda2 > kRepeatedGap) {
        Eigen::Matrix2d V;
        V.col(0) = eigenvector(M, rho);
        V.col(1) = eigenvector(M, lambda2);
        Eigen::JacobiSVD<Eigen::Matrix2d> svd(V);
        const auto s = svd.singularValues();
        pb.c_M = rho;
        pb.r = s(0) / s(1);
    } else {
        // Schur form T = [[l1, t], [0, l2]] with |t| <= |M|_F gives
        // |M^k| <= c^k (1 + |M|_F / (c - rho)) for any c > rho.
        pb.repeated_eigenvalue = true;
        pb.c_M = rho + kRepeatedLift;
        pb.r = 1.0 + M.norm() / kRepeatedLift;
    }
    return pb;
}

IssConstants iss_constants(const CertificateBundle& b, double tau, double eps) {
    const RegionCheck rc = certify(b, tau, eps);
    if (!rc.certified() || !(rc.rho < 1.0)) {
        throw Error(ErrorCode::OutsideCertifiedRegion, std::string("(tau, eps) not certified: ") +
                                                           to_string(rc.verdict) + ", rho(M) = " +
                                                           std::to_string(rc.rho));
    }
    const PowerBound pb = power_bound(rc.M);
    if (!(pb.c_M < 1.0)) {
        throw Error(ErrorCode::OutsideCertifiedRegion, "power bound rate c_M is not below 1");
    }
    IssConstants k;
    k.c_W = rc.c_W;
    k.c_M = pb.c_M;
    k.r = pb.r;
    k.m1 = std::min(b.lambda_min_P, std::sqrt(b.alpha1));
    k.m2 = std::max(b.lambda_max_P, std::sqrt(b.alpha2));
    k.eta1 = k.r * k.m2 / k.m1;
    k.eta2 = k.r / k.m1;
    return k;
}

namespace {

double gain_from(const CertificateBundle& b, const IssConstants& k, double tau, double zeta) {
    if (!(zeta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "zeta must be nonnegative");
    const double q1 = b.norm_P() * b.ell_u_star * tau * zeta;
    const double q2 = std::sqrt(tau) / k.c_W * b.sigma(zeta);
    return k.eta2 * k.c_M / (1.0 - k.c_M) * std::hypot(q1, q2);
}

}  // namespace

double iss_gain(const CertificateBundle& b, double tau, double eps, double zeta) {
    return gain_from(b, iss_constants(b, tau, eps), tau, zeta);
}

double iss_envelope(const CertificateBundle& b, double tau, double eps, double dx0_norm, double du0_norm,
                    double z_sup, long k) {
    if (k < 0) throw Error(ErrorCode::InvalidArgument, "sample index must be nonnegative");
    const IssConstants c = iss_constants(b, tau, eps);
    return c.eta1 * std::pow(c.c_M, static_cast<double>(k)) * std::hypot(dx0_norm, du0_norm) +
           gain_from(b, c, tau, z_sup);
}

double asymptotic_gain(const CertificateBundle& b, double tau, double eps, double zeta) {
    return b.ell_g * (1.0 + b.ell_x) * iss_gain(b, tau, eps, zeta);
}

std::vector<SweepPoint> sweep_region(const CertificateBundle& b, const std::vector<double>& tau_grid,
                                     const std::vector<double>& eps_grid, int workers) {
    b.validate();
    for (double t : tau_grid) check_tau(t);
    for (double e : eps_grid) check_eps(e);

    const std::size_t ne = eps_grid.size();
    std::vector<SweepPoint> out(tau_grid.size() * ne);
    const double tmin = tau_min(b);
    const double sa1 = std::sqrt(b.alpha1);
    const double lW = b.ell_W();
    const double k12 = b.norm_P() * b.ell_T * b.ell_g / sa1;
    const double k21 = b.norm_P_inv() * lW;
    const double k22 = lW * b.ell_T * b.ell_g / sa1;

    auto run_row = [&](std::size_t i) {
        const double tau = tau_grid[i];
        const double cW = c_w(b, tau);
        const double emax = tau > tmin ? eps_max(b, tau) : 0.0;
        std::vector<double> cT(ne, b.c_T), cw(ne, cW), a12(ne, k12), a21(ne, k21), a22(ne, k22), rho(ne);
        kernels::SmallGainBatch batch{cT, cw, eps_grid, a12, a21, a22};
        kernels::spectral_radius(batch, rho);
        for (std::size_t j = 0; j < ne; ++j) {
            out[i * ne + j] = SweepPoint{tau, eps_grid[j], rho[j], in_region(tau, eps_grid[j], tmin, emax)};
        }
    };

    const std::size_t rows = tau_grid.size();
    const std::size_t n_threads =
        std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), rows));
    if (n_threads == 1) {
        for (std::size_t i = 0; i < rows; ++i) run_row(i);
        return out;
    }
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t w = 0; w < n_threads; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < rows; i += n_threads) run_row(i);
        });
    }
    for (auto& t : pool) t.join();
    return out;
}

}  // namespace fes
