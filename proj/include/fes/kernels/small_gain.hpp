#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace fes::kernels {

/// Structure-of-arrays input for a batch of 2x2 small-gain matrices
///   M = [[1 - eps (1 - c_T),        k12 eps c_W              ],
///        [k21 (1 + c_T) eps c_W,    (1 + k22 eps c_W) c_W    ]]
/// with k12 = |P| ell_T ell_g / sqrt(alpha1), k21 = |P^-1| ell_W,
/// k22 = ell_W ell_T ell_g / sqrt(alpha1).
struct SmallGainBatch {
    std::span<const double> c_T;
    std::span<const double> c_W;
    std::span<const double> eps;
    std::span<const double> k12;
    std::span<const double> k21;
    std::span<const double> k22;

    [[nodiscard]] std::size_t size() const noexcept { return eps.size(); }
};

enum class Backend { Scalar, Avx2, Neon };

[[nodiscard]] const char* to_string(Backend b) noexcept;

/// Reference implementation; the SIMD variants must match it bit for bit.
void spectral_radius_scalar(const SmallGainBatch& in, std::span<double> rho);

#if defined(__x86_64__) || defined(_M_X64)
void spectral_radius_avx2(const SmallGainBatch& in, std::span<double> rho);
#endif
#if defined(__aarch64__)
void spectral_radius_neon(const SmallGainBatch& in, std::span<double> rho);
#endif

[[nodiscard]] bool backend_available(Backend b) noexcept;

/// Backend used by spectral_radius(): the forced one if set, else the best
/// available. FES_LAB_SIMD=scalar in the environment pins the scalar path.
[[nodiscard]] Backend active_backend() noexcept;
void force_backend(std::optional<Backend> b);

/// Dispatching entry point. Throws std::invalid_argument on size mismatch.
void spectral_radius(const SmallGainBatch& in, std::span<double> rho);

}  // namespace fes::kernels
