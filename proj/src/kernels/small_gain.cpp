#include "fes/kernels/small_gain.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#endif
#if defined(__aarch64__)
#include <arm_neon.h>
#endif

// Every backend evaluates the same expression tree in the same order, and this
// file is built without FMA contraction, so results agree bit for bit.

namespace fes::kernels {

namespace {

void check_sizes(const SmallGainBatch& in, std::span<double> rho) {
    const std::size_t n = in.size();
    if (in.c_T.size() != n || in.c_W.size() != n || in.k12.size() != n || in.k21.size() != n ||
        in.k22.size() != n || rho.size() != n) {
        throw std::invalid_argument("small-gain batch: mismatched array lengths");
    }
}

inline double rho_one(double cT, double cW, double eps, double k12, double k21, double k22) {
    const double a = 1.0 - eps * (1.0 - cT);
    const double b = (k12 * eps) * cW;
    const double c = ((k21 * (1.0 + cT)) * eps) * cW;
    const double d = (1.0 + (k22 * eps) * cW) * cW;
    const double diff = a - d;
    return 0.5 * ((a + d) + std::sqrt(diff * diff + (4.0 * b) * c));
}

void scalar_range(const SmallGainBatch& in, std::span<double> rho, std::size_t from) {
    for (std::size_t i = from; i < in.size(); ++i) {
        rho[i] = rho_one(in.c_T[i], in.c_W[i], in.eps[i], in.k12[i], in.k21[i], in.k22[i]);
    }
}

std::atomic<int> g_forced{-1};

}  // namespace

const char* to_string(Backend b) noexcept {
    switch (b) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
        case Backend::Neon: return "neon";
    }
    return "unknown";
}

void spectral_radius_scalar(const SmallGainBatch& in, std::span<double> rho) {
    check_sizes(in, rho);
    scalar_range(in, rho, 0);
}

#if defined(__x86_64__) || defined(_M_X64)
__attribute__((target("avx2"))) void spectral_radius_avx2(const SmallGainBatch& in, std::span<double> rho) {
    check_sizes(in, rho);
    const std::size_t n = in.size();
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d four = _mm256_set1_pd(4.0);
    const __m256d half = _mm256_set1_pd(0.5);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d cT = _mm256_loadu_pd(in.c_T.data() + i);
        const __m256d cW = _mm256_loadu_pd(in.c_W.data() + i);
        const __m256d eps = _mm256_loadu_pd(in.eps.data() + i);
        const __m256d k12 = _mm256_loadu_pd(in.k12.data() + i);
        const __m256d k21 = _mm256_loadu_pd(in.k21.data() + i);
        const __m256d k22 = _mm256_loadu_pd(in.k22.data() + i);

        const __m256d a = _mm256_sub_pd(one, _mm256_mul_pd(eps, _mm256_sub_pd(one, cT)));
        const __m256d b = _mm256_mul_pd(_mm256_mul_pd(k12, eps), cW);
        const __m256d c = _mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(k21, _mm256_add_pd(one, cT)), eps), cW);
        const __m256d d = _mm256_mul_pd(_mm256_add_pd(one, _mm256_mul_pd(_mm256_mul_pd(k22, eps), cW)), cW);
        const __m256d diff = _mm256_sub_pd(a, d);
        const __m256d disc = _mm256_add_pd(_mm256_mul_pd(diff, diff), _mm256_mul_pd(_mm256_mul_pd(four, b), c));
        const __m256d r = _mm256_mul_pd(half, _mm256_add_pd(_mm256_add_pd(a, d), _mm256_sqrt_pd(disc)));
        _mm256_storeu_pd(rho.data() + i, r);
    }
    scalar_range(in, rho, i);
}
#endif

#if defined(__aarch64__)
void spectral_radius_neon(const SmallGainBatch& in, std::span<double> rho) {
    check_sizes(in, rho);
    const std::size_t n = in.size();
    const float64x2_t one = vdupq_n_f64(1.0);
    const float64x2_t four = vdupq_n_f64(4.0);
    const float64x2_t half = vdupq_n_f64(0.5);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t cT = vld1q_f64(in.c_T.data() + i);
        const float64x2_t cW = vld1q_f64(in.c_W.data() + i);
        const float64x2_t eps = vld1q_f64(in.eps.data() + i);
        const float64x2_t k12 = vld1q_f64(in.k12.data() + i);
        const float64x2_t k21 = vld1q_f64(in.k21.data() + i);
        const float64x2_t k22 = vld1q_f64(in.k22.data() + i);

        const float64x2_t a = vsubq_f64(one, vmulq_f64(eps, vsubq_f64(one, cT)));
        const float64x2_t b = vmulq_f64(vmulq_f64(k12, eps), cW);
        const float64x2_t c = vmulq_f64(vmulq_f64(vmulq_f64(k21, vaddq_f64(one, cT)), eps), cW);
        const float64x2_t d = vmulq_f64(vaddq_f64(one, vmulq_f64(vmulq_f64(k22, eps), cW)), cW);
        const float64x2_t diff = vsubq_f64(a, d);
        const float64x2_t disc = vaddq_f64(vmulq_f64(diff, diff), vmulq_f64(vmulq_f64(four, b), c));
        const float64x2_t r = vmulq_f64(half, vaddq_f64(vaddq_f64(a, d), vsqrtq_f64(disc)));
        vst1q_f64(rho.data() + i, r);
    }
    scalar_range(in, rho, i);
}
#endif

bool backend_available(Backend b) noexcept {
    switch (b) {
        case Backend::Scalar: return true;
        case Backend::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Backend::Neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Backend active_backend() noexcept {
    const int forced = g_forced.load(std::memory_order_relaxed);
    if (forced >= 0) return static_cast<Backend>(forced);
    if (const char* env = std::getenv("FES_LAB_SIMD"); env && std::strcmp(env, "scalar") == 0) {
        return Backend::Scalar;
    }
    if (backend_available(Backend::Avx2)) return Backend::Avx2;
    if (backend_available(Backend::Neon)) return Backend::Neon;
    return Backend::Scalar;
}

void force_backend(std::optional<Backend> b) {
    if (b && !backend_available(*b)) {
        throw std::invalid_argument(std::string("SIMD backend not available: ") + to_string(*b));
    }
    g_forced.store(b ? static_cast<int>(*b) : -1, std::memory_order_relaxed);
}

void spectral_radius(const SmallGainBatch& in, std::span<double> rho) {
    switch (active_backend()) {
#if defined(__x86_64__) || defined(_M_X64)
        case Backend::Avx2: spectral_radius_avx2(in, rho); return;
#endif
#if defined(__aarch64__)
        case Backend::Neon: spectral_radius_neon(in, rho); return;
#endif
        default: spectral_radius_scalar(in, rho); return;
    }
}

}  // namespace fes::kernels
