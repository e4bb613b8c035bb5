#include "fes/random.hpp"

#include <cmath>

namespace fes {

double sample_uniform(Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    return dist(rng);
}

Vec sample_box(const BoxSet& box, Rng& rng) {
    Vec out(box.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        double lo = box.lower[i];
        double hi = box.upper[i];
        if (!std::isfinite(lo) && !std::isfinite(hi)) {
            lo = -1.0;
            hi = 1.0;
        } else if (!std::isfinite(lo)) {
            lo = hi - 1.0;
        } else if (!std::isfinite(hi)) {
            hi = lo + 1.0;
        }
        out[i] = (lo == hi) ? lo : sample_uniform(rng, lo, hi);
    }
    return out;
}

Vec sample_normal(Eigen::Index n, Rng& rng, double scale) {
    std::normal_distribution<double> dist(0.0, scale);
    Vec out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out[i] = dist(rng);
    }
    return out;
}

}  // namespace fes
