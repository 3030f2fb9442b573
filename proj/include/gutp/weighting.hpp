#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "gutp/channel.hpp"
#include "gutp/errors.hpp"

namespace gutp {

struct WeightVector {
    std::vector<double> weights;

    std::size_t size() const noexcept { return weights.size(); }
    double operator[](std::size_t i) const noexcept { return weights[i]; }
};

/// Gap between the noisy and noise-free value of
/// d·10^{αd/(10β)} / 10^{P_t/(10β)} when the RSS is off by `delta` dB.
/// Grows with both distance and |delta|, which is what motivates
/// down-weighting long links.
inline double deviation_diagnostic(double d, double p_t, double delta, const Environment& env) {
    if (!(d >= env.reference_distance_m)) throw DomainError("deviation_diagnostic: d below reference distance");
    if (!(env.ple > 0.0)) throw DomainError("deviation_diagnostic: ple must be > 0");
    const double tb = 10.0 * env.ple;
    const double y0 = d * std::pow(10.0, (env.absorption_db_per_m * d - p_t) / tb);
    return y0 * std::abs(std::pow(10.0, -delta / tb) - 1.0);
}

/// Normalized distance-based link weights.
///
/// With x_i = 10^{(−P_i+α)/(10β)} (a proxy for link length) and S = Σx_j,
/// w_i = (S − x_i) / ((N−1)·S). Weights sum to one and shrink as x_i grows.
/// Exponents are shifted by their maximum before exponentiation; the
/// common factor cancels in the ratio.
inline WeightVector link_weights(const MeasurementSet& measurements, const Environment& env) {
    const std::size_t n = measurements.size();
    if (n < 2) throw ConfigError("link_weights: at least two links are required");
    if (!(env.ple > 0.0)) throw ConfigError("link_weights: ple must be > 0");

    std::vector<double> expo(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = measurements.rss_dbm[i];
        if (!std::isfinite(p)) throw InputError("link_weights: non-finite RSS value");
        expo[i] = (-p + env.absorption_db_per_m) / (10.0 * env.ple);
    }
    const double top = *std::max_element(expo.begin(), expo.end());

    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::pow(10.0, expo[i] - top);
        if (!std::isfinite(x[i])) throw InputError("link_weights: link term is not finite");
    }
    const double sum = std::accumulate(x.begin(), x.end(), 0.0);

    WeightVector w;
    w.weights.resize(n);
    const double denom = static_cast<double>(n - 1) * sum;
    for (std::size_t i = 0; i < n; ++i) w.weights[i] = (sum - x[i]) / denom;
    return w;
}

/// 1/N for every link; the unweighted baseline.
inline WeightVector uniform_weights(std::size_t n) {
    if (n == 0) throw ConfigError("uniform_weights: no links");
    return WeightVector{std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

}  // namespace gutp
