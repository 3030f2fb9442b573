#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "gutp/channel.hpp"
#include "gutp/crlb.hpp"
#include "gutp/errors.hpp"
#include "gutp/numerics.hpp"

namespace gutp {

/// Rank of {g_i = [c_iᵀ, ln10·d_i²]} measured as the smallest/largest
/// eigenvalue ratio of the column-equilibrated Σ g_i g_iᵀ.
inline double information_rank_ratio(const Scenario& s) {
    const std::size_t k = s.dimension();
    Matrix g(s.anchor_count(), k + 1);
    for (std::size_t i = 0; i < s.anchor_count(); ++i) {
        const Vector c = c_vector(s.target_m, s.anchors_m[i], s.environment);
        const double d = distance(s.target_m, s.anchors_m[i]);
        for (std::size_t j = 0; j < k; ++j) g(i, j) = c[j];
        g(i, k) = std::numbers::ln10 * d * d;
    }
    Matrix m = gram(g);
    Vector scale(k + 1);
    for (std::size_t j = 0; j <= k; ++j) scale[j] = m(j, j) > 0.0 ? 1.0 / std::sqrt(m(j, j)) : 0.0;
    for (std::size_t i = 0; i <= k; ++i)
        for (std::size_t j = 0; j <= k; ++j) m(i, j) *= scale[i] * scale[j];
    const auto eig = sym_eig(m);
    return eig.values.back() > 0.0 ? eig.values.front() / eig.values.back() : 0.0;
}

/// Throws ConfigError / GeometryError unless the scenario supports a
/// joint position and power estimate.
inline void validate_scenario(const Scenario& s) {
    s.environment.validate();
    const std::size_t k = s.dimension();
    if (k == 0) throw ConfigError("scenario: target_m is empty");
    for (std::size_t i = 0; i < s.anchor_count(); ++i) {
        if (s.anchors_m[i].size() != k) {
            throw ConfigError("scenario: anchors_m[" + std::to_string(i) + "] has dimension " +
                              std::to_string(s.anchors_m[i].size()) + ", expected " + std::to_string(k));
        }
        for (double x : s.anchors_m[i])
            if (!std::isfinite(x)) throw ConfigError("scenario: non-finite anchor coordinate");
    }
    for (double x : s.target_m)
        if (!std::isfinite(x)) throw ConfigError("scenario: non-finite target coordinate");
    if (s.anchor_count() < k + 2) {
        throw GeometryError("scenario: " + std::to_string(s.anchor_count()) + " anchors in " +
                            std::to_string(k) + "-D; at least " + std::to_string(k + 2) +
                            " are needed to estimate position and transmit power");
    }
    for (std::size_t i = 0; i < s.anchor_count(); ++i) {
        const double d = distance(s.target_m, s.anchors_m[i]);
        if (d < s.environment.reference_distance_m) {
            throw GeometryError("scenario: anchor " + std::to_string(i) + " is " + format_shortest(d) +
                                " m from the target, inside the reference distance");
        }
    }
    constexpr double kRankTolerance = 1e-10;
    if (!(information_rank_ratio(s) > kRankTolerance)) {
        throw GeometryError("scenario: anchor placement is degenerate (information vectors do not span " +
                            std::to_string(k + 1) + " dimensions)");
    }
}

/// Keeps the first `count` anchors.
inline Scenario with_anchor_prefix(const Scenario& s, std::size_t count) {
    if (count > s.anchor_count()) throw ConfigError("scenario: anchor count exceeds available anchors");
    Scenario out = s;
    out.anchors_m.resize(count);
    return out;
}

/// Ten-anchor 5 km cube, β = 2, f = 9 kHz, P_t = 0 dBm, d0 = 1 m.
inline Scenario reference_scenario() {
    Scenario s;
    const double meters[10][3] = {{3380, 1270, 4460}, {4220, 620, 2030}, {4290, 1870, 1540}, {30, 80, 2270},
                                  {440, 2650, 3970},  {2250, 3190, 4820}, {250, 4910, 4570}, {2590, 220, 1890},
                                  {3400, 3520, 3110}, {2870, 1520, 350}};
    for (const auto& a : meters) s.anchors_m.push_back({a[0], a[1], a[2]});
    s.target_m = {2980.0, 3750.0, 3000.0};
    s.environment = Environment::underwater(2.0, 9.0, 0.0, 1.0);
    return s;
}

}  // namespace gutp
