#pragma once

// Underwater acoustic RSS channel: absorption, log-distance path loss with
// absorption, and the three noise regimes used in the evaluation.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "gutp/errors.hpp"
#include "gutp/numerics.hpp"

namespace gutp {

/// A k-dimensional point in meters.
using Position = std::vector<double>;

/// Absorption coefficient in dB/m for a carrier at `frequency_khz`.
template <std::floating_point T>
T absorption_coefficient(T frequency_khz) {
    if (!(frequency_khz >= T{0})) throw DomainError("absorption_coefficient: frequency must be >= 0 kHz");
    const T f2 = frequency_khz * frequency_khz;
    return (T(0.11) * f2 / (T{1} + f2) + T{44} * f2 / (T{4100} + f2) + T(2.75) * f2 / T{10000} +
            T(0.003)) *
           T(1e-3);
}

/// Propagation parameters. Units: dB/m, kHz, dBm, m.
struct Environment {
    double ple = 2.0;
    double frequency_khz = 9.0;
    double absorption_db_per_m = 0.0;
    double transmit_power_dbm = 0.0;
    double reference_distance_m = 1.0;

    /// Absorption derived from the carrier frequency.
    static Environment underwater(double ple, double frequency_khz, double transmit_power_dbm,
                                  double reference_distance_m = 1.0) {
        return Environment{ple, frequency_khz, absorption_coefficient(frequency_khz),
                           transmit_power_dbm, reference_distance_m};
    }

    void validate() const {
        if (!(ple > 0.0) || !std::isfinite(ple)) throw ConfigError("environment: ple must be > 0");
        if (!(frequency_khz >= 0.0)) throw ConfigError("environment: frequency_khz must be >= 0");
        if (!(absorption_db_per_m >= 0.0)) throw ConfigError("environment: absorption must be >= 0");
        if (!std::isfinite(transmit_power_dbm)) throw ConfigError("environment: transmit power must be finite");
        if (!(reference_distance_m > 0.0)) throw ConfigError("environment: reference_distance_m must be > 0");
    }
};

struct Scenario {
    std::vector<Position> anchors_m;
    Position target_m;
    Environment environment;

    std::size_t dimension() const noexcept { return target_m.size(); }
    std::size_t anchor_count() const noexcept { return anchors_m.size(); }
};

inline double distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ContractError("distance: dimension mismatch");
    Vector diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    return norm2(diff);
}

inline double distance(const Position& a, const Position& b) {
    return distance(std::span<const double>(a), std::span<const double>(b));
}

/// RSS in dBm with the noise term set to zero.
inline double noiseless_rss(const Position& target, const Position& anchor, const Environment& env) {
    const double d = distance(target, anchor);
    const double d0 = env.reference_distance_m;
    if (d < d0) {
        throw DomainError("noiseless_rss: distance " + format_shortest(d) +
                          " m is inside the reference distance");
    }
    return env.transmit_power_dbm - 10.0 * env.ple * std::log10(d / d0) -
           env.absorption_db_per_m * (d - d0);
}

enum class NoiseKind { zero_mean_gaussian, biased_gaussian, gaussian_plus_impulsive };

inline const char* to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::zero_mean_gaussian: return "zero_mean_gaussian";
        case NoiseKind::biased_gaussian: return "biased_gaussian";
        case NoiseKind::gaussian_plus_impulsive: return "gaussian_plus_impulsive";
    }
    return "unknown";
}

/// Additive RSS noise in dB.
///
/// For gaussian_plus_impulsive the Gaussian part and the Uniform[0, a]
/// impulsive part each carry variance sigma²/2, so the total standard
/// deviation is sigma_db, matching the other two kinds. That fixes
/// a = sigma·√6.
struct NoiseModel {
    NoiseKind kind = NoiseKind::zero_mean_gaussian;
    double sigma_db = 1.0;
    double mean_db = 0.0;
    double impulsive_upper_db = 0.0;

    static NoiseModel zero_mean(double sigma) { return {NoiseKind::zero_mean_gaussian, sigma, 0.0, 0.0}; }
    static NoiseModel biased(double sigma, double mean = 2.0) {
        return {NoiseKind::biased_gaussian, sigma, mean, 0.0};
    }
    static NoiseModel impulsive(double sigma, double mean = 2.0) {
        return {NoiseKind::gaussian_plus_impulsive, sigma, mean, sigma * std::sqrt(6.0)};
    }

    /// Noise scenarios 1-3 of the noise-characteristic study.
    static NoiseModel scenario(int id, double sigma) {
        switch (id) {
            case 1: return zero_mean(sigma);
            case 2: return biased(sigma);
            case 3: return impulsive(sigma);
            default: throw ConfigError("noise scenario must be 1, 2 or 3");
        }
    }

    /// Same kind and mean, different sigma (impulsive bound follows sigma).
    NoiseModel with_sigma(double sigma) const {
        NoiseModel m = *this;
        m.sigma_db = sigma;
        if (kind == NoiseKind::gaussian_plus_impulsive) m.impulsive_upper_db = sigma * std::sqrt(6.0);
        return m;
    }

    double expected_mean() const noexcept {
        return kind == NoiseKind::gaussian_plus_impulsive ? mean_db + impulsive_upper_db / 2.0 : mean_db;
    }

    void validate() const {
        if (!(sigma_db > 0.0) || !std::isfinite(sigma_db)) throw ConfigError("noise: sigma_db must be > 0");
        if (!std::isfinite(mean_db)) throw ConfigError("noise: mean_db must be finite");
        if (kind == NoiseKind::zero_mean_gaussian && mean_db != 0.0) {
            throw ConfigError("noise: zero_mean_gaussian requires mean_db = 0");
        }
        if (kind == NoiseKind::gaussian_plus_impulsive && !(impulsive_upper_db >= 0.0)) {
            throw ConfigError("noise: impulsive_upper_db must be >= 0");
        }
    }
};

/// One draw in dB.
template <std::uniform_random_bit_generator G>
double sample_noise(const NoiseModel& model, G& rng) {
    switch (model.kind) {
        case NoiseKind::zero_mean_gaussian:
            return std::normal_distribution<double>(0.0, model.sigma_db)(rng);
        case NoiseKind::biased_gaussian:
            return std::normal_distribution<double>(model.mean_db, model.sigma_db)(rng);
        case NoiseKind::gaussian_plus_impulsive: {
            const double g =
                std::normal_distribution<double>(model.mean_db, model.sigma_db / std::numbers::sqrt2)(rng);
            const double u = std::uniform_real_distribution<double>(0.0, model.impulsive_upper_db)(rng);
            return g + u;
        }
    }
    return 0.0;
}

struct MeasurementSet {
    std::vector<std::size_t> anchor_index;
    std::vector<double> rss_dbm;
    Environment environment;

    std::size_t size() const noexcept { return rss_dbm.size(); }

    void validate() const {
        if (anchor_index.size() != rss_dbm.size()) {
            throw InputError("measurements: anchor_index and rss_dbm differ in length");
        }
        for (double p : rss_dbm)
            if (!std::isfinite(p)) throw InputError("measurements: non-finite RSS value");
    }
};

/// Noisy RSS for every anchor, drawing from one stream in anchor order.
template <std::uniform_random_bit_generator G>
MeasurementSet generate_measurements(const Scenario& scenario, const NoiseModel& model, G& rng) {
    MeasurementSet m;
    m.environment = scenario.environment;
    m.anchor_index.reserve(scenario.anchor_count());
    m.rss_dbm.reserve(scenario.anchor_count());
    for (std::size_t i = 0; i < scenario.anchor_count(); ++i) {
        const double clean = noiseless_rss(scenario.target_m, scenario.anchors_m[i], scenario.environment);
        m.anchor_index.push_back(i);
        m.rss_dbm.push_back(clean + sample_noise(model, rng));
    }
    return m;
}

/// Noisy RSS where anchor i draws from its own stream `stream_for(i)`.
/// `labels[i]` (defaulting to i) is both the recorded anchor index and the
/// argument passed to `stream_for`, so a subset of anchors keeps the draws
/// it would have had in the full set.
template <class StreamFor>
    requires std::invocable<StreamFor&, std::size_t>
MeasurementSet generate_measurements(const Scenario& scenario, const NoiseModel& model,
                                     StreamFor&& stream_for, std::span<const std::size_t> labels = {}) {
    if (!labels.empty() && labels.size() != scenario.anchor_count()) {
        throw ContractError("generate_measurements: one label per anchor required");
    }
    MeasurementSet m;
    m.environment = scenario.environment;
    m.anchor_index.reserve(scenario.anchor_count());
    m.rss_dbm.reserve(scenario.anchor_count());
    for (std::size_t i = 0; i < scenario.anchor_count(); ++i) {
        const std::size_t label = labels.empty() ? i : labels[i];
        const double clean = noiseless_rss(scenario.target_m, scenario.anchors_m[i], scenario.environment);
        auto rng = stream_for(label);
        m.anchor_index.push_back(label);
        m.rss_dbm.push_back(clean + sample_noise(model, rng));
    }
    return m;
}

}  // namespace gutp
