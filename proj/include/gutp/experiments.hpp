#pragma once

// Monte Carlo harness for the evaluation protocol: NRMSE of position and
// transmit power over seeded trials, swept over noise level, anchor count,
// path-loss exponent, carrier frequency, noise characteristic and biased
// model parameters, each paired with the matching CRLB.
//
// Trial m, anchor i always draws from stream_seed(master_seed, m, i). The
// same draws therefore feed every sweep point (common random numbers) and
// the result does not depend on how trials are spread over threads.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

#include "gutp/channel.hpp"
#include "gutp/crlb.hpp"
#include "gutp/errors.hpp"
#include "gutp/gtrs.hpp"
#include "gutp/random.hpp"
#include "gutp/scenario.hpp"

namespace gutp {

enum class SweepKind { sigma, anchor_count, ple, frequency, noise_scenarios, sensitivity };

inline const char* to_string(SweepKind k) {
    switch (k) {
        case SweepKind::sigma: return "sigma";
        case SweepKind::anchor_count: return "anchor_count";
        case SweepKind::ple: return "ple";
        case SweepKind::frequency: return "frequency";
        case SweepKind::noise_scenarios: return "noise_scenarios";
        case SweepKind::sensitivity: return "sensitivity";
    }
    return "unknown";
}

/// Relative error (percent, signed) in the solver's assumed β and α.
struct BiasCase {
    std::string label;
    double ple_bias_pct = 0.0;
    double absorption_bias_pct = 0.0;
};

inline std::vector<BiasCase> default_bias_cases() {
    return {{"a", 0.0, 0.0}, {"b", 5.0, 0.0}, {"c", 0.0, 5.0}, {"d", 10.0, 5.0}, {"e", 5.0, 10.0}, {"f", 10.0, 10.0}};
}

struct SweepSpec {
    SweepKind kind = SweepKind::sigma;
    /// Noise level for the anchor-count sweep.
    double fixed_sigma_db = 2.0;
    /// Anchor-count sweep runs N = min_anchors .. all, dropping the
    /// last-listed anchors first.
    std::size_t min_anchors = 6;
    std::vector<double> ple_grid{1.5, 1.75, 2.0, 2.25, 2.5};
    std::vector<double> frequency_grid_khz{9.0, 25.0, 50.0};
    std::vector<int> noise_scenarios{1, 2, 3};
    std::vector<BiasCase> bias_cases = default_bias_cases();
};

struct SolverConfig {
    bool weighted = true;
    bool known_power = false;
    WeightPlacement placement = WeightPlacement::objective;
    SolverOptions tolerances;

    LocateOptions locate_options() const { return {weighted, known_power, placement, tolerances}; }
};

struct ExperimentConfig {
    Scenario scenario = reference_scenario();
    NoiseModel noise = NoiseModel::zero_mean(1.0);
    std::vector<double> sigma_grid_db{1.0, 3.0, 5.0, 7.0, 9.0};
    std::size_t mc_trials = 3000;
    std::uint64_t master_seed = 20250101;
    SolverConfig solver;
    SweepSpec sweep;

    void validate() const {
        validate_scenario(scenario);
        noise.validate();
        if (mc_trials < 1) throw ConfigError("experiment: mc_trials must be >= 1");
        if (sigma_grid_db.empty()) throw ConfigError("experiment: sigma_grid_db is empty");
        for (double s : sigma_grid_db)
            if (!(s > 0.0)) throw ConfigError("experiment: sigma_grid_db entries must be > 0");
        if (sweep.kind == SweepKind::anchor_count) {
            const std::size_t k = scenario.dimension();
            if (sweep.min_anchors < k + 2) throw ConfigError("experiment: min_anchors must be >= dimension + 2");
            if (sweep.min_anchors > scenario.anchor_count()) {
                throw ConfigError("experiment: min_anchors exceeds the number of anchors");
            }
            if (!(sweep.fixed_sigma_db > 0.0)) throw ConfigError("experiment: fixed_sigma_db must be > 0");
        }
        if (sweep.kind == SweepKind::ple && sweep.ple_grid.empty()) throw ConfigError("experiment: ple_grid is empty");
        if (sweep.kind == SweepKind::frequency && sweep.frequency_grid_khz.empty()) {
            throw ConfigError("experiment: frequency_grid_khz is empty");
        }
        if (sweep.kind == SweepKind::noise_scenarios && sweep.noise_scenarios.empty()) {
            throw ConfigError("experiment: noise_scenarios is empty");
        }
        if (sweep.kind == SweepKind::sensitivity && sweep.bias_cases.empty()) {
            throw ConfigError("experiment: bias_cases is empty");
        }
        for (double b : sweep.ple_grid)
            if (!(b > 0.0)) throw ConfigError("experiment: ple_grid entries must be > 0");
        for (double f : sweep.frequency_grid_khz)
            if (!(f >= 0.0)) throw ConfigError("experiment: frequency_grid_khz entries must be >= 0");
        for (int id : sweep.noise_scenarios)
            if (id < 1 || id > 3) throw ConfigError("experiment: noise scenarios are 1, 2 or 3");
        for (const auto& b : sweep.bias_cases)
            if (!(b.ple_bias_pct > -100.0) || !(b.absorption_bias_pct >= -100.0)) {
                throw ConfigError("experiment: bias must keep β > 0 and α >= 0");
            }
    }
};

/// One coordinate of a sweep: the truth used to generate RSS and the
/// environment the solver assumes.
struct SweepPoint {
    std::string coordinate;
    Scenario truth;
    std::vector<std::size_t> anchor_labels;
    NoiseModel noise;
    Environment assumed;
};

/// 9 significant digits, '.' separator, locale independent.
inline std::string format_csv_number(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 9);
    return std::string(buf, r.ptr);
}

namespace detail {

inline std::vector<std::size_t> identity_labels(std::size_t n) {
    std::vector<std::size_t> l(n);
    for (std::size_t i = 0; i < n; ++i) l[i] = i;
    return l;
}

/// Anchor list indexed by label, so measurement anchor_index values
/// resolve correctly for anchor subsets.
inline std::vector<Position> labelled_anchors(const SweepPoint& point) {
    std::size_t size = 0;
    for (std::size_t l : point.anchor_labels) size = std::max(size, l + 1);
    std::vector<Position> by_label(size);
    for (std::size_t i = 0; i < point.anchor_labels.size(); ++i) by_label[point.anchor_labels[i]] = point.truth.anchors_m[i];
    return by_label;
}

inline SweepPoint make_point(std::string coord, Scenario truth, NoiseModel noise) {
    SweepPoint p;
    p.coordinate = std::move(coord);
    p.anchor_labels = identity_labels(truth.anchor_count());
    p.assumed = truth.environment;
    p.truth = std::move(truth);
    p.noise = noise;
    return p;
}

}  // namespace detail

inline std::vector<SweepPoint> expand_sweep(const ExperimentConfig& cfg) {
    std::vector<SweepPoint> points;
    const Scenario& base = cfg.scenario;
    const auto sigma_tag = [](double s) { return "sigma_db=" + format_shortest(s); };
    switch (cfg.sweep.kind) {
        case SweepKind::sigma:
            for (double s : cfg.sigma_grid_db) points.push_back(detail::make_point(sigma_tag(s), base, cfg.noise.with_sigma(s)));
            break;
        case SweepKind::anchor_count:
            for (std::size_t n = cfg.sweep.min_anchors; n <= base.anchor_count(); ++n) {
                points.push_back(detail::make_point("anchors=" + std::to_string(n), with_anchor_prefix(base, n),
                                                    cfg.noise.with_sigma(cfg.sweep.fixed_sigma_db)));
            }
            break;
        case SweepKind::ple:
            for (double beta : cfg.sweep.ple_grid) {
                Scenario s = base;
                s.environment.ple = beta;
                for (double sig : cfg.sigma_grid_db) {
                    points.push_back(detail::make_point("ple=" + format_shortest(beta) + ";" + sigma_tag(sig), s,
                                                        cfg.noise.with_sigma(sig)));
                }
            }
            break;
        case SweepKind::frequency:
            for (double f : cfg.sweep.frequency_grid_khz) {
                Scenario s = base;
                s.environment = Environment::underwater(base.environment.ple, f, base.environment.transmit_power_dbm,
                                                        base.environment.reference_distance_m);
                for (double sig : cfg.sigma_grid_db) {
                    points.push_back(detail::make_point("frequency_khz=" + format_shortest(f) + ";" + sigma_tag(sig),
                                                        s, cfg.noise.with_sigma(sig)));
                }
            }
            break;
        case SweepKind::noise_scenarios:
            for (int id : cfg.sweep.noise_scenarios) {
                for (double sig : cfg.sigma_grid_db) {
                    points.push_back(detail::make_point("noise_scenario=" + std::to_string(id) + ";" + sigma_tag(sig),
                                                        base, NoiseModel::scenario(id, sig)));
                }
            }
            break;
        case SweepKind::sensitivity:
            for (const auto& bias : cfg.sweep.bias_cases) {
                for (double sig : cfg.sigma_grid_db) {
                    SweepPoint p = detail::make_point("bias=" + bias.label + ";" + sigma_tag(sig), base,
                                                      cfg.noise.with_sigma(sig));
                    p.assumed.ple *= 1.0 + bias.ple_bias_pct / 100.0;
                    p.assumed.absorption_db_per_m *= 1.0 + bias.absorption_bias_pct / 100.0;
                    points.push_back(std::move(p));
                }
            }
            break;
    }
    return points;
}

struct TrialOutcome {
    bool solved = false;
    Position position_m;
    std::optional<double> transmit_power_dbm;
    int iterations = 0;
    std::string error;
};

inline MeasurementSet trial_measurements(const SweepPoint& point, std::uint64_t master_seed, std::size_t trial_index) {
    return generate_measurements(
        point.truth, point.noise, [&](std::size_t anchor) { return make_stream(master_seed, trial_index, anchor); },
        point.anchor_labels);
}

/// Measurement generation, weighting, GTRS solve and extraction for one
/// seeded trial. Solver failures are returned, not thrown.
inline TrialOutcome run_trial(const ExperimentConfig& cfg, const SweepPoint& point, std::size_t trial_index) {
    TrialOutcome out;
    const MeasurementSet m = trial_measurements(point, cfg.master_seed, trial_index);
    const std::vector<Position> by_label = detail::labelled_anchors(point);
    try {
        const Estimate e = locate(m, by_label, point.assumed, cfg.solver.locate_options());
        out.solved = true;
        out.position_m = e.position_m;
        out.transmit_power_dbm = e.transmit_power_dbm;
        out.iterations = e.iterations;
    } catch (const Error& ex) {
        out.error = ex.what();
    }
    return out;
}

/// Trial on the configuration's own scenario and noise model.
inline TrialOutcome run_trial(const ExperimentConfig& cfg, std::size_t trial_index) {
    return run_trial(cfg, detail::make_point("base", cfg.scenario, cfg.noise), trial_index);
}

struct ResultRecord {
    std::string sweep_coord;
    double nrmse_t_m = 0.0;
    std::optional<double> nrmse_p_db;
    double crlb_t_m = 0.0;
    std::optional<double> crlb_p_db;
    std::size_t power_failures = 0;
    std::size_t solver_failures = 0;
    std::size_t trials = 0;
    std::optional<double> seconds_per_solve;
};

struct RunOptions {
    unsigned threads = 1;
    bool measure_time = false;
    std::size_t timing_solves = 100;
};

/// Mean wall time of the full pipeline (weights, system, bisection,
/// extraction) over `solves` pre-generated trials, single threaded.
inline double measure_runtime(const ExperimentConfig& cfg, const SweepPoint& point, std::size_t solves = 100) {
    if (solves == 0) throw ConfigError("measure_runtime: solves must be positive");
    std::vector<MeasurementSet> sets;
    sets.reserve(solves);
    for (std::size_t i = 0; i < solves; ++i) sets.push_back(trial_measurements(point, cfg.master_seed, i));
    const std::vector<Position> by_label = detail::labelled_anchors(point);
    const LocateOptions opts = cfg.solver.locate_options();
    volatile double sink = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& m : sets) {
        try {
            sink = sink + locate(m, by_label, point.assumed, opts).lambda;
        } catch (const Error&) {
        }
    }
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count() / static_cast<double>(solves);
}

inline double measure_runtime(const ExperimentConfig& cfg, std::size_t solves = 100) {
    return measure_runtime(cfg, detail::make_point("base", cfg.scenario, cfg.noise), solves);
}

namespace detail {

inline std::vector<TrialOutcome> run_trials(const ExperimentConfig& cfg, const SweepPoint& point, unsigned threads) {
    std::vector<TrialOutcome> outcomes(cfg.mc_trials);
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cfg.mc_trials)));
    if (workers == 1) {
        for (std::size_t m = 0; m < cfg.mc_trials; ++m) outcomes[m] = run_trial(cfg, point, m);
        return outcomes;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t m = next++; m < cfg.mc_trials; m = next++) outcomes[m] = run_trial(cfg, point, m);
        });
    }
    pool.clear();
    return outcomes;
}

inline ResultRecord aggregate(const ExperimentConfig& cfg, const SweepPoint& point,
                              const std::vector<TrialOutcome>& outcomes) {
    ResultRecord r;
    r.sweep_coord = point.coordinate;
    r.trials = outcomes.size();
    double sum_t = 0.0;
    double sum_p = 0.0;
    std::size_t solved = 0;
    std::size_t power_ok = 0;
    const double pt = point.truth.environment.transmit_power_dbm;
    // Fixed trial order keeps the sums bit-identical across thread counts.
    for (const auto& o : outcomes) {
        if (!o.solved) {
            ++r.solver_failures;
            if (!cfg.solver.known_power) ++r.power_failures;
            continue;
        }
        ++solved;
        double e2 = 0.0;
        for (std::size_t j = 0; j < o.position_m.size(); ++j) {
            const double d = point.truth.target_m[j] - o.position_m[j];
            e2 += d * d;
        }
        sum_t += e2;
        if (!cfg.solver.known_power) {
            if (o.transmit_power_dbm) {
                const double d = pt - *o.transmit_power_dbm;
                sum_p += d * d;
                ++power_ok;
            } else {
                ++r.power_failures;
            }
        }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.nrmse_t_m = solved ? std::sqrt(sum_t / static_cast<double>(solved)) : nan;
    if (!cfg.solver.known_power) r.nrmse_p_db = power_ok ? std::sqrt(sum_p / static_cast<double>(power_ok)) : nan;

    try {
        const std::vector<double> sig{point.noise.sigma_db};
        if (cfg.solver.known_power) {
            r.crlb_t_m = fim_known_power(point.truth, sig).crlb_t_m;
        } else {
            const auto rep = fim_unknown_power(point.truth, sig);
            r.crlb_t_m = rep.crlb_t_m;
            r.crlb_p_db = rep.crlb_p_db;
        }
    } catch (const Error&) {
        r.crlb_t_m = nan;
        if (!cfg.solver.known_power) r.crlb_p_db = nan;
    }
    return r;
}

}  // namespace detail

/// Every sweep point, in expansion order. Throws ConfigError before any
/// trial runs if the configuration is inconsistent.
inline std::vector<ResultRecord> run_sweep(const ExperimentConfig& cfg, const RunOptions& run = {}) {
    cfg.validate();
    const auto points = expand_sweep(cfg);
    for (const auto& p : points) {
        p.noise.validate();
        p.truth.environment.validate();
        p.assumed.validate();
    }
    std::vector<ResultRecord> records;
    records.reserve(points.size());
    for (const auto& p : points) {
        ResultRecord r = detail::aggregate(cfg, p, detail::run_trials(cfg, p, run.threads));
        if (run.measure_time) r.seconds_per_solve = measure_runtime(cfg, p, run.timing_solves);
        records.push_back(std::move(r));
    }
    return records;
}

inline constexpr const char* kCsvHeader =
    "sweep_coord,nrmse_t_m,nrmse_p_db,crlb_t_m,crlb_p_db,power_failures,trials,seconds_per_solve";

/// Optional fields are written as empty cells.
inline void write_csv(std::ostream& os, const std::vector<ResultRecord>& records) {
    const auto opt = [](const std::optional<double>& v) { return v ? format_csv_number(*v) : std::string(); };
    os << kCsvHeader << '\n';
    for (const auto& r : records) {
        os << r.sweep_coord << ',' << format_csv_number(r.nrmse_t_m) << ',' << opt(r.nrmse_p_db) << ','
           << format_csv_number(r.crlb_t_m) << ',' << opt(r.crlb_p_db) << ',' << r.power_failures << ','
           << r.trials << ',' << opt(r.seconds_per_solve) << '\n';
    }
}

}  // namespace gutp
