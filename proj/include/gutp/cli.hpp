#pragma once

// Command-line front end: JSON scenario and measurement files, subcommand
// dispatch, CSV/JSON output. Needs CLI11.hpp and json.hpp on the include
// path; the numerical headers do not.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gutp/gutp.hpp"

namespace gutp::cli {

using Json = nlohmann::json;

/// Exit codes of `dispatch`.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitComputation = 2;

namespace detail {

/// Typed access to one JSON object with dotted field paths in diagnostics.
class Fields {
public:
    Fields(const Json& obj, std::string prefix) : obj_(&obj), prefix_(std::move(prefix)) {
        if (!obj.is_object()) throw ConfigError(where() + "must be a JSON object");
    }

    std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

    bool has(const std::string& key) const {
        seen_.insert(key);
        return obj_->contains(key) && !(*obj_)[key].is_null();
    }

    const Json& raw(const std::string& key) const {
        if (!has(key)) throw ConfigError("missing field '" + path(key) + "'");
        return (*obj_)[key];
    }

    double number(const std::string& key) const {
        const Json& v = raw(key);
        if (!v.is_number()) throw ConfigError("field '" + path(key) + "' must be a number");
        return v.get<double>();
    }

    double number_or(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::uint64_t unsigned_integer(const std::string& key) const {
        const Json& v = raw(key);
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
        throw ConfigError("field '" + path(key) + "' must be a non-negative integer");
    }

    bool boolean(const std::string& key) const {
        const Json& v = raw(key);
        if (!v.is_boolean()) throw ConfigError("field '" + path(key) + "' must be true or false");
        return v.get<bool>();
    }

    std::string text(const std::string& key) const {
        const Json& v = raw(key);
        if (!v.is_string()) throw ConfigError("field '" + path(key) + "' must be a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& key) const {
        const Json& v = raw(key);
        if (!v.is_array()) throw ConfigError("field '" + path(key) + "' must be an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) {
                throw ConfigError("field '" + path(key) + "[" + std::to_string(i) + "]' must be a number");
            }
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    std::vector<std::vector<double>> points(const std::string& key) const {
        const Json& v = raw(key);
        if (!v.is_array()) throw ConfigError("field '" + path(key) + "' must be an array of coordinate arrays");
        std::vector<std::vector<double>> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string at = path(key) + "[" + std::to_string(i) + "]";
            if (!v[i].is_array()) throw ConfigError("field '" + at + "' must be an array of numbers");
            std::vector<double> p;
            for (std::size_t j = 0; j < v[i].size(); ++j) {
                if (!v[i][j].is_number()) {
                    throw ConfigError("field '" + at + "[" + std::to_string(j) + "]' must be a number");
                }
                p.push_back(v[i][j].get<double>());
            }
            out.push_back(std::move(p));
        }
        return out;
    }

    /// Rejects keys that were never queried, which catches typos.
    void reject_unknown() const {
        for (const auto& [key, value] : obj_->items()) {
            if (!seen_.contains(key)) throw ConfigError("unknown field '" + path(key) + "'");
        }
    }

private:
    std::string where() const { return prefix_.empty() ? "document " : "field '" + prefix_ + "' "; }

    const Json* obj_;
    std::string prefix_;
    mutable std::set<std::string> seen_;
};

inline Json read_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw ConfigError("'" + path + "' is empty");
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline NoiseKind parse_noise_kind(const std::string& s, const std::string& field) {
    if (s == "zero_mean_gaussian") return NoiseKind::zero_mean_gaussian;
    if (s == "biased_gaussian") return NoiseKind::biased_gaussian;
    if (s == "gaussian_plus_impulsive") return NoiseKind::gaussian_plus_impulsive;
    throw ConfigError("field '" + field +
                      "' must be one of zero_mean_gaussian, biased_gaussian, gaussian_plus_impulsive");
}

inline SweepKind parse_sweep_kind(const std::string& s, const std::string& field) {
    for (SweepKind k : {SweepKind::sigma, SweepKind::anchor_count, SweepKind::ple, SweepKind::frequency,
                        SweepKind::noise_scenarios, SweepKind::sensitivity}) {
        if (s == to_string(k)) return k;
    }
    throw ConfigError("field '" + field +
                      "' must be one of sigma, anchor_count, ple, frequency, noise_scenarios, sensitivity");
}

inline WeightPlacement parse_placement(const std::string& s, const std::string& field) {
    if (s == "objective") return WeightPlacement::objective;
    if (s == "literal_matrix") return WeightPlacement::literal_matrix;
    throw ConfigError("field '" + field + "' must be objective or literal_matrix");
}

inline NoiseModel parse_noise(const Json& j) {
    const Fields f(j, "noise");
    NoiseModel m;
    if (f.has("kind")) m.kind = parse_noise_kind(f.text("kind"), f.path("kind"));
    m.sigma_db = f.number_or("sigma_db", 1.0);
    const double default_mean = m.kind == NoiseKind::zero_mean_gaussian ? 0.0 : 2.0;
    m.mean_db = f.number_or("mean_db", default_mean);
    if (m.kind == NoiseKind::gaussian_plus_impulsive) {
        m.impulsive_upper_db = f.number_or("impulsive_upper_db", m.sigma_db * std::sqrt(6.0));
    }
    f.reject_unknown();
    return m;
}

inline SolverConfig parse_solver(const Json& j) {
    const Fields f(j, "solver");
    SolverConfig s;
    if (f.has("weighted")) s.weighted = f.boolean("weighted");
    if (f.has("known_power")) s.known_power = f.boolean("known_power");
    if (f.has("placement")) s.placement = parse_placement(f.text("placement"), f.path("placement"));
    if (f.has("tol_phi")) s.tolerances.tol_phi = f.number("tol_phi");
    if (f.has("tol_lambda")) s.tolerances.tol_lambda = f.number("tol_lambda");
    if (f.has("max_iter")) {
        const auto it = f.unsigned_integer("max_iter");
        if (it == 0 || it > 100000) throw ConfigError("field 'solver.max_iter' must be in [1, 100000]");
        s.tolerances.max_iter = static_cast<int>(it);
    }
    f.reject_unknown();
    return s;
}

inline SweepSpec parse_sweep(const Json& j) {
    const Fields f(j, "sweep");
    SweepSpec s;
    if (f.has("kind")) s.kind = parse_sweep_kind(f.text("kind"), f.path("kind"));
    if (f.has("fixed_sigma_db")) s.fixed_sigma_db = f.number("fixed_sigma_db");
    if (f.has("min_anchors")) s.min_anchors = f.unsigned_integer("min_anchors");
    if (f.has("ple_grid")) s.ple_grid = f.numbers("ple_grid");
    if (f.has("frequency_grid_khz")) s.frequency_grid_khz = f.numbers("frequency_grid_khz");
    if (f.has("noise_scenarios")) {
        s.noise_scenarios.clear();
        for (double id : f.numbers("noise_scenarios")) {
            if (id != std::floor(id)) throw ConfigError("field 'sweep.noise_scenarios' must hold integers");
            s.noise_scenarios.push_back(static_cast<int>(id));
        }
    }
    if (f.has("bias_cases")) {
        const Json& arr = f.raw("bias_cases");
        if (!arr.is_array()) throw ConfigError("field 'sweep.bias_cases' must be an array of objects");
        s.bias_cases.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const Fields b(arr[i], "sweep.bias_cases[" + std::to_string(i) + "]");
            s.bias_cases.push_back({b.text("label"), b.number_or("ple_bias_pct", 0.0),
                                    b.number_or("absorption_bias_pct", 0.0)});
            b.reject_unknown();
        }
    }
    f.reject_unknown();
    return s;
}

}  // namespace detail

/// Builds and validates an experiment configuration from a parsed document.
/// Required: anchors_m, target_m, ple, frequency_khz. Optional:
/// transmit_power_dbm (0), reference_distance_m (1), absorption_db_per_m
/// (overrides the frequency-derived value), noise, sigma_grid_db,
/// mc_trials (3000), master_seed, solver, sweep.
inline ExperimentConfig parse_config(const Json& doc) {
    const detail::Fields f(doc, "");
    ExperimentConfig cfg;
    cfg.scenario.anchors_m = f.points("anchors_m");
    cfg.scenario.target_m = f.numbers("target_m");
    const double ple = f.number("ple");
    const double freq = f.number("frequency_khz");
    if (!(freq >= 0.0)) throw ConfigError("field 'frequency_khz' must be >= 0");
    const double pt = f.number_or("transmit_power_dbm", 0.0);
    const double d0 = f.number_or("reference_distance_m", 1.0);
    cfg.scenario.environment = Environment::underwater(ple, freq, pt, d0);
    if (f.has("absorption_db_per_m")) cfg.scenario.environment.absorption_db_per_m = f.number("absorption_db_per_m");
    if (f.has("noise")) cfg.noise = detail::parse_noise(f.raw("noise"));
    if (f.has("sigma_grid_db")) cfg.sigma_grid_db = f.numbers("sigma_grid_db");
    if (f.has("mc_trials")) cfg.mc_trials = f.unsigned_integer("mc_trials");
    if (f.has("master_seed")) cfg.master_seed = f.unsigned_integer("master_seed");
    if (f.has("solver")) cfg.solver = detail::parse_solver(f.raw("solver"));
    if (f.has("sweep")) cfg.sweep = detail::parse_sweep(f.raw("sweep"));
    f.reject_unknown();
    cfg.validate();
    return cfg;
}

inline ExperimentConfig parse_scenario(const std::string& path) { return parse_config(detail::read_json(path)); }

/// Measurement file: {"anchor_index": [...], "rss_dbm": [...]}.
inline MeasurementSet parse_measurements(const Json& doc, const ExperimentConfig& cfg) {
    const detail::Fields f(doc, "");
    MeasurementSet m;
    const Json& idx = f.raw("anchor_index");
    if (!idx.is_array()) throw ConfigError("field 'anchor_index' must be an array of integers");
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (!idx[i].is_number_unsigned() && !(idx[i].is_number_integer() && idx[i].get<std::int64_t>() >= 0)) {
            throw ConfigError("field 'anchor_index[" + std::to_string(i) + "]' must be a non-negative integer");
        }
        const auto a = idx[i].get<std::uint64_t>();
        if (a >= cfg.scenario.anchor_count()) {
            throw ConfigError("field 'anchor_index[" + std::to_string(i) + "]' refers to anchor " +
                              std::to_string(a) + " but the scenario has " +
                              std::to_string(cfg.scenario.anchor_count()));
        }
        m.anchor_index.push_back(static_cast<std::size_t>(a));
    }
    m.rss_dbm = f.numbers("rss_dbm");
    if (m.rss_dbm.size() != m.anchor_index.size()) {
        throw ConfigError("fields 'anchor_index' and 'rss_dbm' must have the same length");
    }
    f.reject_unknown();
    m.environment = cfg.scenario.environment;
    m.validate();
    return m;
}

inline MeasurementSet parse_measurements(const std::string& path, const ExperimentConfig& cfg) {
    return parse_measurements(detail::read_json(path), cfg);
}

/// Three significant digits in compact scientific form, e.g. 9.86e-4.
inline std::string format_scientific(double x, int digits = 3) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific, digits - 1);
    std::string s(buf, r.ptr);
    const auto e = s.find('e');
    if (e == std::string::npos) return s;
    std::string mant = s.substr(0, e);
    std::string exp = s.substr(e + 1);
    std::string sign;
    if (!exp.empty() && (exp[0] == '+' || exp[0] == '-')) {
        if (exp[0] == '-') sign = "-";
        exp.erase(0, 1);
    }
    exp.erase(0, std::min(exp.find_first_not_of('0'), exp.size() - 1));
    return mant + "e" + sign + exp;
}

namespace detail {

inline Json estimate_json(const Estimate& e) {
    Json j;
    j["position_m"] = e.position_m;
    j["transmit_power_dbm"] = e.transmit_power_dbm ? Json(*e.transmit_power_dbm) : Json(nullptr);
    j["power_valid"] = e.power_valid;
    j["lambda"] = e.lambda;
    j["iterations"] = e.iterations;
    j["kkt_stationarity"] = e.kkt_stationarity;
    j["kkt_constraint"] = e.kkt_constraint;
    j["kkt_min_eigenvalue"] = e.kkt_min_eigenvalue;
    return j;
}

inline int run_simulate(const std::string& config, const std::string& out_path, unsigned threads, bool timing,
                        std::ostream& out) {
    const ExperimentConfig cfg = parse_scenario(config);
    RunOptions run;
    run.threads = threads;
    run.measure_time = timing;
    const auto records = run_sweep(cfg, run);
    std::ofstream file(out_path, std::ios::binary | std::ios::trunc);
    if (!file) throw ConfigError("cannot write '" + out_path + "'");
    write_csv(file, records);
    file.close();
    if (!file) throw ConfigError("failed writing '" + out_path + "'");
    std::size_t failures = 0;
    for (const auto& r : records) failures += r.solver_failures;
    out << "wrote " << records.size() << " rows to " << out_path << " (" << cfg.mc_trials
        << " trials per point, " << failures << " solver failures)\n";
    if (timing) {
        for (const auto& r : records) {
            out << "seconds_per_solve " << r.sweep_coord << ' ' << format_csv_number(*r.seconds_per_solve) << '\n';
        }
    }
    return kExitOk;
}

inline int run_crlb(const std::string& config, std::ostream& out) {
    const ExperimentConfig cfg = parse_scenario(config);
    out << "sigma_db,crlb_t_m,crlb_p_db,crlb_t_known_power_m\n";
    for (double s : cfg.sigma_grid_db) {
        const auto u = fim_unknown_power(cfg.scenario, {s});
        const auto k = fim_known_power(cfg.scenario, {s});
        out << format_csv_number(s) << ',' << format_csv_number(u.crlb_t_m) << ','
            << format_csv_number(*u.crlb_p_db) << ',' << format_csv_number(k.crlb_t_m) << '\n';
    }
    return kExitOk;
}

inline int run_locate(const std::string& config, const std::string& meas, std::ostream& out) {
    const ExperimentConfig cfg = parse_scenario(config);
    const MeasurementSet m = parse_measurements(meas, cfg);
    const Estimate e = locate(m, cfg.scenario.anchors_m, cfg.scenario.environment, cfg.solver.locate_options());
    out << estimate_json(e).dump(2) << '\n';
    return kExitOk;
}

inline int run_weights(const std::string& config, const std::string& meas, std::ostream& out) {
    const ExperimentConfig cfg = parse_scenario(config);
    const MeasurementSet m = parse_measurements(meas, cfg);
    const WeightVector w = link_weights(m, cfg.scenario.environment);
    Json j;
    j["anchor_index"] = m.anchor_index;
    j["weights"] = w.weights;
    out << j.dump(2) << '\n';
    return kExitOk;
}

}  // namespace detail

/// Runs one subcommand. Returns 0 on success, 1 on usage or input errors,
/// 2 when the computation itself fails (degenerate geometry, solver
/// breakdown, model-domain violation).
inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
    CLI::App app{"GUTP: weighted RSS localization with unknown transmit power", "gutp"};
    app.require_subcommand(1, 1);

    std::string config;
    std::string csv_out;
    std::string meas;
    unsigned threads = 1;
    bool timing = false;
    double freq = 0.0;

    auto* sim = app.add_subcommand("simulate", std::string("Run the Monte Carlo sweep and write CSV columns: ") +
                                                   kCsvHeader);
    sim->add_option("--config", config, "Scenario JSON file")->required();
    sim->add_option("--out", csv_out, "Output CSV path")->required();
    sim->add_option("--threads", threads, "Worker threads (results do not depend on it)")
        ->check(CLI::Range(1u, 1024u));
    sim->add_flag("--timing", timing, "Measure mean seconds per solve (fills seconds_per_solve)");

    auto* crlb = app.add_subcommand("crlb", "Print CRLB_t (m) and CRLB_p (dB) across the sigma grid as CSV");
    crlb->add_option("--config", config, "Scenario JSON file")->required();

    auto* loc = app.add_subcommand("locate", "Estimate position and transmit power from a measurement file");
    loc->add_option("--config", config, "Scenario JSON file")->required();
    loc->add_option("--measurements", meas, "Measurement JSON file (anchor_index, rss_dbm)")->required();

    auto* wts = app.add_subcommand("weights", "Print the link weights for a measurement file");
    wts->add_option("--config", config, "Scenario JSON file")->required();
    wts->add_option("--measurements", meas, "Measurement JSON file (anchor_index, rss_dbm)")->required();

    auto* abs = app.add_subcommand("absorption", "Print the absorption coefficient in dB/m");
    abs->add_option("--freq-khz", freq, "Carrier frequency in kHz")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        if (code == 0) return kExitOk;
        err << app.help();
        return kExitUsage;
    }

    try {
        if (sim->parsed()) return detail::run_simulate(config, csv_out, threads, timing, out);
        if (crlb->parsed()) return detail::run_crlb(config, out);
        if (loc->parsed()) return detail::run_locate(config, meas, out);
        if (wts->parsed()) return detail::run_weights(config, meas, out);
        if (abs->parsed()) {
            out << format_scientific(absorption_coefficient(freq)) << '\n';
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ContractError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitComputation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitComputation;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace gutp::cli
