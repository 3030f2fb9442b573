#pragma once

// Fisher information and Cramer-Rao lower bounds for RSS localization in
// the absorbing channel, with the transmit power either known or estimated
// jointly with the position. θ = [t; P_t].

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "gutp/channel.hpp"
#include "gutp/errors.hpp"
#include "gutp/numerics.hpp"

namespace gutp {

struct Theta {
    Position t;
    double transmit_power_dbm = 0.0;
};

namespace detail {

inline Vector offset(const Position& t, const Position& s) {
    if (t.size() != s.size()) throw ContractError("crlb: dimension mismatch");
    Vector d(t.size());
    for (std::size_t j = 0; j < t.size(); ++j) d[j] = t[j] - s[j];
    return d;
}

inline double nonzero_norm(const Vector& d) {
    const double n = norm2(d);
    if (!(n > 0.0)) throw DomainError("crlb: target coincides with an anchor");
    return n;
}

inline std::vector<double> expand_sigmas(const std::vector<double>& sigmas, std::size_t n) {
    if (sigmas.size() == 1) return std::vector<double>(n, sigmas.front());
    if (sigmas.size() != n) throw ContractError("crlb: need one sigma per anchor (or a single shared one)");
    for (double s : sigmas)
        if (!(s > 0.0)) throw ConfigError("crlb: sigma must be > 0");
    return sigmas;
}

}  // namespace detail

/// f_i = P_i − P_t + 10β·log10‖t−s_i‖ + α‖t−s_i‖ − α.
inline double residual_f(const Position& anchor, double rss_dbm, const Theta& theta, const Environment& env) {
    const double d = detail::nonzero_norm(detail::offset(theta.t, anchor));
    const double a = env.absorption_db_per_m;
    return rss_dbm - theta.transmit_power_dbm + 10.0 * env.ple * std::log10(d) + a * d - a;
}

/// c_i = 10β(t−s_i) + α·ln10·‖t−s_i‖(t−s_i).
inline Vector c_vector(const Position& t, const Position& s, const Environment& env) {
    Vector c = detail::offset(t, s);
    const double d = detail::nonzero_norm(c);
    const double f = 10.0 * env.ple + env.absorption_db_per_m * std::numbers::ln10 * d;
    for (double& x : c) x *= f;
    return c;
}

/// D_i = ∂c_i/∂t = 10β·I + α·ln10·(‖t−s_i‖·I + (t−s_i)(t−s_i)ᵀ/‖t−s_i‖).
inline Matrix d_matrix(const Position& t, const Position& s, const Environment& env) {
    const Vector r = detail::offset(t, s);
    const double d = detail::nonzero_norm(r);
    const double al = env.absorption_db_per_m * std::numbers::ln10;
    const std::size_t k = r.size();
    Matrix m(k, k);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) m(i, j) = al * r[i] * r[j] / d;
        m(i, i) += 10.0 * env.ple + al * d;
    }
    return m;
}

/// Gaussian log-likelihood of the RSS vector given θ.
inline double log_likelihood(const std::vector<double>& rss_dbm, const std::vector<Position>& anchors,
                             const Theta& theta, const Environment& env, const std::vector<double>& sigmas) {
    if (rss_dbm.size() != anchors.size()) throw ContractError("log_likelihood: one RSS value per anchor");
    const auto sig = detail::expand_sigmas(sigmas, anchors.size());
    double ll = 0.0;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        const double f = residual_f(anchors[i], rss_dbm[i], theta, env);
        ll += -0.5 * std::log(2.0 * std::numbers::pi * sig[i] * sig[i]) - f * f / (2.0 * sig[i] * sig[i]);
    }
    return ll;
}

/// Analytic Hessian of log_likelihood with respect to θ, (k+1)×(k+1).
inline Matrix hessian_loglik(const std::vector<double>& rss_dbm, const std::vector<Position>& anchors,
                             const Theta& theta, const Environment& env, const std::vector<double>& sigmas) {
    if (rss_dbm.size() != anchors.size()) throw ContractError("hessian_loglik: one RSS value per anchor");
    const auto sig = detail::expand_sigmas(sigmas, anchors.size());
    const std::size_t k = theta.t.size();
    const double ln10 = std::numbers::ln10;
    Matrix h(k + 1, k + 1);
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        const Vector r = detail::offset(theta.t, anchors[i]);
        const double d = detail::nonzero_norm(r);
        const double d2 = d * d;
        const double d4 = d2 * d2;
        const double inv_var = 1.0 / (sig[i] * sig[i]);
        const double f = residual_f(anchors[i], rss_dbm[i], theta, env);
        const Vector c = c_vector(theta.t, anchors[i], env);
        const Matrix dm = d_matrix(theta.t, anchors[i], env);
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = 0; b < k; ++b) {
                const double num = c[a] * c[b] + ln10 * d2 * f * dm(a, b) - 2.0 * ln10 * f * c[a] * r[b];
                h(a, b) -= inv_var * num / (ln10 * ln10 * d4);
            }
            h(a, k) += inv_var * c[a] / (ln10 * d2);
        }
        h(k, k) -= inv_var;
    }
    for (std::size_t a = 0; a < k; ++a) h(k, a) = h(a, k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < a; ++b) h(a, b) = h(b, a) = 0.5 * (h(a, b) + h(b, a));
    return h;
}

struct FimReport {
    Matrix fim;
    double crlb_t_m = 0.0;
    std::optional<double> crlb_p_db;
    double condition_estimate = 0.0;
};

namespace detail {

inline FimReport report_from(Matrix fim, bool with_power) {
    const auto eig = sym_eig(fim);
    const double hi = eig.values.back();
    const double lo = eig.values.front();
    if (!(lo > kSingularityTolerance * hi)) {
        throw GeometryError("crlb: Fisher information is not positive definite (smallest eigenvalue " +
                            format_shortest(lo) + "); anchor geometry is degenerate");
    }
    const Matrix inv = inverse_spd(fim);
    const std::size_t k = with_power ? fim.rows() - 1 : fim.rows();
    double trace = 0.0;
    for (std::size_t j = 0; j < k; ++j) trace += inv(j, j);
    FimReport rep;
    rep.crlb_t_m = std::sqrt(trace);
    if (with_power) rep.crlb_p_db = std::sqrt(inv(k, k));
    rep.condition_estimate = hi / lo;
    rep.fim = std::move(fim);
    return rep;
}

}  // namespace detail

/// F = [[A, b], [bᵀ, c]] for unknown transmit power, with
/// A = Σ c_i c_iᵀ/(σ_i²(ln10)²d_i⁴), b = −Σ c_i/(σ_i² ln10 d_i²), c = Σ 1/σ_i².
inline Matrix fisher_information(const Scenario& scenario, const std::vector<double>& sigmas, bool unknown_power) {
    const auto sig = detail::expand_sigmas(sigmas, scenario.anchor_count());
    const std::size_t k = scenario.dimension();
    const std::size_t n = unknown_power ? k + 1 : k;
    const double ln10 = std::numbers::ln10;
    Matrix f(n, n);
    for (std::size_t i = 0; i < scenario.anchor_count(); ++i) {
        const Vector c = c_vector(scenario.target_m, scenario.anchors_m[i], scenario.environment);
        const double d = distance(scenario.target_m, scenario.anchors_m[i]);
        const double d2 = d * d;
        const double inv_var = 1.0 / (sig[i] * sig[i]);
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = 0; b < k; ++b) f(a, b) += inv_var * c[a] * c[b] / (ln10 * ln10 * d2 * d2);
            if (unknown_power) f(a, k) -= inv_var * c[a] / (ln10 * d2);
        }
        if (unknown_power) f(k, k) += inv_var;
    }
    if (unknown_power)
        for (std::size_t a = 0; a < k; ++a) f(k, a) = f(a, k);
    return f;
}

/// CRLB_t = √trace([F⁻¹]_{1:k,1:k}) and CRLB_p = √[F⁻¹]_{k+1,k+1}.
/// `sigmas` holds one σ per anchor or a single shared value.
inline FimReport fim_unknown_power(const Scenario& scenario, const std::vector<double>& sigmas) {
    return detail::report_from(fisher_information(scenario, sigmas, true), true);
}

inline FimReport fim_known_power(const Scenario& scenario, const std::vector<double>& sigmas) {
    return detail::report_from(fisher_information(scenario, sigmas, false), false);
}

}  // namespace gutp
