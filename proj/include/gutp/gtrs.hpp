#pragma once

// Weighted RSS localization with unknown transmit power, posed as a
// generalized trust region subproblem (GTRS):
//
//   minimize ‖R z − v‖²  subject to  zᵀ H z + 2 hᵀ z = 0,
//   z = [t; ‖t‖²; u],  u = 10^{P_t/(5β)}.
//
// The optimum is z(λ) = (RᵀR + λH)⁻¹(Rᵀv − λh) where λ is the unique root
// of phi(λ) = z(λ)ᵀHz(λ) + 2hᵀz(λ) on (−1/λ*, ∞), λ* being the largest
// eigenvalue of the pencil (H, RᵀR). phi is strictly decreasing there, so
// the root is found by bisection.
//
// Internally the columns of R are equilibrated and the constraint is
// rescaled so that λ* = 1. Both transformations are congruences of the
// pencil: they leave the root, the minimizer and phi's sign unchanged,
// and every public quantity is reported in the original units.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gutp/channel.hpp"
#include "gutp/errors.hpp"
#include "gutp/numerics.hpp"
#include "gutp/weighting.hpp"

namespace gutp {

/// How link weights enter the least-squares rows.
enum class WeightPlacement {
    /// Rows scaled by √w_i, so the objective is Σ w_i·residual_i².
    objective,
    /// Rows scaled by w_i, i.e. ‖W(Rz − v)‖² with W = diag(w).
    literal_matrix,
};

struct GtrsSystem {
    Matrix design;            ///< weighted R, N × n
    Vector target;            ///< weighted v, N
    Matrix constraint_quad;   ///< H, n × n
    Vector constraint_lin;    ///< h, n
    std::size_t dimension = 0;
    std::size_t anchor_count = 0;

    std::size_t unknowns() const noexcept { return design.cols(); }
};

namespace detail {

inline double row_scale(double w, WeightPlacement placement) {
    if (!(w > 0.0) || !std::isfinite(w)) throw InputError("gtrs: weights must be positive and finite");
    return placement == WeightPlacement::objective ? std::sqrt(w) : w;
}

inline const Position& anchor_for(const std::vector<Position>& anchors, std::size_t index) {
    if (index >= anchors.size()) {
        throw InputError("gtrs: measurement references anchor " + std::to_string(index) +
                         " but only " + std::to_string(anchors.size()) + " are known");
    }
    return anchors[index];
}

/// q_i² = 10^{(P_i − α)/(5β)}.
inline double q_squared(double rss_dbm, const Environment& env) {
    return std::pow(10.0, (rss_dbm - env.absorption_db_per_m) / (5.0 * env.ple));
}

// Smallest/largest eigenvalue ratio of the column-equilibrated Gram matrix.
inline double equilibrated_rank_ratio(const Matrix& design) {
    const std::size_t n = design.cols();
    Vector scale(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double c = norm2(design.column(j));
        if (!(c > 0.0)) return 0.0;
        scale[j] = 1.0 / c;
    }
    Matrix g = gram(design);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) g(i, j) *= scale[i] * scale[j];
    const auto eig = sym_eig(g);
    return eig.values.front() / eig.values.back();
}

inline void require_full_rank(const Matrix& design) {
    constexpr double kRankTolerance = 1e-10;
    if (design.rows() < design.cols()) {
        throw GeometryError("gtrs: " + std::to_string(design.rows()) + " anchors cannot determine " +
                            std::to_string(design.cols()) +
                            " unknowns; add anchors (at least dimension + 2 are needed)");
    }
    const double ratio = equilibrated_rank_ratio(design);
    if (!(ratio > kRankTolerance)) {
        throw GeometryError("gtrs: design matrix is numerically rank deficient (eigenvalue ratio " +
                            format_shortest(ratio) + "); add or relocate anchors");
    }
}

inline void check_inputs(const MeasurementSet& m, const WeightVector& w, const Environment& env) {
    m.validate();
    env.validate();
    if (w.size() != m.size()) throw ContractError("gtrs: one weight per measurement required");
}

}  // namespace detail

/// Weighted system for joint position / transmit-power estimation.
/// Row i before weighting is
/// [−(10β/ln10)q_i²s_iᵀ, (5β/ln10)q_i², −5β/ln10] with
/// v_i = −(5β/ln10)q_i²‖s_i‖².
inline GtrsSystem build_system(const MeasurementSet& measurements, const WeightVector& weights,
                               const std::vector<Position>& anchors, const Environment& env,
                               WeightPlacement placement = WeightPlacement::objective) {
    detail::check_inputs(measurements, weights, env);
    const std::size_t n_links = measurements.size();
    if (n_links == 0) throw ConfigError("gtrs: no measurements");
    const std::size_t k = detail::anchor_for(anchors, measurements.anchor_index.front()).size();
    const std::size_t n = k + 2;
    const double kappa = 5.0 * env.ple / std::numbers::ln10;

    GtrsSystem sys;
    sys.dimension = k;
    sys.anchor_count = n_links;
    sys.design = Matrix(n_links, n);
    sys.target = Vector(n_links);
    for (std::size_t i = 0; i < n_links; ++i) {
        const Position& s = detail::anchor_for(anchors, measurements.anchor_index[i]);
        if (s.size() != k) throw ContractError("gtrs: anchors differ in dimension");
        const double q2 = detail::q_squared(measurements.rss_dbm[i], env);
        const double r = detail::row_scale(weights[i], placement);
        for (std::size_t j = 0; j < k; ++j) sys.design(i, j) = r * (-2.0 * kappa * q2 * s[j]);
        sys.design(i, k) = r * kappa * q2;
        sys.design(i, k + 1) = r * (-kappa);
        sys.target[i] = r * (-kappa * q2 * dot(s, s));
    }
    sys.constraint_quad = Matrix(n, n);
    for (std::size_t j = 0; j < k; ++j) sys.constraint_quad(j, j) = 1.0;
    sys.constraint_lin = Vector(n, 0.0);
    sys.constraint_lin[k] = -0.5;

    detail::require_full_rank(sys.design);
    return sys;
}

/// Same construction with P_t known: the u column is moved to the right-hand
/// side and the unknown vector shrinks to [t; ‖t‖²].
inline GtrsSystem build_known_power_system(const MeasurementSet& measurements, const WeightVector& weights,
                                           const std::vector<Position>& anchors, const Environment& env,
                                           WeightPlacement placement = WeightPlacement::objective) {
    detail::check_inputs(measurements, weights, env);
    const std::size_t n_links = measurements.size();
    if (n_links == 0) throw ConfigError("gtrs: no measurements");
    const std::size_t k = detail::anchor_for(anchors, measurements.anchor_index.front()).size();
    const std::size_t n = k + 1;
    const double kappa = 5.0 * env.ple / std::numbers::ln10;
    const double u = std::pow(10.0, env.transmit_power_dbm / (5.0 * env.ple));

    GtrsSystem sys;
    sys.dimension = k;
    sys.anchor_count = n_links;
    sys.design = Matrix(n_links, n);
    sys.target = Vector(n_links);
    for (std::size_t i = 0; i < n_links; ++i) {
        const Position& s = detail::anchor_for(anchors, measurements.anchor_index[i]);
        if (s.size() != k) throw ContractError("gtrs: anchors differ in dimension");
        const double q2 = detail::q_squared(measurements.rss_dbm[i], env);
        const double r = detail::row_scale(weights[i], placement);
        for (std::size_t j = 0; j < k; ++j) sys.design(i, j) = r * (-2.0 * kappa * q2 * s[j]);
        sys.design(i, k) = r * kappa * q2;
        sys.target[i] = r * (-kappa * q2 * dot(s, s) + kappa * u);
    }
    sys.constraint_quad = Matrix(n, n);
    for (std::size_t j = 0; j < k; ++j) sys.constraint_quad(j, j) = 1.0;
    sys.constraint_lin = Vector(n, 0.0);
    sys.constraint_lin[k] = -0.5;

    detail::require_full_rank(sys.design);
    return sys;
}

/// Admissible multipliers: RᵀR + λH is positive definite on (lower, upper).
/// Bounds already include the guard that keeps them off the singular point.
struct LambdaInterval {
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    double largest_eigenvalue = 0.0;  ///< λ*
};

/// Spectral form of the pencil. With S = (R̃ᵀR̃)^{-1/2} and
/// S H' S = Q diag(μ) Qᵀ, every z(λ) is S Q y with
/// y_j = (g_j − λ' e_j) / (1 + λ' μ_j), which keeps phi cheap and well
/// conditioned right up to the singular endpoint.
class GtrsPencil {
public:
    explicit GtrsPencil(const GtrsSystem& system) : system_(&system) {
        const Matrix& r = system.design;
        const std::size_t n = r.cols();
        if (system.constraint_quad.rows() != n || system.constraint_quad.cols() != n ||
            system.constraint_lin.size() != n || system.target.size() != r.rows()) {
            throw ContractError("GtrsPencil: inconsistent system shapes");
        }
        require_symmetric(system.constraint_quad, "GtrsPencil");

        col_scale_.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double c = norm2(r.column(j));
            if (!(c > 0.0)) throw GeometryError("gtrs: design column " + std::to_string(j) + " is zero");
            col_scale_[j] = 1.0 / c;
        }
        Matrix rt = r;
        for (std::size_t i = 0; i < rt.rows(); ++i)
            for (std::size_t j = 0; j < n; ++j) rt(i, j) *= col_scale_[j];

        gram_ = gram(rt);
        const auto gram_eig = sym_eig(gram_);
        const double floor = kSingularityTolerance * max_diagonal(gram_);
        if (!(gram_eig.values.front() > floor)) {
            throw GeometryError("gtrs: RᵀR is singular (eigenvalue " +
                                format_shortest(gram_eig.values.front()) + ")");
        }
        const Matrix s = spectral_function(gram_eig, [](double x) { return 1.0 / std::sqrt(x); });

        Matrix h_eq(n, n);
        Vector lin_eq(n);
        for (std::size_t i = 0; i < n; ++i) {
            lin_eq[i] = system.constraint_lin[i] * col_scale_[i];
            for (std::size_t j = 0; j < n; ++j)
                h_eq(i, j) = system.constraint_quad(i, j) * col_scale_[i] * col_scale_[j];
        }
        const auto pencil_eig = sym_eig(s * h_eq * s);
        lambda_star_ = pencil_eig.values.back();

        double norm = lambda_star_;
        if (!(norm > 0.0)) {
            norm = std::max(std::abs(pencil_eig.values.front()), std::abs(pencil_eig.values.back()));
        }
        unit_ = norm > 0.0 ? 1.0 / norm : 1.0;

        // Eigenvalues that are zero up to rounding are snapped to zero so a
        // semidefinite H does not produce a spurious finite upper bound.
        constexpr double kZeroEigenvalue = 1e-12;
        mu_.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            mu_[j] = pencil_eig.values[j] * unit_;
            if (std::abs(mu_[j]) <= kZeroEigenvalue) mu_[j] = 0.0;
        }
        basis_ = s * pencil_eig.vectors;

        const Vector rhs = transpose_times(rt, std::span<const double>(system.target));
        g_ = transpose_times(basis_, std::span<const double>(rhs));
        Vector lin_n = lin_eq;
        for (double& x : lin_n) x *= unit_;
        e_ = transpose_times(basis_, std::span<const double>(lin_n));

        const double guard = 1e-12;
        const double mu_max = mu_.back();
        const double mu_min = mu_.front();
        if (mu_max > 0.0) {
            const double b = -1.0 / mu_max;
            lower_n_ = b + guard * (1.0 + std::abs(b));
        }
        if (mu_min < 0.0) {
            const double b = -1.0 / mu_min;
            upper_n_ = b - guard * (1.0 + std::abs(b));
        }
    }

    const GtrsSystem& system() const noexcept { return *system_; }

    LambdaInterval interval() const noexcept {
        return {lower_n_ * unit_, upper_n_ * unit_, lambda_star_};
    }

    /// λ = λ' · unit, where λ' is the multiplier of the normalized pencil.
    double unit() const noexcept { return unit_; }
    double gram_norm() const { return frobenius_norm(gram_); }
    double normalized_lower() const noexcept { return lower_n_; }
    double normalized_upper() const noexcept { return upper_n_; }

    struct Point {
        Vector y;
        double phi = 0.0;        ///< original units
        double magnitude = 0.0;  ///< |zᵀHz| + 2|hᵀz|, original units
    };

    Point evaluate_normalized(double lambda_n) const {
        const std::size_t n = mu_.size();
        Point p;
        p.y.resize(n);
        double quad = 0.0;
        double quad_abs = 0.0;
        double lin = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double denom = 1.0 + lambda_n * mu_[j];
            if (!(denom > 0.0)) {
                throw NumericalError("gtrs: RᵀR + λH is not positive definite at λ = " +
                                     format_shortest(lambda_n * unit_));
            }
            const double yj = (g_[j] - lambda_n * e_[j]) / denom;
            p.y[j] = yj;
            quad += mu_[j] * yj * yj;
            quad_abs += std::abs(mu_[j]) * yj * yj;
            lin += e_[j] * yj;
        }
        p.phi = (quad + 2.0 * lin) / unit_;
        p.magnitude = (quad_abs + 2.0 * std::abs(lin)) / unit_;
        if (!std::isfinite(p.phi)) {
            throw NumericalError("gtrs: phi is not finite at λ = " + format_shortest(lambda_n * unit_));
        }
        return p;
    }

    Vector z_from(const Vector& y) const {
        Vector z = basis_ * y;
        for (std::size_t j = 0; j < z.size(); ++j) z[j] *= col_scale_[j];
        return z;
    }

    Vector z(double lambda) const { return z_from(evaluate_normalized(lambda / unit_).y); }
    double phi(double lambda) const { return evaluate_normalized(lambda / unit_).phi; }

private:
    const GtrsSystem* system_;
    Vector col_scale_;
    Matrix gram_;
    Matrix basis_;
    Vector mu_;
    Vector g_;
    Vector e_;
    double lambda_star_ = 0.0;
    double unit_ = 1.0;
    double lower_n_ = -std::numeric_limits<double>::infinity();
    double upper_n_ = std::numeric_limits<double>::infinity();
};

inline LambdaInterval lambda_interval(const GtrsSystem& system) { return GtrsPencil(system).interval(); }

/// zᵀHz + 2hᵀz at z(λ).
inline double phi(double lambda, const GtrsSystem& system) { return GtrsPencil(system).phi(lambda); }

struct SolverOptions {
    /// Absolute |phi| stopping threshold in the constraint's units (m²).
    /// Default: 1e-10 · (1 + |zᵀHz| + 2|hᵀz|) at the current iterate, a
    /// tenfold margin so the constraint recomputed in original units stays
    /// within 1e-9 of that scale.
    std::optional<double> tol_phi;
    /// Bracket width at which bisection stops, in λ units.
    /// Default: 1e-12 · initial bracket width.
    std::optional<double> tol_lambda;
    int max_iter = 200;
};

struct GtrsSolution {
    Vector z;
    double lambda = 0.0;
    int iterations = 0;
    double kkt_stationarity = 0.0;  ///< ‖(RᵀR+λH)z − (Rᵀv−λh)‖
    double stationarity_scale = 0.0;
    double kkt_constraint = 0.0;    ///< zᵀHz + 2hᵀz
    double kkt_min_eigenvalue = 0.0;  ///< smallest eigenvalue of RᵀR + λH
    double gram_norm = 0.0;           ///< ‖RᵀR‖_F
};

namespace detail {

inline GtrsSolution finish(const GtrsPencil& pencil, double lambda_n, const Vector& y, int iterations) {
    const GtrsSystem& sys = pencil.system();
    GtrsSolution out;
    out.lambda = lambda_n * pencil.unit();
    out.iterations = iterations;
    out.z = pencil.z_from(y);

    const Matrix rtr = gram(sys.design);
    const Matrix a = rtr + out.lambda * sys.constraint_quad;
    Vector b = transpose_times(sys.design, std::span<const double>(sys.target));
    for (std::size_t j = 0; j < b.size(); ++j) b[j] -= out.lambda * sys.constraint_lin[j];
    Vector res = a * out.z;
    for (std::size_t j = 0; j < res.size(); ++j) res[j] -= b[j];
    out.kkt_stationarity = norm2(res);
    out.stationarity_scale = frobenius_norm(a) * norm2(out.z) + norm2(b);

    const Vector hz = sys.constraint_quad * out.z;
    out.kkt_constraint = dot(out.z, hz) + 2.0 * dot(sys.constraint_lin, out.z);
    out.kkt_min_eigenvalue = sym_eig(a).values.front();
    out.gram_norm = frobenius_norm(rtr);
    return out;
}

}  // namespace detail

/// Global minimizer of the GTRS by bisection on the multiplier.
inline GtrsSolution solve_gtrs(const GtrsSystem& system, const SolverOptions& options = {}) {
    if (options.max_iter <= 0) throw ConfigError("solve_gtrs: max_iter must be positive");
    if (options.tol_phi && !(*options.tol_phi > 0.0)) throw ConfigError("solve_gtrs: tol_phi must be > 0");
    if (options.tol_lambda && !(*options.tol_lambda > 0.0)) {
        throw ConfigError("solve_gtrs: tol_lambda must be > 0");
    }
    const GtrsPencil pencil(system);
    auto tolerance = [&](const GtrsPencil::Point& p) {
        return options.tol_phi ? *options.tol_phi : 1e-10 * (1.0 + p.magnitude);
    };
    constexpr int kMaxExpansions = 120;

    double lo = pencil.normalized_lower();
    double hi = pencil.normalized_upper();

    // The unconstrained minimizer may already be feasible.
    if (lo < 0.0 && 0.0 < hi) {
        const auto p0 = pencil.evaluate_normalized(0.0);
        if (std::abs(p0.phi) <= tolerance(p0)) return detail::finish(pencil, 0.0, p0.y, 0);
        if (p0.phi > 0.0)
            lo = std::max(lo, 0.0);
        else
            hi = std::min(hi, 0.0);
    }

    const double start = std::max(1.0, pencil.gram_norm());
    if (!std::isfinite(lo)) {
        double step = start;
        for (int i = 0;; ++i) {
            if (i == kMaxExpansions) throw InfeasibleError("gtrs: no lower bracket with phi > 0");
            if (pencil.evaluate_normalized(hi - step).phi > 0.0) break;
            step *= 2.0;
        }
        lo = hi - step;
    }
    if (!std::isfinite(hi)) {
        double step = start;
        for (int i = 0;; ++i) {
            if (i == kMaxExpansions) throw InfeasibleError("gtrs: no upper bracket with phi < 0");
            const double cand = std::max(lo, 0.0) + step;
            const auto p = pencil.evaluate_normalized(cand);
            if (std::abs(p.phi) <= tolerance(p)) return detail::finish(pencil, cand, p.y, 0);
            if (p.phi < 0.0) {
                hi = cand;
                break;
            }
            step *= 2.0;
        }
    }

    const auto p_lo = pencil.evaluate_normalized(lo);
    if (!(p_lo.phi > 0.0)) {
        if (std::abs(p_lo.phi) <= tolerance(p_lo)) return detail::finish(pencil, lo, p_lo.y, 0);
        throw InfeasibleError("gtrs: phi does not change sign on the admissible interval");
    }
    const auto p_hi = pencil.evaluate_normalized(hi);
    if (!(p_hi.phi < 0.0)) {
        if (std::abs(p_hi.phi) <= tolerance(p_hi)) return detail::finish(pencil, hi, p_hi.y, 0);
        throw InfeasibleError("gtrs: phi does not change sign on the admissible interval");
    }

    const double width_tol = options.tol_lambda ? *options.tol_lambda / pencil.unit() : 1e-12 * (hi - lo);
    for (int iter = 1; iter <= options.max_iter; ++iter) {
        const double mid = lo + 0.5 * (hi - lo);
        const auto p = pencil.evaluate_normalized(mid);
        if (std::abs(p.phi) <= tolerance(p) || mid <= lo || mid >= hi) {
            return detail::finish(pencil, mid, p.y, iter);
        }
        if (p.phi > 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= width_tol) {
            const double last = lo + 0.5 * (hi - lo);
            return detail::finish(pencil, last, pencil.evaluate_normalized(last).y, iter);
        }
    }
    throw ConvergenceError("gtrs: bisection did not converge in " + std::to_string(options.max_iter) +
                               " iterations",
                           lo * pencil.unit(), hi * pencil.unit());
}

struct ExtractedEstimate {
    Position position_m;
    std::optional<double> transmit_power_dbm;
};

/// Position from z_{1:k}; power 5β·log10(z_{k+2}) when that entry is positive.
inline ExtractedEstimate extract_estimate(const Vector& z, const Environment& env) {
    if (z.size() < 3) throw ContractError("extract_estimate: z must hold [t; |t|^2; u]");
    const std::size_t k = z.size() - 2;
    ExtractedEstimate out;
    out.position_m.assign(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(k));
    const double u = z[k + 1];
    if (u > 0.0 && std::isfinite(u)) out.transmit_power_dbm = 5.0 * env.ple * std::log10(u);
    return out;
}

struct Estimate {
    Vector z;
    Position position_m;
    std::optional<double> transmit_power_dbm;
    double lambda = 0.0;
    int iterations = 0;
    double kkt_stationarity = 0.0;
    double kkt_constraint = 0.0;
    double kkt_min_eigenvalue = 0.0;
    bool power_valid = false;
};

namespace detail {

inline Estimate to_estimate(GtrsSolution&& s) {
    Estimate e;
    e.z = std::move(s.z);
    e.lambda = s.lambda;
    e.iterations = s.iterations;
    e.kkt_stationarity = s.kkt_stationarity;
    e.kkt_constraint = s.kkt_constraint;
    e.kkt_min_eigenvalue = s.kkt_min_eigenvalue;
    return e;
}

}  // namespace detail

/// Joint position and transmit-power estimate; `env` supplies β for the
/// power extraction.
inline Estimate solve(const GtrsSystem& system, const Environment& env, const SolverOptions& options = {}) {
    if (system.unknowns() != system.dimension + 2) {
        throw ContractError("solve: system was not built for unknown transmit power");
    }
    Estimate e = detail::to_estimate(solve_gtrs(system, options));
    auto x = extract_estimate(e.z, env);
    e.position_m = std::move(x.position_m);
    e.transmit_power_dbm = x.transmit_power_dbm;
    e.power_valid = x.transmit_power_dbm.has_value();
    return e;
}

/// Position-only estimate for a system from build_known_power_system.
inline Estimate solve_known_power(const GtrsSystem& system, const SolverOptions& options = {}) {
    if (system.unknowns() != system.dimension + 1) {
        throw ContractError("solve_known_power: system was not built with known transmit power");
    }
    Estimate e = detail::to_estimate(solve_gtrs(system, options));
    e.position_m.assign(e.z.begin(), e.z.begin() + static_cast<std::ptrdiff_t>(system.dimension));
    return e;
}

struct LocateOptions {
    bool weighted = true;
    bool known_power = false;
    WeightPlacement placement = WeightPlacement::objective;
    SolverOptions solver;
};

/// Full pipeline: weights, system, bisection, extraction. `anchors` is the
/// complete anchor list; measurements select from it by anchor_index.
inline Estimate locate(const MeasurementSet& measurements, const std::vector<Position>& anchors,
                       const Environment& assumed, const LocateOptions& options = {}) {
    const WeightVector w =
        options.weighted ? link_weights(measurements, assumed) : uniform_weights(measurements.size());
    if (options.known_power) {
        return solve_known_power(build_known_power_system(measurements, w, anchors, assumed, options.placement),
                                 options.solver);
    }
    return solve(build_system(measurements, w, anchors, assumed, options.placement), assumed, options.solver);
}

}  // namespace gutp
