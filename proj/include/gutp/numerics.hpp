#pragma once

// Small dense linear algebra for the solver and bound calculators. Matrix
// orders never exceed a dozen or so, so everything is written for clarity
// over asymptotics: cyclic Jacobi for symmetric eigenproblems, Cholesky for
// SPD solves.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gutp/errors.hpp"

namespace gutp {

/// Relative pivot / eigenvalue floor used by solve_spd and inv_sqrt_sym.
inline constexpr double kSingularityTolerance = 1e-12;

template <std::floating_point T>
class BasicMatrix {
public:
    using value_type = T;

    BasicMatrix() = default;
    BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{0})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    BasicMatrix(std::initializer_list<std::initializer_list<T>> init)
        : rows_(init.size()), cols_(init.size() ? init.begin()->size() : 0) {
        data_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_) {
                throw ContractError("BasicMatrix: ragged initializer");
            }
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static BasicMatrix identity(std::size_t n) {
        BasicMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
        return m;
    }

    static BasicMatrix diagonal(std::span<const T> d) {
        BasicMatrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    T& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const noexcept {
        return data_[i * cols_ + j];
    }

    std::span<T> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const T> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }

    std::vector<T> column(std::size_t j) const {
        std::vector<T> c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

    const std::vector<T>& data() const noexcept { return data_; }

    friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;
using Vector = std::vector<double>;

template <std::floating_point T>
BasicMatrix<T> transpose(const BasicMatrix<T>& a) {
    BasicMatrix<T> t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

template <std::floating_point T>
BasicMatrix<T> operator*(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
    if (a.cols() != b.rows()) throw ContractError("matrix product: inner dimensions differ");
    BasicMatrix<T> c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const T aik = a(i, k);
            if (aik == T{0}) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

template <std::floating_point T>
std::vector<T> operator*(const BasicMatrix<T>& a, std::span<const T> x) {
    if (a.cols() != x.size()) throw ContractError("matrix-vector product: size mismatch");
    std::vector<T> y(a.rows(), T{0});
    for (std::size_t i = 0; i < a.rows(); ++i) {
        T s{0};
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

template <std::floating_point T>
std::vector<T> operator*(const BasicMatrix<T>& a, const std::vector<T>& x) {
    return a * std::span<const T>(x);
}

template <std::floating_point T>
BasicMatrix<T> operator+(BasicMatrix<T> a, const BasicMatrix<T>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ContractError("matrix sum: shape mismatch");
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) += b(i, j);
    return a;
}

template <std::floating_point T>
BasicMatrix<T> operator*(T s, BasicMatrix<T> a) {
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) *= s;
    return a;
}

/// AᵀA.
template <std::floating_point T>
BasicMatrix<T> gram(const BasicMatrix<T>& a) {
    BasicMatrix<T> g(a.cols(), a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const T ari = a(r, i);
            for (std::size_t j = i; j < a.cols(); ++j) g(i, j) += ari * a(r, j);
        }
    for (std::size_t i = 0; i < a.cols(); ++i)
        for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
    return g;
}

/// Aᵀx.
template <std::floating_point T>
std::vector<T> transpose_times(const BasicMatrix<T>& a, std::span<const T> x) {
    if (a.rows() != x.size()) throw ContractError("transpose_times: size mismatch");
    std::vector<T> y(a.cols(), T{0});
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t j = 0; j < a.cols(); ++j) y[j] += a(r, j) * x[r];
    return y;
}

template <std::floating_point T>
T dot(std::span<const T> a, std::span<const T> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), T{0});
}

template <std::floating_point T>
T norm2(std::span<const T> a) {
    // Scaled to survive kilometre coordinates raised to fourth powers.
    T scale{0};
    for (T v : a) scale = std::max(scale, std::abs(v));
    if (scale == T{0}) return T{0};
    T s{0};
    for (T v : a) s += (v / scale) * (v / scale);
    return scale * std::sqrt(s);
}

inline double norm2(const Vector& a) { return norm2(std::span<const double>(a)); }
inline double dot(const Vector& a, const Vector& b) {
    return dot(std::span<const double>(a), std::span<const double>(b));
}

template <std::floating_point T>
T frobenius_norm(const BasicMatrix<T>& a) {
    return norm2(std::span<const T>(a.data()));
}

template <std::floating_point T>
T max_abs(const BasicMatrix<T>& a) {
    T m{0};
    for (T v : a.data()) m = std::max(m, std::abs(v));
    return m;
}

template <std::floating_point T>
T max_diagonal(const BasicMatrix<T>& a) {
    T m{0};
    for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) m = std::max(m, std::abs(a(i, i)));
    return m;
}

/// Symmetric within 1e-12 relative to the largest absolute entry.
template <std::floating_point T>
bool is_symmetric(const BasicMatrix<T>& a, T rel_tol = T(1e-12)) {
    if (!a.square()) return false;
    const T tol = rel_tol * max_abs(a);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol) return false;
    return true;
}

template <std::floating_point T>
void require_symmetric(const BasicMatrix<T>& a, const char* who) {
    if (!a.square()) throw ContractError(std::string(who) + ": matrix is not square");
    if (!is_symmetric(a)) throw ContractError(std::string(who) + ": matrix is not symmetric");
}

template <std::floating_point T>
struct SymEig {
    std::vector<T> values;    ///< ascending
    BasicMatrix<T> vectors;   ///< column j pairs with values[j]
};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
template <std::floating_point T>
SymEig<T> sym_eig(const BasicMatrix<T>& input) {
    require_symmetric(input, "sym_eig");
    const std::size_t n = input.rows();
    BasicMatrix<T> a = input;
    // Symmetrize exactly so rotations act on a truly symmetric matrix.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i) = (a(i, j) + a(j, i)) / T{2};
    BasicMatrix<T> v = BasicMatrix<T>::identity(n);

    const T scale = frobenius_norm(a);
    for (int sweep = 0; sweep < 100 && scale > T{0}; ++sweep) {
        T off{0};
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(off) <= std::numeric_limits<T>::epsilon() * T(1e-2) * scale) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const T apq = a(p, q);
                if (apq == T{0}) continue;
                const T theta = (a(q, q) - a(p, p)) / (T{2} * apq);
                const T t = (theta >= T{0} ? T{1} : T{-1}) /
                            (std::abs(theta) + std::sqrt(theta * theta + T{1}));
                const T c = T{1} / std::sqrt(t * t + T{1});
                const T s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const T akp = a(k, p);
                    const T akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const T apk = a(p, k);
                    const T aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = T{0};
                for (std::size_t k = 0; k < n; ++k) {
                    const T vkp = v(k, p);
                    const T vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

    SymEig<T> out{std::vector<T>(n), BasicMatrix<T>(n, n)};
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

/// Lower-triangular Cholesky factor; throws SingularityError naming the
/// first pivot that is not positive beyond 1e-12 of the largest diagonal.
template <std::floating_point T>
BasicMatrix<T> cholesky(const BasicMatrix<T>& a) {
    require_symmetric(a, "cholesky");
    const std::size_t n = a.rows();
    const T floor = T(kSingularityTolerance) * max_diagonal(a);
    BasicMatrix<T> l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        T d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > floor)) {
            throw SingularityError("matrix is not positive definite: pivot " + std::to_string(j) +
                                       " is " + format_shortest(d),
                                   j);
        }
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            T s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

template <std::floating_point T>
std::vector<T> cholesky_solve(const BasicMatrix<T>& l, std::span<const T> b) {
    const std::size_t n = l.rows();
    if (b.size() != n) throw ContractError("cholesky_solve: size mismatch");
    std::vector<T> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        T s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    std::vector<T> x(n);
    for (std::size_t i = n; i-- > 0;) {
        T s = y[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
        x[i] = s / l(i, i);
    }
    return x;
}

/// Solves a·x = b for symmetric positive definite a.
template <std::floating_point T>
std::vector<T> solve_spd(const BasicMatrix<T>& a, std::span<const T> b) {
    if (b.size() != a.rows()) throw ContractError("solve_spd: right-hand side has wrong length");
    return cholesky_solve(cholesky(a), b);
}

inline Vector solve_spd(const Matrix& a, const Vector& b) {
    return solve_spd(a, std::span<const double>(b));
}

/// Inverse of an SPD matrix, column by column.
template <std::floating_point T>
BasicMatrix<T> inverse_spd(const BasicMatrix<T>& a) {
    const BasicMatrix<T> l = cholesky(a);
    const std::size_t n = a.rows();
    BasicMatrix<T> inv(n, n);
    std::vector<T> e(n, T{0});
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(e.begin(), e.end(), T{0});
        e[j] = T{1};
        const auto col = cholesky_solve(l, std::span<const T>(e));
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) inv(i, j) = inv(j, i) = (inv(i, j) + inv(j, i)) / T{2};
    return inv;
}

/// V·diag(f(λ))·Vᵀ for an eigendecomposition.
template <std::floating_point T, class F>
BasicMatrix<T> spectral_function(const SymEig<T>& eig, F&& f) {
    const std::size_t n = eig.values.size();
    BasicMatrix<T> out(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const T fk = f(eig.values[k]);
        for (std::size_t i = 0; i < n; ++i) {
            const T vik = eig.vectors(i, k) * fk;
            for (std::size_t j = 0; j < n; ++j) out(i, j) += vik * eig.vectors(j, k);
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) out(i, j) = out(j, i) = (out(i, j) + out(j, i)) / T{2};
    return out;
}

/// a^{-1/2} for SPD a. Eigenvalues at or below 1e-12 of the largest
/// diagonal entry raise SingularityError carrying the eigen-index.
template <std::floating_point T>
BasicMatrix<T> inv_sqrt_sym(const BasicMatrix<T>& a) {
    const SymEig<T> eig = sym_eig(a);
    const T floor = T(kSingularityTolerance) * max_diagonal(a);
    for (std::size_t k = 0; k < eig.values.size(); ++k) {
        if (!(eig.values[k] > floor)) {
            throw SingularityError("inv_sqrt_sym: eigenvalue " + format_shortest(eig.values[k]) +
                                       " is not positive",
                                   k);
        }
    }
    return spectral_function(eig, [](T x) { return T{1} / std::sqrt(x); });
}

}  // namespace gutp
