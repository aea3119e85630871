#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "censaft/errors.hpp"

namespace censaft {

using Vector = std::vector<double>;

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    Vector row(std::size_t i) const {
        return Vector(data_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
                      data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_));
    }

    const std::vector<double>& data() const { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Vector matvec(const Matrix& a, const Vector& x) {
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

inline double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm_inf(const Vector& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
// Throws NotPositiveDefinite when a pivot fails.
inline Matrix cholesky(const Matrix& a) {
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0.0) || !std::isfinite(diag)) {
            throw NotPositiveDefinite("matrix factorization failed at pivot " +
                                      std::to_string(j));
        }
        l(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

// Solves L L' x = b given the lower factor.
inline Vector cholesky_solve(const Matrix& l, const Vector& b) {
    const std::size_t n = l.rows();
    Vector y(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

// Solves the normal equations (X'W X) b = X'W y for diagonal weights; the
// caller maps NotPositiveDefinite onto its own error type when X'WX is
// singular for its purposes.
inline Vector weighted_normal_solve(const Matrix& x, const Vector& y,
                                    const Vector& w, double ridge = 0.0) {
    const std::size_t p = x.cols();
    Matrix g(p, p);
    Vector r(p, 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double wi = w[i];
        if (wi == 0.0) continue;
        for (std::size_t j = 0; j < p; ++j) {
            r[j] += wi * x(i, j) * y[i];
            for (std::size_t k = j; k < p; ++k) g(j, k) += wi * x(i, j) * x(i, k);
        }
    }
    for (std::size_t j = 0; j < p; ++j) {
        g(j, j) += ridge;
        for (std::size_t k = j + 1; k < p; ++k) g(k, j) = g(j, k);
    }
    return cholesky_solve(cholesky(g), r);
}

}  // namespace censaft
