#include "hre/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hre/errors.hpp"

namespace hre {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), entries_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (entries_.size() != rows_ * cols_) {
        throw DimensionMismatch("DenseMatrix: entry count " + std::to_string(entries_.size()) +
                                " does not match " + std::to_string(rows_) + "x" +
                                std::to_string(cols_));
    }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> d) {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> e;
    e.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionMismatch("from_rows: ragged rows");
        e.insert(e.end(), row.begin(), row.end());
    }
    return DenseMatrix(r, c, std::move(e));
}

DenseMatrix DenseMatrix::transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double DenseMatrix::max_abs() const {
    double m = 0.0;
    for (double v : entries_) m = std::max(m, std::abs(v));
    return m;
}

double DenseMatrix::asymmetry() const {
    if (rows_ != cols_) return INFINITY;
    double worst = 0.0;
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = i + 1; j < cols_; ++j)
            worst = std::max(worst, std::abs((*this)(i, j) - (*this)(j, i)));
    const double scale = max_abs();
    return scale > 0.0 ? worst / scale : worst;
}

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw DimensionMismatch("matrix product: inner dimensions differ");
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

std::vector<double> operator*(const DenseMatrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw DimensionMismatch("matrix-vector product: size mismatch");
    std::vector<double> y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
    return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double max_abs(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

namespace {

constexpr double kSymmetryTol = 1e-10;

void require_symmetric(const DenseMatrix& a, const char* who) {
    if (a.rows() != a.cols()) throw DimensionMismatch(std::string(who) + ": matrix not square");
    if (a.asymmetry() > kSymmetryTol)
        throw DimensionMismatch(std::string(who) + ": matrix not symmetric");
}

// Solves L L^T x = b in place given the lower factor.
void cholesky_solve_in_place(const DenseMatrix& l, std::span<double> x) {
    const std::size_t n = l.rows();
    for (std::size_t i = 0; i < n; ++i) {
        double s = x[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x[k];
        x[i] = s / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = x[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
        x[i] = s / l(i, i);
    }
}

}  // namespace

DenseMatrix cholesky(const DenseMatrix& a) {
    require_symmetric(a, "cholesky");
    const std::size_t n = a.rows();
    DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0)) {
            throw NotPositiveDefinite("cholesky: non-positive pivot " + std::to_string(d) +
                                      " at column " + std::to_string(j));
        }
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

std::vector<double> solve_spd(const DenseMatrix& a, std::span<const double> b) {
    if (a.rows() != b.size()) throw DimensionMismatch("solve_spd: rhs length mismatch");
    const DenseMatrix l = cholesky(a);
    std::vector<double> x(b.begin(), b.end());
    cholesky_solve_in_place(l, x);
    return x;
}

double logdet_spd(const DenseMatrix& a) {
    const DenseMatrix l = cholesky(a);
    double s = 0.0;
    for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
    return 2.0 * s;
}

DenseMatrix inverse_spd(const DenseMatrix& a) {
    const DenseMatrix l = cholesky(a);
    const std::size_t n = a.rows();
    DenseMatrix inv(n, n);
    std::vector<double> col(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(col.begin(), col.end(), 0.0);
        col[j] = 1.0;
        cholesky_solve_in_place(l, col);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    }
    // Symmetrise away round-off so downstream symmetry checks hold exactly.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double m = 0.5 * (inv(i, j) + inv(j, i));
            inv(i, j) = m;
            inv(j, i) = m;
        }
    return inv;
}

DenseMatrix ArrowheadSpd::schur_complement() const {
    const std::size_t p = corner.rows();
    const std::size_t k = diag.size();
    if (corner.cols() != p || cross.rows() != p || cross.cols() != k)
        throw DimensionMismatch("ArrowheadSpd: block shapes inconsistent");
    DenseMatrix s = corner;
    for (std::size_t g = 0; g < k; ++g) {
        if (!(diag[g] > 0.0))
            throw NotPositiveDefinite("ArrowheadSpd: diagonal entry " + std::to_string(g) +
                                      " is not positive");
        const double inv_d = 1.0 / diag[g];
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b) s(a, b) -= cross(a, g) * cross(b, g) * inv_d;
    }
    return s;
}

double ArrowheadSpd::logdet() const {
    const DenseMatrix s = schur_complement();
    double ld = 0.0;
    for (double d : diag) ld += std::log(d);
    return ld + logdet_spd(s);
}

DenseMatrix ArrowheadSpd::inverse() const {
    const std::size_t p = corner.rows();
    const std::size_t k = diag.size();
    const DenseMatrix s_inv = inverse_spd(schur_complement());

    // cross_scaled(:, g) = cross(:, g) / diag_g ; top-right block = -S^{-1} * cross_scaled
    DenseMatrix scaled(p, k);
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t g = 0; g < k; ++g) scaled(a, g) = cross(a, g) / diag[g];
    DenseMatrix top_right = s_inv * scaled;
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t g = 0; g < k; ++g) top_right(a, g) = -top_right(a, g);

    DenseMatrix inv(p + k, p + k);
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < p; ++b) inv(a, b) = s_inv(a, b);
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t g = 0; g < k; ++g) {
            inv(a, p + g) = top_right(a, g);
            inv(p + g, a) = top_right(a, g);
        }
    // bottom-right = D^{-1} + scaled^T S^{-1} scaled
    for (std::size_t g = 0; g < k; ++g)
        for (std::size_t h = g; h < k; ++h) {
            double v = 0.0;
            for (std::size_t a = 0; a < p; ++a) v -= scaled(a, g) * top_right(a, h);
            if (g == h) v += 1.0 / diag[g];
            inv(p + g, p + h) = v;
            inv(p + h, p + g) = v;
        }
    return inv;
}

DenseMatrix ArrowheadSpd::to_dense() const {
    const std::size_t p = corner.rows();
    const std::size_t k = diag.size();
    DenseMatrix m(p + k, p + k);
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < p; ++b) m(a, b) = corner(a, b);
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t g = 0; g < k; ++g) {
            m(a, p + g) = cross(a, g);
            m(p + g, a) = cross(a, g);
        }
    for (std::size_t g = 0; g < k; ++g) m(p + g, p + g) = diag[g];
    return m;
}

}  // namespace hre
