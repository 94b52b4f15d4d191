#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace hre {

// Row-major dense matrix. Small (p + K at most a few hundred) so no attempt
// is made at blocking or vectorisation.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static DenseMatrix identity(std::size_t n);
    static DenseMatrix diagonal(std::span<const double> d);
    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return entries_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const {
        return {entries_.data() + i * cols_, cols_};
    }
    std::span<double> row(std::size_t i) { return {entries_.data() + i * cols_, cols_}; }

    const std::vector<double>& entries() const { return entries_; }

    DenseMatrix transpose() const;
    // Largest |a_ij - a_ji| relative to the largest |a_ij|.
    double asymmetry() const;
    double max_abs() const;

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> entries_;
};

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);
std::vector<double> operator*(const DenseMatrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double max_abs(std::span<const double> a);

// Lower-triangular Cholesky factor. Throws NotPositiveDefinite when a pivot
// is <= 0 and DimensionMismatch for non-square or non-symmetric input.
DenseMatrix cholesky(const DenseMatrix& a);

std::vector<double> solve_spd(const DenseMatrix& a, std::span<const double> b);
double logdet_spd(const DenseMatrix& a);
DenseMatrix inverse_spd(const DenseMatrix& a);

// Symmetric positive definite matrix with arrowhead structure
//
//     [ corner   cross ]
//     [ cross^T  diag  ]
//
// where corner is p x p dense, cross is p x K and the trailing K x K block is
// diagonal. This is the shape of the negated joint (beta, nu) Hessian of the
// h-likelihood, where K can be much larger than p.
struct ArrowheadSpd {
    DenseMatrix corner;
    DenseMatrix cross;
    std::vector<double> diag;

    std::size_t size() const { return corner.rows() + diag.size(); }

    // corner - cross * diag^{-1} * cross^T
    DenseMatrix schur_complement() const;
    // sum_i log diag_i + log det(schur complement)
    double logdet() const;
    // Full (p + K) x (p + K) inverse assembled blockwise.
    DenseMatrix inverse() const;
    DenseMatrix to_dense() const;
};

}  // namespace hre
