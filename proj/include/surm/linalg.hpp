#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace surm {

using RealVec = std::vector<double>;
using ComplexVec = std::vector<std::complex<double>>;

/// Thrown when operand shapes do not line up.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Row-major dense matrix of doubles. The ground-truth representation that
/// every structured type materializes into.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  DenseMatrix transpose() const;
  RealVec column(std::size_t j) const;

  DenseMatrix& operator+=(const DenseMatrix& other);
  DenseMatrix& operator-=(const DenseMatrix& other);
  DenseMatrix& operator*=(double s);

  bool all_finite() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(double s, DenseMatrix a);

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// a^T * b without forming the transpose.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
/// a * b^T without forming the transpose.
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
RealVec matvec(const DenseMatrix& a, std::span<const double> x);
RealVec matvec_t(const DenseMatrix& a, std::span<const double> x);

double frobenius_norm(const DenseMatrix& a);
double frobenius_inner(const DenseMatrix& a, const DenseMatrix& b);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double max_abs_diff(std::span<const double> a, std::span<const double> b);
/// ||a - b||_2 / max(||b||_2, tiny)
double relative_error(std::span<const double> a, std::span<const double> b);

/// Singular values in descending order (one-sided Jacobi).
RealVec singular_values(const DenseMatrix& a);

/// Numerical rank with threshold sigma_1 * max(rows, cols) * eps.
std::size_t numerical_rank(const DenseMatrix& a);

/// Result of Gaussian elimination with partial pivoting.
struct LuDecomposition {
  DenseMatrix lu;
  std::vector<std::size_t> perm;
  int sign = 1;
  bool singular = false;
};

/// Pivots with |p| <= pivot_tol * max|a_ij| are treated as zero.
LuDecomposition lu_decompose(const DenseMatrix& a, double pivot_tol = 0.0);
RealVec lu_solve(const LuDecomposition& lu, std::span<const double> b);
double determinant(const DenseMatrix& a);

}  // namespace surm
