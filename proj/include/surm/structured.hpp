#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>

#include "surm/linalg.hpp"

namespace surm {

/// Circulant matrix parameterized by its first column c: M(i, j) = c[(i - j) mod n].
/// The transpose (first-row parameterization) has first column
/// (c[0], c[n-1], ..., c[1]).
class Circulant {
 public:
  explicit Circulant(RealVec c);
  std::size_t n() const { return c_.size(); }
  const RealVec& c() const { return c_; }

 private:
  RealVec c_;
};

/// General Toeplitz: M(i, j) = col[i - j] for i >= j, row[j - i] otherwise.
class Toeplitz {
 public:
  Toeplitz(RealVec col, RealVec row);
  std::size_t n() const { return col_.size(); }
  const RealVec& col() const { return col_; }
  const RealVec& row() const { return row_; }

 private:
  RealVec col_;
  RealVec row_;
};

/// Symmetric Toeplitz: M(i, j) = d[|i - j|].
class SymToeplitz {
 public:
  explicit SymToeplitz(RealVec d);
  std::size_t n() const { return d_.size(); }
  const RealVec& d() const { return d_; }

 private:
  RealVec d_;
};

/// A (m1 x n1) kron B (m2 x n2).
class Kronecker {
 public:
  Kronecker(DenseMatrix a, DenseMatrix b);
  std::size_t rows() const { return a_.rows() * b_.rows(); }
  std::size_t cols() const { return a_.cols() * b_.cols(); }
  const DenseMatrix& a() const { return a_; }
  const DenseMatrix& b() const { return b_; }

 private:
  DenseMatrix a_;
  DenseMatrix b_;
};

/// W = G H^T with G (m x r), H (n x r).
class LowRank {
 public:
  LowRank(DenseMatrix g, DenseMatrix h);
  std::size_t rank_bound() const { return g_.cols(); }
  const DenseMatrix& g() const { return g_; }
  const DenseMatrix& h() const { return h_; }

 private:
  DenseMatrix g_;
  DenseMatrix h_;
};

/// Low displacement rank matrix W(G, H) = sum_i Z_1(g_i) Z_{-1}(h_i), where
/// g_i and h_i are the columns of the n x r matrices G and H. r may be 0.
class LdrGH {
 public:
  LdrGH(DenseMatrix g, DenseMatrix h);
  std::size_t n() const { return g_.rows(); }
  std::size_t r() const { return g_.cols(); }
  const DenseMatrix& g() const { return g_; }
  const DenseMatrix& h() const { return h_; }

 private:
  DenseMatrix g_;
  DenseMatrix h_;
};

using Structured = std::variant<Circulant, Toeplitz, SymToeplitz, Kronecker, LowRank, LdrGH, DenseMatrix>;

std::string kind_name(const Structured& s);
std::size_t parameter_count(const Structured& s);

/// Dense f-circulant Z_f(v), built entry by entry.
DenseMatrix z_matrix(std::span<const double> v, double f);

DenseMatrix materialize(const Circulant& c);
DenseMatrix materialize(const Toeplitz& t);
DenseMatrix materialize(const SymToeplitz& t);
DenseMatrix materialize(const Kronecker& k);
DenseMatrix materialize(const LowRank& l);
DenseMatrix materialize(const LdrGH& l);
DenseMatrix materialize(const Structured& s);

/// Toeplitz view of a symmetric Toeplitz matrix.
Toeplitz to_toeplitz(const SymToeplitz& t);

RealVec circulant_matvec(const Circulant& c, std::span<const double> x);
/// Embeds T into a circulant of size next_pow2(2n - 1) and multiplies by FFT.
RealVec toeplitz_matvec(const Toeplitz& t, std::span<const double> x);
RealVec toeplitz_matvec(const SymToeplitz& t, std::span<const double> x);
/// (A kron B) x computed as the row-major flattening of A X B^T, where X is
/// x reshaped row-major to n1 x n2.
RealVec kronecker_matvec(const Kronecker& k, std::span<const double> x);
RealVec low_rank_matvec(const LowRank& l, std::span<const double> x);

enum class LdrPath {
  kAuto,   // dense for n <= 512, FFT above
  kDense,
  kFft,
};
RealVec ldr_matvec(const LdrGH& l, std::span<const double> x, LdrPath path = LdrPath::kAuto);

/// Fast matvec for any structured type (dense falls back to matvec).
RealVec apply(const Structured& s, std::span<const double> x);

/// lambda_j = sum_k c_k w_j^k with w_j = exp(2 pi i j / n).
ComplexVec circulant_eigenvalues(const Circulant& c);
std::complex<double> circulant_determinant(const Circulant& c);
/// min |lambda_j| > 1e-10 * max |lambda_j|.
bool circulant_nonsingular(const Circulant& c);

struct ToeplitzInvertibility {
  bool invertible = false;
  RealVec x;  // solves T x = e_1
  RealVec y;  // solves T y = e_n
};

/// Gohberg-Semencul test. Both systems are solved by Gaussian elimination
/// with partial pivoting; a pivot below n * eps * max|t_ij| marks the
/// systems as not uniquely solvable. Invertible iff both systems solve and
/// |x_1| > tolerance.
ToeplitzInvertibility toeplitz_invertible(const Toeplitz& t);
/// Symmetric case: only the first system is solved; y is x reversed.
ToeplitzInvertibility toeplitz_invertible(const SymToeplitz& t);

struct KronShapePlan {
  std::size_t m1 = 0, n1 = 0, m2 = 0, n2 = 0;
  std::size_t param_count = 0;
  std::size_t max_rank = 0;
  std::size_t lower_bound = 0;  // 2d
  bool degenerate = false;      // d = 1 or d prime
};

/// Factor pair (a, b), a <= b, a * b = d, with a the largest divisor not
/// above sqrt(d). A is b x a and B is a x b, so param_count = 2d and
/// max_rank = a^2. For d = 1 or prime d the plan is A 1 x d, B d x 1.
KronShapePlan optimal_kron_shapes(std::size_t d);

/// Numerical rank of the materialized matrix (SVD threshold
/// sigma_1 * max(m, n) * eps). Kronecker ranks are rank(A) * rank(B); the
/// dense rank is cross-checked when the product is at most 256 x 256.
std::size_t structured_rank(const Structured& s);

}  // namespace surm
