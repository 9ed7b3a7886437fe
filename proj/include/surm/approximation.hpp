#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "surm/linalg.hpp"
#include "surm/structured.hpp"

namespace surm {

/// Plain gradient descent settings shared by every fit_* routine.
struct FitConfig {
  explicit FitConfig(std::uint64_t seed_) : seed(seed_) {}

  /// Defaults for LdrGH fits (learning rate 1e-4; 0.01 diverges on N(0, 1)
  /// targets at n = 100).
  static FitConfig for_ldr(std::uint64_t seed_);

  double learning_rate = 0.1;
  std::size_t max_iters = 5000;
  std::size_t record_every = 10;
  std::uint64_t seed;
  /// Factors start as N(0, 1) * init_scale / sqrt(n).
  double init_scale = 1.0;

  void validate() const;
};

struct FitReport {
  double final_error = 0.0;      // relative Frobenius
  double final_abs_error = 0.0;  // ||A - M||_F
  std::size_t iterations = 0;
  std::vector<std::pair<std::size_t, double>> error_trace;
  Structured approximator = DenseMatrix();
};

/// Raised when the loss grows past 1e6 times its initial value or turns
/// non-finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t iter, double loss, double initial_loss);
  std::size_t iteration() const { return iter_; }
  double loss() const { return loss_; }
  double initial_loss() const { return initial_; }

 private:
  std::size_t iter_;
  double loss_;
  double initial_;
};

double frobenius_error(const DenseMatrix& a, const DenseMatrix& m);
/// ||A - M||_F / ||M||_F; throws std::domain_error when ||M||_F = 0.
double rel_frobenius_error(const DenseMatrix& a, const DenseMatrix& m);

/// Nearest circulant in Frobenius norm. Coefficient k (0-based) is the mean
/// of the n entries with (i - j) mod n = k; with 1-based indices this is
///   c_1 = (1/n) sum_j d_jj,
///   c_k = (1/n) [ sum_{j=1}^{k-1} d_{j, 1+j+n-k} + sum_{j=k}^{n} d_{j, j-k+1} ].
Circulant project_circulant(const DenseMatrix& d);

/// Symmetric Toeplitz fit with d_k = mean of the superdiagonal entries
/// a_{i, i+k}, i.e. weights 1/(n - k). This is the orthogonal projection for
/// symmetric inputs; for non-symmetric inputs only the upper triangle is read.
SymToeplitz project_sym_toeplitz(const DenseMatrix& d);

/// Orthogonal projection onto the (2n - 1)-dimensional Toeplitz subspace:
/// every diagonal is replaced by its mean.
Toeplitz project_toeplitz(const DenseMatrix& d);

// Loss/gradient kernels. Each returns ||model - M||_F^2 and writes the
// gradient into the non-null outputs.

double low_rank_loss_grad(const DenseMatrix& m, const DenseMatrix& g, const DenseMatrix& h, DenseMatrix* dg,
                          DenseMatrix* dh);
/// Symmetric rank-r model G G^T.
double sym_low_rank_loss_grad(const DenseMatrix& m, const DenseMatrix& g, DenseMatrix* dg);
double kronecker_loss_grad(const DenseMatrix& m, const DenseMatrix& a, const DenseMatrix& b, DenseMatrix* da,
                           DenseMatrix* db);
/// Tied model A kron A^T.
double kronecker_tied_loss_grad(const DenseMatrix& m, const DenseMatrix& a, DenseMatrix* da);
double ldr_loss_grad(const DenseMatrix& m, const DenseMatrix& g, const DenseMatrix& h, DenseMatrix* dg,
                     DenseMatrix* dh);

/// W(G, H) assembled from signed cyclic-diagonal sums in O(r n^2).
DenseMatrix ldr_materialize_fast(const DenseMatrix& g, const DenseMatrix& h);

enum class LowRankTie { kFree, kSymmetric };
enum class KronTie { kFree, kTransposed };

/// Gradient descent on ||G H^T - M||_F^2 (or ||G G^T - M||_F^2 when tied).
FitReport fit_low_rank(const DenseMatrix& m, std::size_t r, const FitConfig& cfg,
                       LowRankTie tie = LowRankTie::kFree);

/// Gradient descent on ||A kron B - M||_F^2 with A m1 x n1 and B m2 x n2
/// from the plan. kTransposed fixes B = A^T and needs m2 = n1, n2 = m1.
FitReport fit_kronecker(const DenseMatrix& m, const KronShapePlan& plan, const FitConfig& cfg,
                        KronTie tie = KronTie::kFree);

/// Gradient descent over G, H of W(G, H) = sum_i Z_1(g_i) Z_{-1}(h_i).
FitReport fit_ldr(const DenseMatrix& m, std::size_t r, const FitConfig& cfg);

/// Gradient descent over the parameters of the linear classes, used to
/// cross-check the closed-form projections. Stable for learning rates
/// below 1 / (2n).
FitReport fit_circulant_gd(const DenseMatrix& m, const FitConfig& cfg);
FitReport fit_toeplitz_gd(const DenseMatrix& m, const FitConfig& cfg);
FitReport fit_sym_toeplitz_gd(const DenseMatrix& m, const FitConfig& cfg);

nlohmann::json to_json(const FitReport& report);
/// "iter,error\n" header followed by one row per trace point.
std::string trace_csv(const FitReport& report);

}  // namespace surm
