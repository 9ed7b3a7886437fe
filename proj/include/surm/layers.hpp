#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>

#include <json.hpp>

#include "surm/linalg.hpp"
#include "surm/rng.hpp"
#include "surm/structured.hpp"

namespace surm {

double gelu(double x);
double gelu_grad(double x);

// ---------------------------------------------------------------------------
// Gradient primitives shared by the delta layers and the toy trainer.

/// out[k] = sum_i u[i] x[(i - k) mod n]: the gradient of <u, C(c) x> with
/// respect to the first column c.
RealVec circular_correlation(std::span<const double> u, std::span<const double> x);
/// C(c)^T u.
RealVec circulant_transpose_matvec(const Circulant& c, std::span<const double> u);

/// s[k + n - 1] = sum_{i - j = k} u[i] z[j] for k in (-n, n).
RealVec diagonal_correlation(std::span<const double> u, std::span<const double> z);
/// Gradient of <u, S(d) z> with respect to d for symmetric Toeplitz S(d).
RealVec sym_toeplitz_param_grad(std::span<const double> u, std::span<const double> z);

struct ToeplitzGrad {
  RealVec col;  // includes the shared corner
  RealVec row;  // row[0] is always 0
};
/// Gradient of <u, T z> with respect to the first column and first row.
ToeplitzGrad toeplitz_param_grad(std::span<const double> u, std::span<const double> z);
RealVec toeplitz_transpose_matvec(const Toeplitz& t, std::span<const double> u);

// Adjoints of the materialization maps. Given the accumulated outer product
// G = sum_s u_s x_s^T of a batch, these return the gradient of
// sum_s <u_s, M x_s> with respect to the parameters of M.
RealVec circulant_adjoint(const DenseMatrix& g);     // sums over (i - j) mod n = k
RealVec sym_toeplitz_adjoint(const DenseMatrix& g);  // sums over |i - j| = k
ToeplitzGrad toeplitz_adjoint(const DenseMatrix& g);

// ---------------------------------------------------------------------------
// LoRA-style updates W + alpha * dW.

/// dW = circulant with first column r1 (Hadamard) r2. r1 starts at zero.
struct CirculantHadamard {
  RealVec r1;
  RealVec r2;
};
/// dW x = T2 (T1 x) for symmetric Toeplitz T1 (zero-init) and T2.
struct SymToeplitzPair {
  RealVec t1;
  RealVec t2;
};
/// dW = A kron B with A zero-init.
struct KroneckerDelta {
  DenseMatrix a;
  DenseMatrix b;
};
/// dW = A B^T with A (n x r) zero-init and B (n x r).
struct LowRankDelta {
  DenseMatrix a;
  DenseMatrix b;
};

using DeltaParams = std::variant<CirculantHadamard, SymToeplitzPair, KroneckerDelta, LowRankDelta>;

enum class DeltaKind { kCirculantHadamard, kSymToeplitzPair, kKronecker, kLowRank };

struct SurmDelta {
  DeltaParams params;
  double alpha = 1.0;

  std::size_t dim() const;
  std::size_t parameter_count() const;
  std::string variant_name() const;
};

/// Zero factor as described per variant; the other factor is
/// N(0, 1) / sqrt(n). Kronecker shapes come from optimal_kron_shapes(n).
SurmDelta init_delta(DeltaKind kind, std::size_t n, Rng& rng, std::size_t rank = 1, double alpha = 1.0);

RealVec delta_forward(const SurmDelta& dw, std::span<const double> x);

struct DeltaGradients {
  DeltaParams params;  // same variant and shapes as the delta
  RealVec x;
};

/// Gradients of <upstream, delta_forward(dw, x)>; alpha is held fixed.
DeltaGradients delta_backward(const SurmDelta& dw, std::span<const double> x, std::span<const double> upstream);

/// Single structured matrix M with delta_forward(dw, x) = alpha * M x.
/// The symmetric Toeplitz pair merges to a dense product.
Structured merge_delta(const SurmDelta& dw);

nlohmann::json to_json(const SurmDelta& dw);
SurmDelta delta_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Adapter blocks Y = X + sigma(...) + b on row-major batches.

/// Y = X + gelu(f(r1 (Hadamard) r2, X)) + b; r1 random, r2 and b zero.
struct CirculantAdapter {
  RealVec r1;
  RealVec r2;
};
/// Y = X + gelu(T1 (T2 x)) + b per row; T1 and b zero, T2 random.
struct SymToeplitzAdapter {
  RealVec t1;
  RealVec t2;
};
/// Y = X + gelu(X (B kron A)) + b; B random, A and b zero.
struct KroneckerAdapter {
  DenseMatrix b;
  DenseMatrix a;
};
/// Y = X + gelu(X B) A + b; B (n x r) random, A (r x n) and b zero.
struct LowRankAdapter {
  DenseMatrix down;  // B
  DenseMatrix up;    // A
};

using AdapterParams = std::variant<CirculantAdapter, SymToeplitzAdapter, KroneckerAdapter, LowRankAdapter>;

enum class AdapterKind { kCirculant, kSymToeplitz, kKronecker, kLowRank };

struct SurmAdapter {
  AdapterParams params;
  RealVec bias;

  std::size_t dim() const { return bias.size(); }
};

SurmAdapter init_adapter(AdapterKind kind, std::size_t n, Rng& rng, std::size_t rank = 1);

DenseMatrix adapter_forward(const SurmAdapter& ad, const DenseMatrix& x);

}  // namespace surm
