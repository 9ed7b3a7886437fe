#include "surm/layers.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "surm/fft.hpp"
#include "surm/generators.hpp"
#include "surm/serialize.hpp"

namespace surm {

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

namespace {

void require_len(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(want) + ", got " +
                         std::to_string(got));
  }
}

RealVec cyclic_reverse(std::span<const double> v) {
  const std::size_t n = v.size();
  RealVec out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = v[(n - k) % n];
  return out;
}

RealVec hadamard(std::span<const double> a, std::span<const double> b) {
  RealVec out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] * b[k];
  return out;
}

void scale(RealVec& v, double s) {
  for (double& x : v) x *= s;
}

}  // namespace

RealVec circular_correlation(std::span<const double> u, std::span<const double> x) {
  require_len(x.size(), u.size(), "circular_correlation");
  return circulant_matvec(Circulant(cyclic_reverse(x)), u);
}

RealVec circulant_transpose_matvec(const Circulant& c, std::span<const double> u) {
  return circulant_matvec(Circulant(cyclic_reverse(c.c())), u);
}

RealVec diagonal_correlation(std::span<const double> u, std::span<const double> z) {
  require_len(z.size(), u.size(), "diagonal_correlation");
  const RealVec zr(z.rbegin(), z.rend());
  return linear_convolve(u, zr);
}

RealVec sym_toeplitz_param_grad(std::span<const double> u, std::span<const double> z) {
  const std::size_t n = u.size();
  const RealVec s = diagonal_correlation(u, z);
  RealVec g(n);
  g[0] = s[n - 1];
  for (std::size_t k = 1; k < n; ++k) g[k] = s[n - 1 + k] + s[n - 1 - k];
  return g;
}

ToeplitzGrad toeplitz_param_grad(std::span<const double> u, std::span<const double> z) {
  const std::size_t n = u.size();
  const RealVec s = diagonal_correlation(u, z);
  ToeplitzGrad g{RealVec(n), RealVec(n, 0.0)};
  for (std::size_t k = 0; k < n; ++k) g.col[k] = s[n - 1 + k];
  for (std::size_t k = 1; k < n; ++k) g.row[k] = s[n - 1 - k];
  return g;
}

RealVec toeplitz_transpose_matvec(const Toeplitz& t, std::span<const double> u) {
  return toeplitz_matvec(Toeplitz(t.row(), t.col()), u);
}

RealVec circulant_adjoint(const DenseMatrix& g) {
  const std::size_t n = g.rows();
  RealVec out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[(i + n - j) % n] += g(i, j);
  return out;
}

RealVec sym_toeplitz_adjoint(const DenseMatrix& g) {
  const std::size_t n = g.rows();
  RealVec out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i >= j ? i - j : j - i] += g(i, j);
  return out;
}

ToeplitzGrad toeplitz_adjoint(const DenseMatrix& g) {
  const std::size_t n = g.rows();
  ToeplitzGrad out{RealVec(n, 0.0), RealVec(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i >= j) out.col[i - j] += g(i, j);
      else out.row[j - i] += g(i, j);
    }
  return out;
}

// ---------------------------------------------------------------------------

std::size_t SurmDelta::dim() const {
  struct Visitor {
    std::size_t operator()(const CirculantHadamard& p) const { return p.r1.size(); }
    std::size_t operator()(const SymToeplitzPair& p) const { return p.t1.size(); }
    std::size_t operator()(const KroneckerDelta& p) const { return p.a.cols() * p.b.cols(); }
    std::size_t operator()(const LowRankDelta& p) const { return p.b.rows(); }
  };
  return std::visit(Visitor{}, params);
}

std::size_t SurmDelta::parameter_count() const {
  struct Visitor {
    std::size_t operator()(const CirculantHadamard& p) const { return p.r1.size() + p.r2.size(); }
    std::size_t operator()(const SymToeplitzPair& p) const { return p.t1.size() + p.t2.size(); }
    std::size_t operator()(const KroneckerDelta& p) const { return p.a.size() + p.b.size(); }
    std::size_t operator()(const LowRankDelta& p) const { return p.a.size() + p.b.size(); }
  };
  return std::visit(Visitor{}, params);
}

std::string SurmDelta::variant_name() const {
  struct Visitor {
    std::string operator()(const CirculantHadamard&) const { return "circulant_hadamard"; }
    std::string operator()(const SymToeplitzPair&) const { return "sym_toeplitz_pair"; }
    std::string operator()(const KroneckerDelta&) const { return "kronecker"; }
    std::string operator()(const LowRankDelta&) const { return "low_rank"; }
  };
  return std::visit(Visitor{}, params);
}

SurmDelta init_delta(DeltaKind kind, std::size_t n, Rng& rng, std::size_t rank, double alpha) {
  if (n == 0) throw std::invalid_argument("init_delta: n must be >= 1");
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  SurmDelta dw;
  dw.alpha = alpha;
  switch (kind) {
    case DeltaKind::kCirculantHadamard:
      dw.params = CirculantHadamard{RealVec(n, 0.0), gaussian_vector(n, rng, s)};
      break;
    case DeltaKind::kSymToeplitzPair:
      dw.params = SymToeplitzPair{RealVec(n, 0.0), gaussian_vector(n, rng, s)};
      break;
    case DeltaKind::kKronecker: {
      const KronShapePlan plan = optimal_kron_shapes(n);
      dw.params = KroneckerDelta{DenseMatrix(plan.m1, plan.n1), gaussian_matrix(plan.m2, plan.n2, rng, s)};
      break;
    }
    case DeltaKind::kLowRank:
      if (rank < 1) throw std::invalid_argument("init_delta: rank must be >= 1");
      dw.params = LowRankDelta{DenseMatrix(n, rank), gaussian_matrix(n, rank, rng, s)};
      break;
  }
  return dw;
}

RealVec delta_forward(const SurmDelta& dw, std::span<const double> x) {
  require_len(x.size(), dw.dim(), "delta_forward");
  struct Visitor {
    std::span<const double> x;
    RealVec operator()(const CirculantHadamard& p) const {
      return circulant_matvec(Circulant(hadamard(p.r1, p.r2)), x);
    }
    RealVec operator()(const SymToeplitzPair& p) const {
      return toeplitz_matvec(SymToeplitz(p.t2), toeplitz_matvec(SymToeplitz(p.t1), x));
    }
    RealVec operator()(const KroneckerDelta& p) const { return kronecker_matvec(Kronecker(p.a, p.b), x); }
    RealVec operator()(const LowRankDelta& p) const { return matvec(p.a, matvec_t(p.b, x)); }
  };
  RealVec y = std::visit(Visitor{x}, dw.params);
  scale(y, dw.alpha);
  return y;
}

DeltaGradients delta_backward(const SurmDelta& dw, std::span<const double> x, std::span<const double> upstream) {
  require_len(x.size(), dw.dim(), "delta_backward x");
  require_len(upstream.size(), dw.dim(), "delta_backward upstream");
  const double alpha = dw.alpha;
  RealVec u(upstream.begin(), upstream.end());
  scale(u, alpha);

  struct Visitor {
    std::span<const double> x;
    const RealVec& u;  // alpha * upstream
    DeltaGradients operator()(const CirculantHadamard& p) const {
      const Circulant c(hadamard(p.r1, p.r2));
      const RealVec gc = circular_correlation(u, x);
      return {CirculantHadamard{hadamard(gc, p.r2), hadamard(gc, p.r1)}, circulant_transpose_matvec(c, u)};
    }
    DeltaGradients operator()(const SymToeplitzPair& p) const {
      const SymToeplitz t1(p.t1), t2(p.t2);
      const RealVec z = toeplitz_matvec(t1, x);
      const RealVec w = toeplitz_matvec(t2, u);
      return {SymToeplitzPair{sym_toeplitz_param_grad(w, x), sym_toeplitz_param_grad(u, z)}, toeplitz_matvec(t1, w)};
    }
    DeltaGradients operator()(const KroneckerDelta& p) const {
      const DenseMatrix xm(p.a.cols(), p.b.cols(), RealVec(x.begin(), x.end()));
      const DenseMatrix um(p.a.rows(), p.b.rows(), u);
      DenseMatrix ga = matmul_nt(matmul(um, p.b), xm);
      DenseMatrix gb = matmul(matmul_tn(um, p.a), xm);
      RealVec gx = matmul(matmul_tn(p.a, um), p.b).data();
      return {KroneckerDelta{std::move(ga), std::move(gb)}, std::move(gx)};
    }
    DeltaGradients operator()(const LowRankDelta& p) const {
      const RealVec proj = matvec_t(p.b, x);
      const RealVec q = matvec_t(p.a, u);
      DenseMatrix ga(p.a.rows(), p.a.cols()), gb(p.b.rows(), p.b.cols());
      for (std::size_t i = 0; i < ga.rows(); ++i)
        for (std::size_t k = 0; k < ga.cols(); ++k) ga(i, k) = u[i] * proj[k];
      for (std::size_t i = 0; i < gb.rows(); ++i)
        for (std::size_t k = 0; k < gb.cols(); ++k) gb(i, k) = x[i] * q[k];
      return {LowRankDelta{std::move(ga), std::move(gb)}, matvec(p.b, q)};
    }
  };
  return std::visit(Visitor{x, u}, dw.params);
}

Structured merge_delta(const SurmDelta& dw) {
  struct Visitor {
    Structured operator()(const CirculantHadamard& p) const { return Circulant(hadamard(p.r1, p.r2)); }
    Structured operator()(const SymToeplitzPair& p) const {
      return matmul(materialize(SymToeplitz(p.t2)), materialize(SymToeplitz(p.t1)));
    }
    Structured operator()(const KroneckerDelta& p) const { return Kronecker(p.a, p.b); }
    Structured operator()(const LowRankDelta& p) const { return LowRank(p.a, p.b); }
  };
  return std::visit(Visitor{}, dw.params);
}

nlohmann::json to_json(const SurmDelta& dw) {
  struct Visitor {
    nlohmann::json operator()(const CirculantHadamard& p) const {
      return {to_json(Structured(Circulant(p.r1))), to_json(Structured(Circulant(p.r2)))};
    }
    nlohmann::json operator()(const SymToeplitzPair& p) const {
      return {to_json(Structured(SymToeplitz(p.t1))), to_json(Structured(SymToeplitz(p.t2)))};
    }
    nlohmann::json operator()(const KroneckerDelta& p) const { return {matrix_to_json(p.a), matrix_to_json(p.b)}; }
    nlohmann::json operator()(const LowRankDelta& p) const { return {matrix_to_json(p.a), matrix_to_json(p.b)}; }
  };
  return {{"variant", dw.variant_name()}, {"alpha", dw.alpha}, {"factors", std::visit(Visitor{}, dw.params)}};
}

SurmDelta delta_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("variant") || !j.contains("factors") || !j["factors"].is_array() ||
      j["factors"].size() != 2) {
    throw std::invalid_argument("delta: expected {\"variant\", \"alpha\", \"factors\": [f1, f2]}");
  }
  const std::string variant = j["variant"].get<std::string>();
  const Structured f1 = structured_from_json(j["factors"][0]);
  const Structured f2 = structured_from_json(j["factors"][1]);
  SurmDelta dw;
  dw.alpha = j.value("alpha", 1.0);
  try {
    if (variant == "circulant_hadamard") {
      dw.params = CirculantHadamard{std::get<Circulant>(f1).c(), std::get<Circulant>(f2).c()};
    } else if (variant == "sym_toeplitz_pair") {
      dw.params = SymToeplitzPair{std::get<SymToeplitz>(f1).d(), std::get<SymToeplitz>(f2).d()};
    } else if (variant == "kronecker") {
      dw.params = KroneckerDelta{std::get<DenseMatrix>(f1), std::get<DenseMatrix>(f2)};
    } else if (variant == "low_rank") {
      dw.params = LowRankDelta{std::get<DenseMatrix>(f1), std::get<DenseMatrix>(f2)};
    } else {
      throw std::invalid_argument("delta: unknown variant \"" + variant + "\"");
    }
  } catch (const std::bad_variant_access&) {
    throw std::invalid_argument("delta: factor kinds do not match variant \"" + variant + "\"");
  }
  if (dw.parameter_count() == 0) throw std::invalid_argument("delta: empty factors");
  const auto sizes_match = std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, CirculantHadamard>) return p.r1.size() == p.r2.size();
        else if constexpr (std::is_same_v<T, SymToeplitzPair>) return p.t1.size() == p.t2.size();
        else if constexpr (std::is_same_v<T, KroneckerDelta>) return p.a.rows() * p.b.rows() == p.a.cols() * p.b.cols();
        else return p.a.rows() == p.b.rows() && p.a.cols() == p.b.cols();
      },
      dw.params);
  if (!sizes_match) throw std::invalid_argument("delta: factor shapes are inconsistent");
  return dw;
}

// ---------------------------------------------------------------------------

SurmAdapter init_adapter(AdapterKind kind, std::size_t n, Rng& rng, std::size_t rank) {
  if (n == 0) throw std::invalid_argument("init_adapter: n must be >= 1");
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  SurmAdapter ad;
  ad.bias.assign(n, 0.0);
  switch (kind) {
    case AdapterKind::kCirculant:
      ad.params = CirculantAdapter{gaussian_vector(n, rng, s), RealVec(n, 0.0)};
      break;
    case AdapterKind::kSymToeplitz:
      ad.params = SymToeplitzAdapter{RealVec(n, 0.0), gaussian_vector(n, rng, s)};
      break;
    case AdapterKind::kKronecker: {
      const KronShapePlan plan = optimal_kron_shapes(n);
      ad.params = KroneckerAdapter{gaussian_matrix(plan.m1, plan.n1, rng, s), DenseMatrix(plan.m2, plan.n2)};
      break;
    }
    case AdapterKind::kLowRank:
      if (rank < 1) throw std::invalid_argument("init_adapter: rank must be >= 1");
      ad.params = LowRankAdapter{gaussian_matrix(n, rank, rng, s), DenseMatrix(rank, n)};
      break;
  }
  return ad;
}

DenseMatrix adapter_forward(const SurmAdapter& ad, const DenseMatrix& x) {
  const std::size_t n = ad.dim();
  if (x.cols() != n) throw DimensionError("adapter_forward: row width does not match adapter dimension");

  // Pre-activation branch for each row, before the nonlinearity.
  DenseMatrix branch(x.rows(), n);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LowRankAdapter>) {
          if (p.down.rows() != n || p.up.cols() != n || p.down.cols() != p.up.rows())
            throw DimensionError("adapter_forward: low-rank factor shapes");
          DenseMatrix hidden = matmul(x, p.down);
          for (double& v : hidden.data()) v = gelu(v);
          branch = matmul(hidden, p.up);
        } else {
          for (std::size_t i = 0; i < x.rows(); ++i) {
            const auto xi = x.row(i);
            RealVec yi;
            if constexpr (std::is_same_v<T, CirculantAdapter>) {
              yi = circulant_matvec(Circulant(hadamard(p.r1, p.r2)), xi);
            } else if constexpr (std::is_same_v<T, SymToeplitzAdapter>) {
              yi = toeplitz_matvec(SymToeplitz(p.t1), toeplitz_matvec(SymToeplitz(p.t2), xi));
            } else {
              // x (B kron A) = ((B kron A)^T x^T)^T = (B^T kron A^T) x^T
              yi = kronecker_matvec(Kronecker(p.b.transpose(), p.a.transpose()), xi);
            }
            for (double& v : yi) v = gelu(v);
            std::copy(yi.begin(), yi.end(), branch.row(i).begin());
          }
        }
      },
      ad.params);

  DenseMatrix y = x;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    auto yr = y.row(i);
    const auto br = branch.row(i);
    for (std::size_t j = 0; j < n; ++j) yr[j] += br[j] + ad.bias[j];
  }
  return y;
}

}  // namespace surm
