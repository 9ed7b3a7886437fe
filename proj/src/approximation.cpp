#include "surm/approximation.hpp"

#include <cmath>
#include <sstream>

#include "surm/generators.hpp"
#include "surm/rng.hpp"
#include "surm/serialize.hpp"

namespace surm {

FitConfig FitConfig::for_ldr(std::uint64_t seed_) {
  FitConfig cfg(seed_);
  cfg.learning_rate = 1e-4;
  return cfg;
}

void FitConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("FitConfig: learning_rate must be > 0");
  if (max_iters < 1) throw std::invalid_argument("FitConfig: max_iters must be >= 1");
  if (record_every < 1) throw std::invalid_argument("FitConfig: record_every must be >= 1");
}

DivergenceError::DivergenceError(const std::string& what, std::size_t iter, double loss, double initial_loss)
    : std::runtime_error(what + ": diverged at iteration " + std::to_string(iter) + " (loss " +
                         std::to_string(loss) + ", initial " + std::to_string(initial_loss) +
                         "); lower the learning rate"),
      iter_(iter),
      loss_(loss),
      initial_(initial_loss) {}

double frobenius_error(const DenseMatrix& a, const DenseMatrix& m) {
  if (a.rows() != m.rows() || a.cols() != m.cols()) throw DimensionError("frobenius_error: shape mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a.data()[k] - m.data()[k];
    s += d * d;
  }
  return std::sqrt(s);
}

double rel_frobenius_error(const DenseMatrix& a, const DenseMatrix& m) {
  const double denom = frobenius_norm(m);
  if (denom == 0.0) throw std::domain_error("rel_frobenius_error: target has zero Frobenius norm");
  return frobenius_error(a, m) / denom;
}

namespace {

void require_square(const DenseMatrix& d, const char* what) {
  if (!d.square() || d.rows() == 0) throw DimensionError(std::string(what) + ": target must be square and non-empty");
}

}  // namespace

Circulant project_circulant(const DenseMatrix& d) {
  require_square(d, "project_circulant");
  const std::size_t n = d.rows();
  RealVec c(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) c[(i + n - j) % n] += d(i, j);
  for (double& v : c) v /= static_cast<double>(n);
  return Circulant(std::move(c));
}

SymToeplitz project_sym_toeplitz(const DenseMatrix& d) {
  require_square(d, "project_sym_toeplitz");
  const std::size_t n = d.rows();
  RealVec out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) s += d(i, i + k);
    out[k] = s / static_cast<double>(n - k);
  }
  return SymToeplitz(std::move(out));
}

Toeplitz project_toeplitz(const DenseMatrix& d) {
  require_square(d, "project_toeplitz");
  const std::size_t n = d.rows();
  RealVec col(n, 0.0), row(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double lower = 0.0, upper = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) {
      lower += d(i + k, i);
      upper += d(i, i + k);
    }
    col[k] = lower / static_cast<double>(n - k);
    row[k] = upper / static_cast<double>(n - k);
  }
  row[0] = col[0];
  return Toeplitz(std::move(col), std::move(row));
}

namespace {

double residual_into(DenseMatrix& model, const DenseMatrix& m) {
  model -= m;
  const double f = frobenius_norm(model);
  return f * f;
}

// P[t][b] = R[(b + t) mod n][b]; pre[t][j] = sum_{b < j} P[t][b], j = 0..n.
DenseMatrix cyclic_diagonal_prefix(const DenseMatrix& r) {
  const std::size_t n = r.rows();
  DenseMatrix pre(n, n + 1);
  for (std::size_t t = 0; t < n; ++t) {
    double acc = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      pre(t, b) = acc;
      acc += r((b + t) % n, b);
    }
    pre(t, n) = acc;
  }
  return pre;
}

}  // namespace

DenseMatrix ldr_materialize_fast(const DenseMatrix& g, const DenseMatrix& h) {
  const std::size_t n = g.rows();
  const std::size_t r = g.cols();
  // E[t][m] = sum_i g_i[(t - m) mod n] h_i[m]; W[(b + t) mod n][b] is the
  // prefix over m < n - b minus the remaining suffix.
  DenseMatrix e(n, n);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t m = 0; m < n; ++m) e(t, m) += g((t + n - m) % n, i) * h(m, i);
    }
  }
  DenseMatrix w(n, n);
  RealVec prefix(n + 1);
  for (std::size_t t = 0; t < n; ++t) {
    prefix[0] = 0.0;
    for (std::size_t m = 0; m < n; ++m) prefix[m + 1] = prefix[m] + e(t, m);
    for (std::size_t b = 0; b < n; ++b) w((b + t) % n, b) = 2.0 * prefix[n - b] - prefix[n];
  }
  return w;
}

double low_rank_loss_grad(const DenseMatrix& m, const DenseMatrix& g, const DenseMatrix& h, DenseMatrix* dg,
                          DenseMatrix* dh) {
  DenseMatrix res = matmul_nt(g, h);
  const double loss = residual_into(res, m);
  if (dg) *dg = 2.0 * matmul(res, h);
  if (dh) *dh = 2.0 * matmul_tn(res, g);
  return loss;
}

double sym_low_rank_loss_grad(const DenseMatrix& m, const DenseMatrix& g, DenseMatrix* dg) {
  DenseMatrix res = matmul_nt(g, g);
  const double loss = residual_into(res, m);
  if (dg) *dg = 2.0 * (matmul(res, g) + matmul_tn(res, g));
  return loss;
}

double kronecker_loss_grad(const DenseMatrix& m, const DenseMatrix& a, const DenseMatrix& b, DenseMatrix* da,
                           DenseMatrix* db) {
  DenseMatrix res = materialize(Kronecker(a, b));
  const double loss = residual_into(res, m);
  if (da) {
    *da = DenseMatrix(a.rows(), a.cols());
  }
  if (db) {
    *db = DenseMatrix(b.rows(), b.cols());
  }
  for (std::size_t i1 = 0; i1 < a.rows(); ++i1)
    for (std::size_t j1 = 0; j1 < a.cols(); ++j1) {
      double acc_a = 0.0;
      const double aij = a(i1, j1);
      for (std::size_t i2 = 0; i2 < b.rows(); ++i2) {
        const double* rrow = res.row(i1 * b.rows() + i2).data() + j1 * b.cols();
        const double* brow = b.row(i2).data();
        double* dbrow = db ? db->row(i2).data() : nullptr;
        for (std::size_t j2 = 0; j2 < b.cols(); ++j2) {
          acc_a += rrow[j2] * brow[j2];
          if (dbrow) dbrow[j2] += 2.0 * rrow[j2] * aij;
        }
      }
      if (da) (*da)(i1, j1) = 2.0 * acc_a;
    }
  return loss;
}

double kronecker_tied_loss_grad(const DenseMatrix& m, const DenseMatrix& a, DenseMatrix* da) {
  if (!da) return kronecker_loss_grad(m, a, a.transpose(), nullptr, nullptr);
  DenseMatrix ga, gb;
  const double loss = kronecker_loss_grad(m, a, a.transpose(), &ga, &gb);
  *da = ga + gb.transpose();
  return loss;
}

double ldr_loss_grad(const DenseMatrix& m, const DenseMatrix& g, const DenseMatrix& h, DenseMatrix* dg,
                     DenseMatrix* dh) {
  const std::size_t n = g.rows();
  const std::size_t r = g.cols();
  DenseMatrix res = ldr_materialize_fast(g, h);
  const double loss = residual_into(res, m);
  if (!dg && !dh) return loss;
  const DenseMatrix pre = cyclic_diagonal_prefix(res);
  // inner(t, j) = sum_{b < j} P[t][b] - sum_{b >= j} P[t][b]
  auto inner = [&](std::size_t t, std::size_t j) { return 2.0 * pre(t, j) - pre(t, n); };
  if (dg) *dg = DenseMatrix(n, r);
  if (dh) *dh = DenseMatrix(n, r);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      double sg = 0.0, sh = 0.0;
      for (std::size_t mm = 0; mm < n; ++mm) {
        const std::size_t t = (mm + k) % n;
        if (dg) sg += h(mm, i) * inner(t, n - mm);
        if (dh) sh += g(mm, i) * inner(t, n - k);
      }
      if (dg) (*dg)(k, i) = 2.0 * sg;
      if (dh) (*dh)(k, i) = 2.0 * sh;
    }
  }
  return loss;
}

namespace {

// Runs plain gradient descent. `loss_grad(params, grads)` returns the loss
// and fills grads (or skips them when grads is null).
template <class LossGrad, class Build>
FitReport run_gradient_descent(const char* name, const DenseMatrix& target, std::vector<DenseMatrix> params,
                               const FitConfig& cfg, LossGrad loss_grad, Build build) {
  cfg.validate();
  const double norm = frobenius_norm(target);
  if (norm == 0.0) throw std::domain_error(std::string(name) + ": target has zero Frobenius norm");
  FitReport report;
  std::vector<DenseMatrix> grads(params.size());
  double initial = 0.0;
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    const double loss = loss_grad(params, &grads);
    if (it == 0) initial = loss;
    if (!std::isfinite(loss) || loss > 1e6 * initial) throw DivergenceError(name, it, loss, initial);
    if (it % cfg.record_every == 0) report.error_trace.emplace_back(it, std::sqrt(loss) / norm);
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto& pd = params[p].data();
      const auto& gd = grads[p].data();
      for (std::size_t k = 0; k < pd.size(); ++k) pd[k] -= cfg.learning_rate * gd[k];
    }
  }
  const double loss = loss_grad(params, nullptr);
  if (!std::isfinite(loss) || loss > 1e6 * initial) throw DivergenceError(name, cfg.max_iters, loss, initial);
  report.iterations = cfg.max_iters;
  report.final_abs_error = std::sqrt(loss);
  report.final_error = report.final_abs_error / norm;
  report.error_trace.emplace_back(cfg.max_iters, report.final_error);
  report.approximator = build(params);
  return report;
}

double init_std(const FitConfig& cfg, std::size_t n) { return cfg.init_scale / std::sqrt(static_cast<double>(n)); }

}  // namespace

FitReport fit_low_rank(const DenseMatrix& m, std::size_t r, const FitConfig& cfg, LowRankTie tie) {
  if (r < 1) throw std::invalid_argument("fit_low_rank: r must be >= 1");
  if (m.size() == 0) throw DimensionError("fit_low_rank: empty target");
  Rng rng(cfg.seed);
  const double s = init_std(cfg, m.rows());
  if (tie == LowRankTie::kSymmetric) {
    if (!m.square()) throw DimensionError("fit_low_rank: symmetric tie needs a square target");
    return run_gradient_descent(
        "fit_low_rank", m, {gaussian_matrix(m.rows(), r, rng, s)}, cfg,
        [&](const std::vector<DenseMatrix>& p, std::vector<DenseMatrix>* g) {
          return sym_low_rank_loss_grad(m, p[0], g ? &(*g)[0] : nullptr);
        },
        [](const std::vector<DenseMatrix>& p) -> Structured { return LowRank(p[0], p[0]); });
  }
  return run_gradient_descent(
      "fit_low_rank", m, {gaussian_matrix(m.rows(), r, rng, s), gaussian_matrix(m.cols(), r, rng, s)}, cfg,
      [&](const std::vector<DenseMatrix>& p, std::vector<DenseMatrix>* g) {
        return low_rank_loss_grad(m, p[0], p[1], g ? &(*g)[0] : nullptr, g ? &(*g)[1] : nullptr);
      },
      [](const std::vector<DenseMatrix>& p) -> Structured { return LowRank(p[0], p[1]); });
}

FitReport fit_kronecker(const DenseMatrix& m, const KronShapePlan& plan, const FitConfig& cfg, KronTie tie) {
  if (plan.m1 * plan.m2 != m.rows() || plan.n1 * plan.n2 != m.cols()) {
    throw DimensionError("fit_kronecker: plan shape does not multiply to the target shape");
  }
  Rng rng(cfg.seed);
  const double s = init_std(cfg, m.rows());
  if (tie == KronTie::kTransposed) {
    if (plan.m2 != plan.n1 || plan.n2 != plan.m1) {
      throw DimensionError("fit_kronecker: transposed tie needs B shaped as A^T");
    }
    return run_gradient_descent(
        "fit_kronecker", m, {gaussian_matrix(plan.m1, plan.n1, rng, s)}, cfg,
        [&](const std::vector<DenseMatrix>& p, std::vector<DenseMatrix>* g) {
          return kronecker_tied_loss_grad(m, p[0], g ? &(*g)[0] : nullptr);
        },
        [](const std::vector<DenseMatrix>& p) -> Structured { return Kronecker(p[0], p[0].transpose()); });
  }
  return run_gradient_descent(
      "fit_kronecker", m,
      {gaussian_matrix(plan.m1, plan.n1, rng, s), gaussian_matrix(plan.m2, plan.n2, rng, s)}, cfg,
      [&](const std::vector<DenseMatrix>& p, std::vector<DenseMatrix>* g) {
        return kronecker_loss_grad(m, p[0], p[1], g ? &(*g)[0] : nullptr, g ? &(*g)[1] : nullptr);
      },
      [](const std::vector<DenseMatrix>& p) -> Structured { return Kronecker(p[0], p[1]); });
}

FitReport fit_ldr(const DenseMatrix& m, std::size_t r, const FitConfig& cfg) {
  if (r < 1) throw std::invalid_argument("fit_ldr: r must be >= 1");
  require_square(m, "fit_ldr");
  Rng rng(cfg.seed);
  const std::size_t n = m.rows();
  const double s = init_std(cfg, n);
  return run_gradient_descent(
      "fit_ldr", m, {gaussian_matrix(n, r, rng, s), gaussian_matrix(n, r, rng, s)}, cfg,
      [&](const std::vector<DenseMatrix>& p, std::vector<DenseMatrix>* g) {
        return ldr_loss_grad(m, p[0], p[1], g ? &(*g)[0] : nullptr, g ? &(*g)[1] : nullptr);
      },
      [](const std::vector<DenseMatrix>& p) -> Structured { return LdrGH(p[0], p[1]); });
}

namespace {

// Each linear class is the span of 0/1 basis matrices; entry (i, j) belongs
// to exactly one coordinate. index(i, j) returns that coordinate.
template <class Index, class Build>
FitReport fit_linear_class(const char* name, const DenseMatrix& m, std::size_t dim, const FitConfig& cfg,
                           Index index, Build build) {
  require_square(m, name);
  const std::size_t n = m.rows();
  Rng rng(cfg.seed);
  return run_gradient_descent(
      name, m, {gaussian_matrix(1, dim, rng, init_std(cfg, n))}, cfg,
      [&](const std::vector<DenseMatrix>& p, std::vector<DenseMatrix>* g) {
        const auto& theta = p[0].data();
        RealVec grad(dim, 0.0);
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const std::size_t k = index(i, j);
            const double d = theta[k] - m(i, j);
            loss += d * d;
            grad[k] += 2.0 * d;
          }
        if (g) (*g)[0] = DenseMatrix(1, dim, std::move(grad));
        return loss;
      },
      [&](const std::vector<DenseMatrix>& p) -> Structured { return build(p[0].data()); });
}

}  // namespace

FitReport fit_circulant_gd(const DenseMatrix& m, const FitConfig& cfg) {
  const std::size_t n = m.rows();
  return fit_linear_class(
      "fit_circulant_gd", m, n, cfg, [n](std::size_t i, std::size_t j) { return (i + n - j) % n; },
      [](const RealVec& p) -> Structured { return Circulant(p); });
}

FitReport fit_toeplitz_gd(const DenseMatrix& m, const FitConfig& cfg) {
  const std::size_t n = m.rows();
  // Coordinates 0..n-1 are the first column, n..2n-2 the first row past the corner.
  return fit_linear_class(
      "fit_toeplitz_gd", m, 2 * n - 1, cfg,
      [n](std::size_t i, std::size_t j) { return i >= j ? i - j : n + (j - i) - 1; },
      [n](const RealVec& p) -> Structured {
        RealVec col(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(n));
        RealVec row(n);
        row[0] = col[0];
        for (std::size_t k = 1; k < n; ++k) row[k] = p[n + k - 1];
        return Toeplitz(std::move(col), std::move(row));
      });
}

FitReport fit_sym_toeplitz_gd(const DenseMatrix& m, const FitConfig& cfg) {
  const std::size_t n = m.rows();
  return fit_linear_class(
      "fit_sym_toeplitz_gd", m, n, cfg, [](std::size_t i, std::size_t j) { return i >= j ? i - j : j - i; },
      [](const RealVec& p) -> Structured { return SymToeplitz(p); });
}

nlohmann::json to_json(const FitReport& report) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& [iter, err] : report.error_trace) trace.push_back({{"iter", iter}, {"error", err}});
  return {{"final_error", report.final_error},
          {"final_abs_error", report.final_abs_error},
          {"iterations", report.iterations},
          {"error_trace", trace},
          {"approximator", to_json(report.approximator)}};
}

std::string trace_csv(const FitReport& report) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out.precision(17);
  out << "iter,error\n";
  for (const auto& [iter, err] : report.error_trace) out << iter << ',' << err << '\n';
  return out.str();
}

}  // namespace surm
