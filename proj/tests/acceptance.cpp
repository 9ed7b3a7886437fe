// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "commands.hpp"
#include "surm/approximation.hpp"
#include "surm/generators.hpp"
#include "surm/layers.hpp"
#include "surm/mlp.hpp"
#include "surm/pinwheel.hpp"
#include "surm/similarity.hpp"
#include "surm/structured.hpp"

using namespace surm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double central_difference(std::vector<double>& p, std::size_t k, const std::function<double()>& f, double h) {
  const double orig = p[k];
  p[k] = orig + h;
  const double up = f();
  p[k] = orig - h;
  const double down = f();
  p[k] = orig;
  return (up - down) / (2.0 * h);
}

double rel_err(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// ---------------------------------------------------------------------------

Outcome fit_ordering() {
  const auto start = std::chrono::steady_clock::now();
  const nlohmann::json r = cli::approx_psd(cli::PsdOptions{});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const std::size_t ordered = r["summary"]["ordering_count"];
  const auto& mean = r["summary"]["mean_relative_error"];
  auto num = [](const nlohmann::json& v) { return v.is_number() ? v.get<double>() : NAN; };
  return {ordered >= 9 && secs < 60.0,
          fmt("ordering held in %zu/10 trials (need 9), %.1fs; mean errors low-rank %.4f kronecker %.4f "
              "circulant %.4f toeplitz %.4f",
              ordered, secs, num(mean["low_rank"]), num(mean["kronecker"]), num(mean["circulant"]),
              num(mean["toeplitz"]))};
}

Outcome projection_optimality() {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = 30;
  std::size_t beaten = 0, gd_mismatch = 0;
  double worst_gap = 0.0;
  FitConfig gd(0);
  gd.learning_rate = 1.0 / (4.0 * n);
  gd.max_iters = 5000;
  gd.record_every = gd.max_iters;
  for (std::size_t t = 0; t < 100; ++t) {
    Rng rng(derive_seed(2024, t));
    const DenseMatrix m = gen_random_gaussian(n, rng);
    DenseMatrix sym = gen_random_gaussian(n, rng);
    sym = 0.5 * (sym + sym.transpose());

    const Circulant c = project_circulant(m);
    const Toeplitz tp = project_toeplitz(m);
    const SymToeplitz s = project_sym_toeplitz(sym);
    const double ec = frobenius_error(materialize(c), m);
    const double et = frobenius_error(materialize(tp), m);
    const double es = frobenius_error(materialize(s), sym);

    for (int p = 0; p < 1000; ++p) {
      const double scale = std::pow(10.0, -3.0 + 3.0 * rng.uniform());
      RealVec cc = c.c(), col = tp.col(), row = tp.row(), d = s.d();
      for (double& v : cc) v += scale * rng.normal();
      for (double& v : col) v += scale * rng.normal();
      for (double& v : row) v += scale * rng.normal();
      row[0] = col[0];
      for (double& v : d) v += scale * rng.normal();
      beaten += frobenius_error(materialize(Circulant(cc)), m) < ec;
      beaten += frobenius_error(materialize(Toeplitz(col, row)), m) < et;
      beaten += frobenius_error(materialize(SymToeplitz(d)), sym) < es;
    }

    gd.seed = derive_seed(4048, t);
    const double gaps[3] = {std::abs(fit_circulant_gd(m, gd).final_abs_error - ec),
                            std::abs(fit_toeplitz_gd(m, gd).final_abs_error - et),
                            std::abs(fit_sym_toeplitz_gd(sym, gd).final_abs_error - es)};
    for (double g : gaps) {
      worst_gap = std::max(worst_gap, g);
      gd_mismatch += !(g < 1e-6);
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {beaten == 0 && gd_mismatch == 0 && secs < 30.0,
          fmt("%zu of 300000 perturbations beat a projection; %zu GD fits off by >= 1e-6 (worst %.2e); %.1fs",
              beaten, gd_mismatch, worst_gap, secs)};
}

Outcome fast_matvec() {
  Rng rng(3);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo + 1));
  };
  auto rel = [](const RealVec& a, const RealVec& b) { return relative_error(a, b); };
  double worst[4] = {0, 0, 0, 0};
  for (int t = 0; t < 200; ++t) {
    {
      const std::size_t n = pick(1, 128);
      const Circulant c(gaussian_vector(n, rng));
      const RealVec x = gaussian_vector(n, rng);
      worst[0] = std::max(worst[0], rel(circulant_matvec(c, x), matvec(materialize(c), x)));
    }
    {
      const std::size_t n = pick(1, 128);
      RealVec col = gaussian_vector(n, rng), row = gaussian_vector(n, rng);
      row[0] = col[0];
      const Toeplitz tp(col, row);
      const RealVec x = gaussian_vector(n, rng);
      worst[1] = std::max(worst[1], rel(toeplitz_matvec(tp, x), matvec(materialize(tp), x)));
      const SymToeplitz s(gaussian_vector(n, rng));
      worst[1] = std::max(worst[1], rel(toeplitz_matvec(s, x), matvec(materialize(s), x)));
    }
    {
      const Kronecker k(gaussian_matrix(pick(1, 8), pick(1, 8), rng), gaussian_matrix(pick(1, 8), pick(1, 8), rng));
      const RealVec x = gaussian_vector(k.cols(), rng);
      worst[2] = std::max(worst[2], rel(kronecker_matvec(k, x), matvec(materialize(k), x)));
    }
    {
      const std::size_t n = pick(1, 80), r = pick(1, 5);
      const DenseMatrix g = gaussian_matrix(n, r, rng), h = gaussian_matrix(n, r, rng);
      DenseMatrix dense(n, n);
      for (std::size_t i = 0; i < r; ++i) dense += matmul(z_matrix(g.column(i), 1.0), z_matrix(h.column(i), -1.0));
      const RealVec x = gaussian_vector(n, rng);
      const LdrPath path = t % 2 ? LdrPath::kFft : LdrPath::kDense;
      worst[3] = std::max(worst[3], rel(ldr_matvec(LdrGH(g, h), x, path), matvec(dense, x)));
    }
  }
  const bool pass = *std::max_element(worst, worst + 4) < 1e-9;
  return {pass, fmt("worst relative error circulant %.1e toeplitz %.1e kronecker %.1e ldr %.1e", worst[0], worst[1],
                    worst[2], worst[3])};
}

Outcome gradient_suite() {
  Rng rng(4);
  double worst_fit = 0.0, worst_delta = 0.0, worst_net = 0.0;
  auto check = [&](std::vector<double>& p, const std::vector<double>& g, const std::function<double()>& f,
                   double& worst, int coords) {
    for (int c = 0; c < coords; ++c) {
      const std::size_t k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(p.size()));
      worst = std::max(worst, rel_err(g[k], central_difference(p, k, f, 1e-5), 1e-6));
    }
  };

  const DenseMatrix m = gen_random_gaussian(12, rng);
  DenseMatrix g = gaussian_matrix(12, 2, rng), h = gaussian_matrix(12, 2, rng), dg, dh;
  low_rank_loss_grad(m, g, h, &dg, &dh);
  auto lr = [&] { return low_rank_loss_grad(m, g, h, nullptr, nullptr); };
  check(g.data(), dg.data(), lr, worst_fit, 20);
  check(h.data(), dh.data(), lr, worst_fit, 20);
  sym_low_rank_loss_grad(m, g, &dg);
  check(g.data(), dg.data(), [&] { return sym_low_rank_loss_grad(m, g, nullptr); }, worst_fit, 20);
  DenseMatrix a = gaussian_matrix(4, 3, rng), b = gaussian_matrix(3, 4, rng), da, db;
  kronecker_loss_grad(m, a, b, &da, &db);
  auto kr = [&] { return kronecker_loss_grad(m, a, b, nullptr, nullptr); };
  check(a.data(), da.data(), kr, worst_fit, 12);
  check(b.data(), db.data(), kr, worst_fit, 12);
  kronecker_tied_loss_grad(m, a, &da);
  check(a.data(), da.data(), [&] { return kronecker_tied_loss_grad(m, a, nullptr); }, worst_fit, 12);
  ldr_loss_grad(m, g, h, &dg, &dh);
  auto ld = [&] { return ldr_loss_grad(m, g, h, nullptr, nullptr); };
  check(g.data(), dg.data(), ld, worst_fit, 20);
  check(h.data(), dh.data(), ld, worst_fit, 20);

  for (DeltaKind kind : {DeltaKind::kCirculantHadamard, DeltaKind::kSymToeplitzPair, DeltaKind::kKronecker,
                         DeltaKind::kLowRank}) {
    SurmDelta dw = init_delta(kind, 12, rng, 2, 0.5);
    std::vector<std::vector<double>*> params = std::visit(
        [](auto& q) -> std::vector<std::vector<double>*> {
          using T = std::decay_t<decltype(q)>;
          if constexpr (std::is_same_v<T, CirculantHadamard>) return {&q.r1, &q.r2};
          else if constexpr (std::is_same_v<T, SymToeplitzPair>) return {&q.t1, &q.t2};
          else return {&q.a.data(), &q.b.data()};
        },
        dw.params);
    for (auto* p : params)
      for (double& v : *p) v = rng.normal();
    RealVec x = gaussian_vector(12, rng);
    const RealVec up = gaussian_vector(12, rng);
    DeltaGradients grads = delta_backward(dw, x, up);
    std::vector<std::vector<double>*> gp = std::visit(
        [](auto& q) -> std::vector<std::vector<double>*> {
          using T = std::decay_t<decltype(q)>;
          if constexpr (std::is_same_v<T, CirculantHadamard>) return {&q.r1, &q.r2};
          else if constexpr (std::is_same_v<T, SymToeplitzPair>) return {&q.t1, &q.t2};
          else return {&q.a.data(), &q.b.data()};
        },
        grads.params);
    auto obj = [&] { return dot(up, delta_forward(dw, x)); };
    for (std::size_t i = 0; i < params.size(); ++i) check(*params[i], *gp[i], obj, worst_delta, 10);
    check(x, grads.x, obj, worst_delta, 12);
  }

  PinwheelConfig pc;
  pc.points_per_spoke = 4;
  const LabeledData data = gen_pinwheel(pc);
  for (HiddenKind kind : {HiddenKind::kDense, HiddenKind::kLowRank1, HiddenKind::kCirculant,
                          HiddenKind::kSymToeplitz, HiddenKind::kToeplitz}) {
    for (bool freeze : {true, false}) {
      MlpConfig cfg;
      cfg.hidden_kind = kind;
      cfg.freeze_embedding = freeze;
      Mlp net(cfg);
      std::vector<RealVec> grads;
      net.loss_and_grad(data.x, data.labels, &grads);
      for (std::size_t b = 0; b < net.blocks().size(); ++b) {
        if (!net.blocks()[b].trainable) continue;
        check(net.blocks()[b].values, grads[b], [&] { return net.loss_and_grad(data.x, data.labels, nullptr); },
              worst_net, 6);
      }
    }
  }
  return {worst_fit < 1e-5 && worst_delta < 1e-5 && worst_net < 1e-4,
          fmt("worst relative error: fit objectives %.1e, delta backward %.1e, network %.1e", worst_fit, worst_delta,
              worst_net)};
}

Outcome zero_init() {
  Rng rng(5);
  std::size_t bad = 0;
  for (DeltaKind kind : {DeltaKind::kCirculantHadamard, DeltaKind::kSymToeplitzPair, DeltaKind::kKronecker,
                         DeltaKind::kLowRank}) {
    const SurmDelta dw = init_delta(kind, 48, rng, 4);
    for (int t = 0; t < 100; ++t)
      for (double v : delta_forward(dw, gaussian_vector(48, rng))) bad += v != 0.0;
  }
  for (AdapterKind kind :
       {AdapterKind::kCirculant, AdapterKind::kSymToeplitz, AdapterKind::kKronecker, AdapterKind::kLowRank}) {
    const SurmAdapter ad = init_adapter(kind, 48, rng, 4);
    const DenseMatrix x = gaussian_matrix(100, 48, rng);
    bad += !(adapter_forward(ad, x) == x);
  }
  return {bad == 0, fmt("%zu nonzero outputs across 4 deltas and 4 adapters, 100 inputs each", bad)};
}

Outcome kron_bound() {
  std::size_t checked = 0, violations = 0;
  for (std::size_t d = 4; d <= 1024; ++d) {
    std::vector<std::size_t> divs;
    for (std::size_t k = 1; k <= d; ++k)
      if (d % k == 0) divs.push_back(k);
    if (divs.size() == 2) continue;  // prime
    ++checked;
    std::size_t best = SIZE_MAX;
    for (std::size_t m1 : divs)
      for (std::size_t n1 : divs) {
        const std::size_t cost = m1 * n1 + (d / m1) * (d / n1);
        if (cost < 2 * d) ++violations;
        best = std::min(best, cost);
      }
    const KronShapePlan p = optimal_kron_shapes(d);
    const bool ok = p.m1 * p.m2 == d && p.n1 * p.n2 == d && p.param_count == p.m1 * p.n1 + p.m2 * p.n2 &&
                    p.param_count == 2 * d && best == 2 * d && !p.degenerate;
    violations += !ok;
  }
  const KronShapePlan p = optimal_kron_shapes(768);
  const bool plan_768 = p.m1 == 32 && p.n1 == 24 && p.m2 == 24 && p.n2 == 32 && p.max_rank == 576;
  return {violations == 0 && plan_768,
          fmt("%zu composite d checked, %zu violations; d=768 plan %zux%zu / %zux%zu, max rank %zu", checked,
              violations, p.m1, p.n1, p.m2, p.n2, p.max_rank)};
}

struct PinwheelRuns {
  // [seed][kind]
  std::vector<std::vector<TrainTrace>> runs;
  std::vector<LabeledData> data;
  double seconds = 0.0;
};

const std::vector<HiddenKind> kPinwheelKinds = {HiddenKind::kDense, HiddenKind::kLowRank1, HiddenKind::kCirculant,
                                                HiddenKind::kSymToeplitz, HiddenKind::kToeplitz};

const PinwheelRuns& pinwheel_runs() {
  static const PinwheelRuns runs = [] {
    PinwheelRuns out;
    const auto start = std::chrono::steady_clock::now();
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      PinwheelConfig pc;
      pc.seed = seed;
      out.data.push_back(gen_pinwheel(pc));
      std::vector<TrainTrace> row;
      for (HiddenKind k : kPinwheelKinds) {
        MlpConfig mc;
        mc.hidden_kind = k;
        mc.seed = seed;
        row.push_back(train(mc, out.data.back()));
      }
      out.runs.push_back(std::move(row));
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
  }();
  return runs;
}

Outcome pinwheel_losses() {
  const PinwheelRuns& pr = pinwheel_runs();
  bool pass = pr.seconds < 300.0;
  std::ostringstream os;
  for (std::size_t s = 0; s < pr.runs.size(); ++s) {
    const auto& r = pr.runs[s];
    const double dense_acc = r[0].final_stats().accuracy;
    const double rank1 = r[1].final_stats().loss, circ = r[2].final_stats().loss, sym = r[3].final_stats().loss;
    pass = pass && dense_acc >= 0.95 && circ < rank1 && sym < rank1 && !r[1].diverged && !r[2].diverged &&
           !r[3].diverged;
    os << fmt("seed %zu: dense acc %.3f, loss rank-1 %.4f circulant %.4f sym-toeplitz %.4f; ", s, dense_acc, rank1,
              circ, sym);
  }
  os << fmt("%.1fs for 15 runs (5 layer kinds, toeplitz runs serve the CKA check)", pr.seconds);
  return {pass, os.str()};
}

Outcome cka_ordering() {
  const PinwheelRuns& pr = pinwheel_runs();
  bool pass = true;
  std::ostringstream os;
  for (std::size_t s = 0; s < pr.runs.size(); ++s) {
    const auto& r = pr.runs[s];
    const DenseMatrix dense = r[0].model.hidden_representation(pr.data[s].x);
    auto score = [&](std::size_t k) { return cka(r[k].model.hidden_representation(pr.data[s].x), dense); };
    const double rank1 = score(1);
    os << fmt("seed %zu: rank-1 %.3f", s, rank1);
    for (std::size_t k = 2; k < r.size(); ++k) {
      const double v = score(k);
      pass = pass && v > rank1;
      os << fmt(" %s %.3f", hidden_kind_name(kPinwheelKinds[k]).c_str(), v);
    }
    os << "; ";
  }
  return {pass, os.str()};
}

Outcome invertibility() {
  Rng rng(9);
  std::size_t disagree = 0, invertible = 0;
  for (int t = 0; t < 100; ++t) {
    RealVec col = gaussian_vector(20, rng), row = gaussian_vector(20, rng);
    row[0] = col[0];
    const Toeplitz tp(col, row);
    const bool gs = toeplitz_invertible(tp).invertible;
    const bool svd = numerical_rank(materialize(tp)) == 20;
    disagree += gs != svd;
    invertible += svd;
  }
  double worst = 0.0;
  for (std::size_t n = 1; n <= 64; ++n) {
    const Circulant c(gaussian_vector(n, rng));
    const std::complex<double> det = circulant_determinant(c);
    const double dense = determinant(materialize(c));
    worst = std::max(worst, std::abs(det - dense) / std::abs(dense));
  }
  return {disagree == 0 && worst < 1e-8,
          fmt("%zu/100 Toeplitz decisions disagree with SVD rank (%zu invertible); worst circulant determinant "
              "relative error %.1e for n <= 64",
              disagree, invertible, worst)};
}

Outcome class_properties() {
  std::size_t intrinsic = 0, low_rank = 0, ldr = 0;
  std::ostringstream os;
  auto run = [](const std::string& cls, const std::string& method, std::size_t r, std::uint64_t seed) {
    cli::ClassOptions opt;
    opt.matrix_class = cls;
    opt.method = method;
    opt.r = r;
    opt.seed = seed;
    const nlohmann::json rep = cli::approx_classes(opt, nullptr);
    const auto& v = rep["summary"]["final_error"];
    return v.is_number() ? v.get<double>() : NAN;
  };
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const double ic = run("low-intrinsic", "circulant", 1, seed), it = run("low-intrinsic", "toeplitz", 1, seed);
    const double nc = run("near-low-rank", "circulant", 1, seed), nt = run("near-low-rank", "toeplitz", 1, seed);
    const double l1 = run("random", "ldr", 1, seed), l20 = run("random", "ldr", 20, seed);
    intrinsic += ic <= it;
    low_rank += nt <= nc;
    ldr += l20 <= l1;
    os << fmt("seed %llu: low-intrinsic c %.4f t %.4f, near-low-rank c %.4f t %.4f, ldr r1 %.4f r20 %.4f; ",
              static_cast<unsigned long long>(seed), ic, it, nc, nt, l1, l20);
  }
  os << fmt("votes: circulant<=toeplitz on low-intrinsic %zu/5, toeplitz<=circulant on near-low-rank %zu/5, "
            "r20<=r1 %zu/5",
            intrinsic, low_rank, ldr);
  return {intrinsic >= 3 && low_rank >= 3 && ldr >= 3, os.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"fit ordering on row-normalized PSD targets", fit_ordering},
      {"projection optimality", projection_optimality},
      {"fast matvec equivalence", fast_matvec},
      {"gradient suite", gradient_suite},
      {"zero-init contract", zero_init},
      {"kronecker parameter bound", kron_bound},
      {"pinwheel losses", pinwheel_losses},
      {"CKA ordering", cka_ordering},
      {"invertibility agreement", invertibility},
      {"class-wise approximation", class_properties},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("criterion %zu %s: %s (%s) [%.1fs]\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
