#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>

#include "pool.hpp"
#include "surm/approximation.hpp"
#include "surm/generators.hpp"
#include "surm/layers.hpp"
#include "surm/linalg.hpp"
#include "surm/mlp.hpp"
#include "surm/pinwheel.hpp"
#include "surm/rng.hpp"
#include "surm/serialize.hpp"
#include "surm/similarity.hpp"
#include "surm/structured.hpp"

namespace surm::cli {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

json claim(const std::string& name, bool passed, const std::string& detail) {
  return {{"name", name}, {"passed", passed}, {"detail", detail}};
}

json report(const std::string& command, json config, json seeds, json trials, json summary, json claims,
            Clock::time_point start) {
  return {{"command", command},
          {"config", std::move(config)},
          {"seeds", std::move(seeds)},
          {"trials", std::move(trials)},
          {"summary", std::move(summary)},
          {"claims", std::move(claims)},
          {"wall_clock_seconds", std::chrono::duration<double>(Clock::now() - start).count()}};
}

// NaN is not representable in JSON; diverged fits report null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

bool all_claims_pass(const json& r) {
  for (const auto& c : r.at("claims"))
    if (!c.at("passed").get<bool>()) return false;
  return true;
}

// ---------------------------------------------------------------------------

json approx_psd(const PsdOptions& opt) {
  const auto start = Clock::now();
  if (opt.n < 4) throw std::invalid_argument("approx-psd: --n must be >= 4");
  if (opt.trials < 1) throw std::invalid_argument("approx-psd: --trials must be >= 1");
  FitConfig base(opt.seed);
  base.max_iters = opt.iters;
  base.learning_rate = opt.learning_rate;
  base.validate();

  const KronShapePlan plan = optimal_kron_shapes(opt.n);
  // A kron A^T: the second factor is the transpose of the first.
  const KronShapePlan tied{plan.m1, plan.n1, plan.n1, plan.m1, plan.m1 * plan.n1, 0, 0, plan.degenerate};

  struct Row {
    double low_rank = NAN, kronecker = NAN, circulant = NAN, toeplitz = NAN;
    double low_rank_abs = NAN, kronecker_abs = NAN, circulant_abs = NAN, toeplitz_abs = NAN;
    std::uint64_t target_seed = 0, fit_seed = 0;
    json circulant_json;
    std::string failure;
  };
  std::vector<Row> rows(opt.trials);

  parallel_for(opt.trials, [&](std::size_t t) {
    Row& row = rows[t];
    row.target_seed = derive_seed(opt.seed, 2 * t);
    row.fit_seed = derive_seed(opt.seed, 2 * t + 1);
    Rng rng(row.target_seed);
    const DenseMatrix m = gen_psd_row_normalized(opt.n, rng);
    FitConfig cfg = base;
    cfg.seed = row.fit_seed;

    const Circulant circ = project_circulant(m);
    const Toeplitz toep = project_toeplitz(m);
    row.circulant = rel_frobenius_error(materialize(circ), m);
    row.circulant_abs = frobenius_error(materialize(circ), m);
    row.toeplitz = rel_frobenius_error(materialize(toep), m);
    row.toeplitz_abs = frobenius_error(materialize(toep), m);
    row.circulant_json = to_json(Structured(circ));
    try {
      const FitReport lr = fit_low_rank(m, 1, cfg, LowRankTie::kSymmetric);
      row.low_rank = lr.final_error;
      row.low_rank_abs = lr.final_abs_error;
    } catch (const DivergenceError& e) {
      row.failure = e.what();
    }
    try {
      const FitReport kr = fit_kronecker(m, tied, cfg, KronTie::kTransposed);
      row.kronecker = kr.final_error;
      row.kronecker_abs = kr.final_abs_error;
    } catch (const DivergenceError& e) {
      row.failure = e.what();
    }
  });

  json trials = json::array();
  json derived = json::array();
  std::size_t ordered = 0, low_rank_worst = 0;
  double sums[4] = {0, 0, 0, 0};
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const Row& r = rows[t];
    const bool holds = r.low_rank > r.kronecker && r.kronecker > r.circulant && r.circulant > r.toeplitz;
    ordered += holds;
    low_rank_worst += r.low_rank > r.circulant;
    sums[0] += r.low_rank;
    sums[1] += r.kronecker;
    sums[2] += r.circulant;
    sums[3] += r.toeplitz;
    derived.push_back(r.target_seed);
    derived.push_back(r.fit_seed);
    json tr = {{"trial", t},
               {"target_seed", r.target_seed},
               {"fit_seed", r.fit_seed},
               {"relative_error",
                {{"low_rank", number_or_null(r.low_rank)},
                 {"kronecker", number_or_null(r.kronecker)},
                 {"circulant", r.circulant},
                 {"toeplitz", r.toeplitz}}},
               {"absolute_error",
                {{"low_rank", number_or_null(r.low_rank_abs)},
                 {"kronecker", number_or_null(r.kronecker_abs)},
                 {"circulant", r.circulant_abs},
                 {"toeplitz", r.toeplitz_abs}}},
               {"ordering_holds", holds},
               {"circulant_approximator", r.circulant_json}};
    if (!r.failure.empty()) tr["failure"] = r.failure;
    trials.push_back(std::move(tr));
  }
  const double count = static_cast<double>(opt.trials);
  const std::size_t need = static_cast<std::size_t>(std::ceil(0.9 * count));
  json summary = {
      {"ordering_count", ordered},
      {"trials", opt.trials},
      {"mean_relative_error",
       {{"low_rank", number_or_null(sums[0] / count)},
        {"kronecker", number_or_null(sums[1] / count)},
        {"circulant", sums[2] / count},
        {"toeplitz", sums[3] / count}}},
      {"parameter_counts",
       {{"low_rank", opt.n}, {"kronecker", tied.m1 * tied.n1}, {"circulant", opt.n}, {"toeplitz", 2 * opt.n - 1}}},
      {"kronecker_factor", std::to_string(tied.m1) + "x" + std::to_string(tied.n1) + " tied with its transpose"},
      {"note", "toeplitz uses 2n - 1 parameters, twice the circulant budget"}};
  json claims = json::array();
  const std::string tally = std::to_string(ordered) + "/" + std::to_string(opt.trials) + " trials";
  claims.push_back(claim("ordering_every_trial", ordered == opt.trials,
                         "low-rank > kronecker > circulant > toeplitz in " + tally));
  claims.push_back(claim("ordering_at_least_90_percent", ordered >= need,
                         tally + ", need " + std::to_string(need)));
  claims.push_back(claim("low_rank_worse_than_circulant", low_rank_worst == opt.trials,
                         std::to_string(low_rank_worst) + "/" + std::to_string(opt.trials) + " trials"));

  json config = {{"n", opt.n},
                 {"trials", opt.trials},
                 {"seed", opt.seed},
                 {"iters", opt.iters},
                 {"learning_rate", opt.learning_rate},
                 {"record_every", base.record_every},
                 {"init_scale", base.init_scale},
                 {"low_rank", "v v^T (rank 1, symmetric)"},
                 {"kronecker_shape", {tied.m1, tied.n1}}};
  return report("approx-psd", config, {{"master", opt.seed}, {"derived", derived}}, trials, summary, claims, start);
}

// ---------------------------------------------------------------------------

json approx_classes(const ClassOptions& opt, std::string* csv) {
  const auto start = Clock::now();
  if (opt.n < 2) throw std::invalid_argument("approx-classes: --n must be >= 2");
  if (opt.eps < 0.0) throw std::invalid_argument("approx-classes: --eps must be >= 0");
  const std::uint64_t target_seed = derive_seed(opt.seed, 0);
  const std::uint64_t fit_seed = derive_seed(opt.seed, 1);

  Rng rng(target_seed);
  DenseMatrix m;
  if (opt.matrix_class == "random") {
    m = gen_random_gaussian(opt.n, rng);
  } else if (opt.matrix_class == "near-low-rank") {
    if (opt.target_rank < 1 || opt.target_rank > opt.n) {
      throw std::invalid_argument("approx-classes: --target-rank must be in [1, n]");
    }
    m = gen_near_low_rank(opt.n, opt.target_rank, opt.eps, rng);
  } else if (opt.matrix_class == "low-intrinsic") {
    m = gen_low_intrinsic(opt.n, opt.eps, rng);
  } else {
    throw std::invalid_argument("approx-classes: unknown class \"" + opt.matrix_class + "\"");
  }

  FitConfig cfg = opt.method == "ldr" ? FitConfig::for_ldr(fit_seed) : FitConfig(fit_seed);
  if (opt.method != "ldr") cfg.learning_rate = 0.25 / static_cast<double>(opt.n);
  if (opt.learning_rate > 0.0) cfg.learning_rate = opt.learning_rate;
  cfg.max_iters = opt.iters;
  cfg.validate();

  json trial = {{"target_seed", target_seed}, {"fit_seed", fit_seed}};
  json claims = json::array();
  std::optional<FitReport> fit;
  std::string failure;
  double closed_form = NAN;
  std::size_t params = 0;

  try {
    if (opt.method == "circulant") {
      const Circulant c = project_circulant(m);
      closed_form = rel_frobenius_error(materialize(c), m);
      params = opt.n;
      fit = fit_circulant_gd(m, cfg);
    } else if (opt.method == "toeplitz") {
      const Toeplitz t = project_toeplitz(m);
      closed_form = rel_frobenius_error(materialize(t), m);
      params = 2 * opt.n - 1;
      fit = fit_toeplitz_gd(m, cfg);
    } else if (opt.method == "ldr") {
      if (opt.r < 1) throw std::invalid_argument("approx-classes: --r must be >= 1");
      params = 2 * opt.n * opt.r;
      fit = fit_ldr(m, opt.r, cfg);
    } else {
      throw std::invalid_argument("approx-classes: unknown method \"" + opt.method + "\"");
    }
  } catch (const DivergenceError& e) {
    failure = e.what();
  }

  if (fit) {
    trial["gd_final_error"] = fit->final_error;
    trial["iterations"] = fit->iterations;
    trial["approximator"] = to_json(fit->approximator);
    if (csv) *csv = trace_csv(*fit);
  } else {
    trial["failure"] = failure;
    if (csv) *csv = "iter,error\n";
  }
  if (std::isfinite(closed_form)) trial["closed_form_error"] = closed_form;
  const double final_error = std::isfinite(closed_form) ? closed_form : (fit ? fit->final_error : NAN);
  trial["final_error"] = number_or_null(final_error);

  claims.push_back(claim("fit_completed", fit.has_value(), fit ? "gradient descent finished" : failure));
  if (fit && std::isfinite(closed_form)) {
    const double gap = std::abs(fit->final_error - closed_form) * frobenius_norm(m);
    claims.push_back(claim("gd_matches_closed_form", gap < 1e-6, "Frobenius gap " + fmt(gap)));
  }

  json summary = {{"final_error", number_or_null(final_error)}, {"parameter_count", params}};
  json config = {{"class", opt.matrix_class},
                 {"method", opt.method},
                 {"r", opt.r},
                 {"target_rank", opt.target_rank},
                 {"eps", opt.eps},
                 {"n", opt.n},
                 {"seed", opt.seed},
                 {"iters", cfg.max_iters},
                 {"learning_rate", cfg.learning_rate},
                 {"record_every", cfg.record_every},
                 {"init_scale", cfg.init_scale}};
  return report("approx-classes", config, {{"master", opt.seed}, {"derived", {target_seed, fit_seed}}},
                json::array({trial}), summary, claims, start);
}

// ---------------------------------------------------------------------------

json pinwheel(const PinwheelOptions& opt, std::string* csv, std::string* grid) {
  const auto start = Clock::now();
  const HiddenKind kind = parse_hidden_kind(opt.layer);
  PinwheelConfig pc;
  pc.spokes = opt.spokes;
  pc.points_per_spoke = opt.points_per_spoke;
  pc.noise_std = opt.noise_std;
  pc.angular_rate = opt.angular_rate;
  pc.seed = opt.seed;
  const LabeledData data = gen_pinwheel(pc);

  auto config_for = [&](HiddenKind k) {
    MlpConfig mc;
    mc.hidden_kind = k;
    mc.classes = opt.spokes;
    mc.epochs = opt.epochs;
    mc.learning_rate = opt.learning_rate;
    mc.freeze_embedding = opt.freeze_embedding;
    mc.seed = opt.seed;
    return mc;
  };

  std::vector<HiddenKind> kinds{kind};
  if (opt.compare) {
    for (HiddenKind k : {HiddenKind::kDense, HiddenKind::kLowRank1, HiddenKind::kCirculant})
      if (k != kind) kinds.push_back(k);
  }
  std::vector<std::optional<TrainTrace>> traces(kinds.size());
  parallel_for(kinds.size(), [&](std::size_t i) { traces[i] = train(config_for(kinds[i]), data); });

  const TrainTrace& main = *traces[0];
  if (csv) *csv = trace_csv(main);
  if (grid) *grid = decision_grid_csv(main.model, data);

  auto find = [&](HiddenKind k) -> const TrainTrace* {
    for (std::size_t i = 0; i < kinds.size(); ++i)
      if (kinds[i] == k) return &*traces[i];
    return nullptr;
  };
  const TrainTrace* dense = find(HiddenKind::kDense);
  const DenseMatrix dense_rep = dense ? dense->model.hidden_representation(data.x) : DenseMatrix();

  json trials = json::array();
  std::map<HiddenKind, double> cka_vs_dense;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    const TrainTrace& t = *traces[i];
    json tr = to_json(t);
    tr["layer"] = hidden_kind_name(kinds[i]);
    tr["role"] = i == 0 ? "run" : "reference";
    if (dense) {
      try {
        const double c = cka(t.model.hidden_representation(data.x), dense_rep);
        cka_vs_dense[kinds[i]] = c;
        tr["cka_vs_dense"] = c;
      } catch (const std::domain_error&) {
        tr["cka_vs_dense"] = nullptr;
      }
    }
    trials.push_back(std::move(tr));
  }

  json claims = json::array();
  claims.push_back(claim("loss_finite", !main.diverged,
                         main.diverged ? "non-finite loss during training" : "loss finite at every epoch"));
  const double acc = main.final_stats().accuracy;
  const double loss = main.final_stats().loss;
  const bool structured = kind == HiddenKind::kCirculant || kind == HiddenKind::kSymToeplitz ||
                          kind == HiddenKind::kToeplitz;
  if (kind == HiddenKind::kDense && opt.epochs > 0) {
    claims.push_back(claim("dense_accuracy_at_least_95_percent", acc >= 0.95, "accuracy " + fmt(acc)));
  }
  if (opt.compare && structured) {
    const double dacc = dense->final_stats().accuracy;
    claims.push_back(claim("accuracy_within_5_points_of_dense", std::abs(acc - dacc) <= 0.05,
                           "accuracy " + fmt(acc) + " vs dense " + fmt(dacc)));
    const TrainTrace* lr = find(HiddenKind::kLowRank1);
    claims.push_back(claim("loss_below_rank1", loss < lr->final_stats().loss,
                           "loss " + fmt(loss) + " vs rank-1 " + fmt(lr->final_stats().loss)));
    if (cka_vs_dense.count(kind) && cka_vs_dense.count(HiddenKind::kLowRank1)) {
      claims.push_back(claim("cka_above_rank1", cka_vs_dense[kind] > cka_vs_dense[HiddenKind::kLowRank1],
                             "CKA " + fmt(cka_vs_dense[kind]) + " vs rank-1 " +
                                 fmt(cka_vs_dense[HiddenKind::kLowRank1])));
    }
  }
  if (opt.compare && kind == HiddenKind::kLowRank1) {
    const TrainTrace* c = find(HiddenKind::kCirculant);
    claims.push_back(claim("loss_above_circulant", loss > c->final_stats().loss,
                           "loss " + fmt(loss) + " vs circulant " + fmt(c->final_stats().loss)));
  }

  json summary = {{"final_loss", loss},
                  {"final_accuracy", acc},
                  {"hidden_param_count", main.hidden_param_count},
                  {"trainable_param_count", main.trainable_param_count},
                  {"diverged", main.diverged},
                  {"samples", data.size()}};
  json config = {{"layer", opt.layer},
                 {"epochs", opt.epochs},
                 {"freeze_embedding", opt.freeze_embedding},
                 {"seed", opt.seed},
                 {"learning_rate", opt.learning_rate},
                 {"compare", opt.compare},
                 {"mlp", config_for(kind).to_json()},
                 {"pinwheel",
                  {{"spokes", pc.spokes},
                   {"points_per_spoke", pc.points_per_spoke},
                   {"noise_std", pc.noise_std},
                   {"angular_rate", pc.angular_rate},
                   {"radius_min", pc.radius_min},
                   {"radius_max", pc.radius_max}}}};
  return report("pinwheel", config, {{"master", opt.seed}, {"derived", json::array()}}, trials, summary, claims,
                start);
}

// ---------------------------------------------------------------------------

json kron_shapes(std::size_t dim) {
  const auto start = Clock::now();
  if (dim < 1) throw std::invalid_argument("kron-shapes: --dim must be >= 1");
  const KronShapePlan p = optimal_kron_shapes(dim);
  json summary = {{"A", {p.m1, p.n1}},
                  {"B", {p.m2, p.n2}},
                  {"param_count", p.param_count},
                  {"lower_bound", p.lower_bound},
                  {"max_rank", p.max_rank},
                  {"degenerate", p.degenerate}};
  if (p.degenerate) summary["warning"] = "dim has no nontrivial factorization; plan is 1 x d and d x 1";
  json claims = json::array({claim("attains_lower_bound", p.param_count == p.lower_bound,
                                   std::to_string(p.param_count) + " params vs bound " +
                                       std::to_string(p.lower_bound))});
  return report("kron-shapes", {{"dim", dim}}, {{"master", nullptr}, {"derived", json::array()}}, json::array(),
                summary, claims, start);
}

// ---------------------------------------------------------------------------

json analyze(const std::string& text, const std::string& source) {
  const auto start = Clock::now();
  const json input = json::parse(text);

  Structured s = DenseMatrix();
  json summary;
  double alpha = 1.0;
  if (input.is_object() && input.contains("variant")) {
    const SurmDelta dw = delta_from_json(input);
    alpha = dw.alpha;
    s = merge_delta(dw);
    summary["input"] = "delta";
    summary["variant"] = dw.variant_name();
    summary["alpha"] = alpha;
    summary["parameter_count"] = dw.parameter_count();
  } else {
    s = structured_from_json(input);
    summary["input"] = "structured";
    summary["parameter_count"] = parameter_count(s);
  }
  summary["kind"] = kind_name(s);

  const DenseMatrix dense = materialize(s);
  summary["shape"] = {dense.rows(), dense.cols()};
  const std::size_t svd_rank = alpha == 0.0 ? 0 : numerical_rank(dense);
  const std::size_t rank = alpha == 0.0 ? 0 : structured_rank(s);
  summary["rank"] = rank;

  json claims = json::array();
  if (dense.square()) {
    const std::size_t n = dense.rows();
    bool nonsingular = false;
    std::string method;
    if (alpha == 0.0) {
      method = "zero scale";
    } else if (const auto* c = std::get_if<Circulant>(&s)) {
      method = "eigenvalue product";
      nonsingular = circulant_nonsingular(*c);
      const auto det = std::pow(alpha, static_cast<double>(n)) * circulant_determinant(*c);
      summary["determinant"] = {{"real", number_or_null(det.real())}, {"imag", number_or_null(det.imag())}};
    } else if (const auto* t = std::get_if<Toeplitz>(&s)) {
      method = "gohberg-semencul";
      nonsingular = toeplitz_invertible(*t).invertible;
    } else if (const auto* st = std::get_if<SymToeplitz>(&s)) {
      method = "gohberg-semencul";
      nonsingular = toeplitz_invertible(*st).invertible;
    } else {
      method = "svd";
      nonsingular = svd_rank == n;
    }
    if (!summary.contains("determinant")) summary["determinant"] = number_or_null(std::pow(alpha, n) * determinant(dense));
    summary["nonsingular"] = nonsingular;
    summary["nonsingularity_method"] = method;
    claims.push_back(claim("decision_matches_svd_rank", nonsingular == (svd_rank == n),
                           "svd rank " + std::to_string(svd_rank) + " of " + std::to_string(n)));
  }
  claims.push_back(claim("rank_matches_svd", rank == svd_rank,
                         "structured rank " + std::to_string(rank) + ", svd rank " + std::to_string(svd_rank)));
  return report("analyze", {{"input", source}}, {{"master", nullptr}, {"derived", json::array()}}, json::array(),
                summary, claims, start);
}

}  // namespace surm::cli
