#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "oracles.hpp"
#include "surm/generators.hpp"
#include "surm/mlp.hpp"
#include "surm/pinwheel.hpp"
#include "surm/similarity.hpp"
#include "surm/structured.hpp"

using namespace surm;

namespace {

const std::vector<HiddenKind> kAllKinds = {HiddenKind::kDense, HiddenKind::kLowRank1, HiddenKind::kCirculant,
                                           HiddenKind::kSymToeplitz, HiddenKind::kToeplitz};

const ParamBlock& block(const Mlp& m, const std::string& name) {
  for (const auto& b : m.blocks())
    if (b.name == name) return b;
  FAIL("missing block " << name);
  return m.blocks().front();
}

LabeledData subset(const LabeledData& d, std::size_t stride) {
  LabeledData out;
  out.classes = d.classes;
  std::vector<double> rows;
  for (std::size_t i = 0; i < d.size(); i += stride) {
    rows.push_back(d.x(i, 0));
    rows.push_back(d.x(i, 1));
    out.labels.push_back(d.labels[i]);
  }
  out.x = DenseMatrix(out.labels.size(), 2, rows);
  return out;
}

}  // namespace

TEST_CASE("pinwheel generator") {
  PinwheelConfig cfg;
  const LabeledData d = gen_pinwheel(cfg);
  CHECK(d.size() == 500);
  CHECK(d.x.rows() == 500);
  CHECK(d.x.cols() == 2);
  CHECK(d.classes == 5);
  std::vector<std::size_t> counts(5, 0);
  for (std::size_t l : d.labels) ++counts.at(l);
  for (std::size_t c : counts) CHECK(c == 100);

  const LabeledData again = gen_pinwheel(cfg);
  CHECK(again.x == d.x);
  PinwheelConfig other = cfg;
  other.seed = 1;
  CHECK_FALSE(gen_pinwheel(other).x == d.x);

  // Without noise, every point lies on its arm.
  PinwheelConfig clean = cfg;
  clean.noise_std = 0.0;
  const LabeledData c = gen_pinwheel(clean);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double r = std::hypot(c.x(i, 0), c.x(i, 1));
    const auto [ax, ay] = pinwheel_arm_point(clean, c.labels[i], r);
    CHECK(std::hypot(ax - c.x(i, 0), ay - c.x(i, 1)) < 1e-12);
    CHECK(r >= clean.radius_min);
    CHECK(r <= clean.radius_max);
  }

  PinwheelConfig bad = cfg;
  bad.spokes = 0;
  CHECK_THROWS_AS(gen_pinwheel(bad), std::invalid_argument);
  bad = cfg;
  bad.noise_std = -1.0;
  CHECK_THROWS_AS(gen_pinwheel(bad), std::invalid_argument);
}

TEST_CASE("hidden parameter counts and matrices") {
  CHECK(hidden_param_count(HiddenKind::kDense, 64) == 4096);
  CHECK(hidden_param_count(HiddenKind::kLowRank1, 64) == 128);
  CHECK(hidden_param_count(HiddenKind::kCirculant, 64) == 64);
  CHECK(hidden_param_count(HiddenKind::kSymToeplitz, 64) == 64);
  CHECK(hidden_param_count(HiddenKind::kToeplitz, 64) == 127);
  for (HiddenKind k : kAllKinds) {
    CHECK(parse_hidden_kind(hidden_kind_name(k)) == k);
    MlpConfig cfg;
    cfg.hidden_kind = k;
    const Mlp m(cfg);
    CHECK(m.hidden_param_count() == hidden_param_count(k, 64));
    // Frozen embedding: trainable = hidden + hidden bias + head.
    CHECK(m.trainable_param_count() == hidden_param_count(k, 64) + 64 + 64 * 5 + 5);
  }
  CHECK_THROWS_AS(parse_hidden_kind("kronecker"), std::invalid_argument);

  MlpConfig cfg;
  cfg.hidden_kind = HiddenKind::kCirculant;
  const Mlp circ(cfg);
  const RealVec& col = block(circ, "hidden.column").values;
  CHECK(circ.hidden_matrix() == materialize(Circulant(col)));

  cfg.hidden_kind = HiddenKind::kSymToeplitz;
  const Mlp sym(cfg);
  CHECK(sym.hidden_matrix() == materialize(SymToeplitz(block(sym, "hidden.diagonals").values)));

  cfg.hidden_kind = HiddenKind::kToeplitz;
  const Mlp toe(cfg);
  const RealVec& tc = block(toe, "hidden.column").values;
  const RealVec& tail = block(toe, "hidden.row_tail").values;
  REQUIRE(tail.size() == 63);
  const DenseMatrix tm = toe.hidden_matrix();
  for (std::size_t i = 0; i < 64; ++i)
    for (std::size_t j = 0; j < 64; ++j) CHECK(tm(i, j) == (i >= j ? tc[i - j] : tail[j - i - 1]));

  cfg.hidden_kind = HiddenKind::kLowRank1;
  const Mlp lr(cfg);
  const DenseMatrix lm = lr.hidden_matrix();
  CHECK(numerical_rank(lm) == 1);
  const RealVec& u = block(lr, "hidden.u").values;
  const RealVec& v = block(lr, "hidden.v").values;
  CHECK(lm(3, 7) == doctest::Approx(u[3] * v[7]));

  MlpConfig bad;
  bad.learning_rate = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = MlpConfig{};
  bad.embed_dim = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("end-to-end gradients match finite differences") {
  const LabeledData data = subset(gen_pinwheel(PinwheelConfig{}), 25);
  REQUIRE(data.size() == 20);
  Rng pick(31);
  for (HiddenKind k : kAllKinds) {
    for (bool freeze : {true, false}) {
      MlpConfig cfg;
      cfg.hidden_kind = k;
      cfg.freeze_embedding = freeze;
      cfg.seed = 3;
      Mlp m(cfg);
      std::vector<RealVec> grads;
      m.loss_and_grad(data.x, data.labels, &grads);
      REQUIRE(grads.size() == m.blocks().size());
      for (std::size_t b = 0; b < m.blocks().size(); ++b) {
        auto& values = m.blocks()[b].values;
        REQUIRE(grads[b].size() == values.size());
        if (!m.blocks()[b].trainable) {
          for (double g : grads[b]) CHECK(g == 0.0);
          continue;
        }
        for (int c = 0; c < 8; ++c) {
          const std::size_t idx = static_cast<std::size_t>(pick.uniform() * static_cast<double>(values.size()));
          const double fd = oracle::central_difference(
              values, idx, [&] { return m.loss_and_grad(data.x, data.labels, nullptr); }, 1e-5);
          INFO(hidden_kind_name(k) << " " << m.blocks()[b].name << "[" << idx << "]");
          CHECK(oracle::rel_err(grads[b][idx], fd, 1e-7) < 1e-4);
        }
      }
    }
  }
}

TEST_CASE("training traces") {
  const LabeledData data = gen_pinwheel(PinwheelConfig{});
  MlpConfig cfg;
  cfg.hidden_kind = HiddenKind::kCirculant;
  cfg.epochs = 0;
  const TrainTrace t0 = train(cfg, data);
  REQUIRE(t0.epochs.size() == 1);
  // Untrained: loss near log(classes).
  CHECK(std::abs(t0.final_stats().loss - std::log(5.0)) < 0.5);
  CHECK(t0.final_stats().accuracy < 0.6);

  cfg.epochs = 30;
  const TrainTrace a = train(cfg, data);
  const TrainTrace b = train(cfg, data);
  REQUIRE(a.epochs.size() == 31);
  for (std::size_t e = 0; e < a.epochs.size(); ++e) {
    CHECK(a.epochs[e].epoch == e);
    CHECK(a.epochs[e].loss == b.epochs[e].loss);
  }
  CHECK(a.final_stats().loss < a.epochs.front().loss);
  CHECK_FALSE(a.diverged);
  CHECK(a.hidden_param_count == 64);

  const std::string csv = trace_csv(a);
  CHECK(csv.rfind("epoch,loss,accuracy\n0,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 32);

  const auto j = to_json(a);
  CHECK(j["config"]["hidden_layer_kind"] == "circulant");

  cfg.learning_rate = 1e6;
  cfg.epochs = 50;
  const TrainTrace d = train(cfg, data);
  CHECK(d.diverged);
  CHECK(d.epochs.size() <= 51);

  const std::string grid = decision_grid_csv(a.model, data, 10);
  CHECK(grid.rfind("x,y,predicted_label\n", 0) == 0);
  CHECK(std::count(grid.begin(), grid.end(), '\n') == 101);
}

TEST_CASE("CKA") {
  Rng rng(32);
  const DenseMatrix x = gaussian_matrix(50, 8, rng);
  CHECK(cka(x, x) == doctest::Approx(1.0));
  // Invariant to orthogonal transforms and isotropic scaling.
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(oracle::to_eigen(gaussian_matrix(8, 8, rng)))
                                .householderQ();
  const DenseMatrix xr = oracle::from_eigen_matrix(3.0 * oracle::to_eigen(x) * q);
  CHECK(cka(x, xr) == doctest::Approx(1.0));
  for (int t = 0; t < 10; ++t) {
    const double v = cka(x, gaussian_matrix(50, 5, rng));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  // Independent reference: HSIC form with centering matrix.
  const Eigen::MatrixXd ex = oracle::to_eigen(x);
  const DenseMatrix y = gaussian_matrix(50, 4, rng);
  const Eigen::MatrixXd ey = oracle::to_eigen(y);
  const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(50, 50) - Eigen::MatrixXd::Constant(50, 50, 1.0 / 50);
  const Eigen::MatrixXd kx = h * ex * ex.transpose() * h, ky = h * ey * ey.transpose() * h;
  const double ref = (kx.cwiseProduct(ky)).sum() / (kx.norm() * ky.norm());
  CHECK(cka(x, y) == doctest::Approx(ref).epsilon(1e-10));

  CHECK_THROWS_AS(cka(x, DenseMatrix(50, 3, 2.0)), std::domain_error);
  CHECK_THROWS_AS(cka(DenseMatrix(1, 3, 1.0), DenseMatrix(1, 3, 1.0)), std::domain_error);
}

TEST_CASE("weight similarity") {
  const DenseMatrix a{{1.0, 0.0}, {0.0, 0.0}};
  const DenseMatrix b{{0.0, 1.0}, {0.0, 0.0}};
  const DenseMatrix c{{1.0, 1.0}, {0.0, 0.0}};
  CHECK(weight_similarity(a, a) == doctest::Approx(0.0));
  CHECK(weight_similarity(-1.0 * a, a) == doctest::Approx(2.0));
  CHECK(weight_similarity(a, b) == doctest::Approx(1.0));
  CHECK(weight_similarity(a, c) == doctest::Approx(1.0 - 1.0 / std::numbers::sqrt2));
  CHECK_THROWS_AS(weight_similarity(DenseMatrix(2, 2), a), std::domain_error);
}
