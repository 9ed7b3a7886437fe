#include "surm/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <locale>
#include <sstream>
#include <stdexcept>

#include "surm/generators.hpp"
#include "surm/layers.hpp"
#include "surm/rng.hpp"
#include "surm/structured.hpp"

namespace surm {

std::string hidden_kind_name(HiddenKind kind) {
  switch (kind) {
    case HiddenKind::kDense: return "dense";
    case HiddenKind::kLowRank1: return "low-rank-1";
    case HiddenKind::kCirculant: return "circulant";
    case HiddenKind::kSymToeplitz: return "sym-toeplitz";
    case HiddenKind::kToeplitz: return "toeplitz";
  }
  return "unknown";
}

HiddenKind parse_hidden_kind(const std::string& name) {
  for (HiddenKind k : {HiddenKind::kDense, HiddenKind::kLowRank1, HiddenKind::kCirculant, HiddenKind::kSymToeplitz,
                       HiddenKind::kToeplitz}) {
    if (hidden_kind_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown hidden layer kind \"" + name +
                              "\" (expected dense, low-rank-1, circulant, sym-toeplitz or toeplitz)");
}

std::size_t hidden_param_count(HiddenKind kind, std::size_t dim) {
  switch (kind) {
    case HiddenKind::kDense: return dim * dim;
    case HiddenKind::kLowRank1: return 2 * dim;
    case HiddenKind::kCirculant: return dim;
    case HiddenKind::kSymToeplitz: return dim;
    case HiddenKind::kToeplitz: return 2 * dim - 1;
  }
  return 0;
}

void MlpConfig::validate() const {
  if (input_dim < 1 || embed_dim < 1) throw std::invalid_argument("mlp: dimensions must be >= 1");
  if (classes < 2) throw std::invalid_argument("mlp: classes must be >= 2");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("mlp: learning_rate must be positive and finite");
  }
}

nlohmann::json MlpConfig::to_json() const {
  return {{"input_dim", input_dim},
          {"embed_dim", embed_dim},
          {"hidden_layer_kind", hidden_kind_name(hidden_kind)},
          {"classes", classes},
          {"epochs", epochs},
          {"learning_rate", learning_rate},
          {"freeze_embedding", freeze_embedding},
          {"optimizer", "full-batch gradient descent"},
          {"embedding_activation", "tanh"},
          {"hidden_activation", "gelu"},
          {"seed", seed}};
}

namespace {

void add_row_bias(DenseMatrix& m, const RealVec& b) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    for (std::size_t j = 0; j < b.size(); ++j) row[j] += b[j];
  }
}

RealVec column_sums(const DenseMatrix& m) {
  RealVec s(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) s[j] += row[j];
  }
  return s;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

Mlp::Mlp(const MlpConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t d = cfg_.embed_dim;
  const double embed_scale = 1.0 / std::sqrt(2.0);
  const double hidden_scale = 1.0 / std::sqrt(static_cast<double>(d));

  Rng embed_rng(derive_seed(cfg_.seed, 0));
  Rng hidden_rng(derive_seed(cfg_.seed, 1));
  Rng head_rng(derive_seed(cfg_.seed, 2));

  const bool embed_trainable = !cfg_.freeze_embedding;
  blocks_.push_back({"embed.weight", gaussian_vector(d * cfg_.input_dim, embed_rng, embed_scale), embed_trainable});
  blocks_.push_back({"embed.bias", gaussian_vector(d, embed_rng, embed_scale), embed_trainable});

  switch (cfg_.hidden_kind) {
    case HiddenKind::kDense:
      blocks_.push_back({"hidden.weight", gaussian_vector(d * d, hidden_rng, hidden_scale), true});
      break;
    case HiddenKind::kLowRank1: {
      // u v^T with entries of the same spread as the dense init.
      const double s = std::sqrt(hidden_scale);
      blocks_.push_back({"hidden.u", gaussian_vector(d, hidden_rng, s), true});
      blocks_.push_back({"hidden.v", gaussian_vector(d, hidden_rng, s), true});
      break;
    }
    case HiddenKind::kCirculant:
      blocks_.push_back({"hidden.column", gaussian_vector(d, hidden_rng, hidden_scale), true});
      break;
    case HiddenKind::kSymToeplitz:
      blocks_.push_back({"hidden.diagonals", gaussian_vector(d, hidden_rng, hidden_scale), true});
      break;
    case HiddenKind::kToeplitz:
      blocks_.push_back({"hidden.column", gaussian_vector(d, hidden_rng, hidden_scale), true});
      blocks_.push_back({"hidden.row_tail", gaussian_vector(d - 1, hidden_rng, hidden_scale), true});
      break;
  }
  hidden_bias_ = blocks_.size();
  blocks_.push_back({"hidden.bias", RealVec(d, 0.0), true});
  blocks_.push_back({"head.weight", gaussian_vector(cfg_.classes * d, head_rng, hidden_scale), true});
  blocks_.push_back({"head.bias", RealVec(cfg_.classes, 0.0), true});
}

DenseMatrix Mlp::hidden_matrix() const {
  const std::size_t d = cfg_.embed_dim;
  const RealVec& p = blocks_[hidden_first()].values;
  switch (cfg_.hidden_kind) {
    case HiddenKind::kDense: return DenseMatrix(d, d, p);
    case HiddenKind::kLowRank1: {
      const RealVec& v = blocks_[hidden_first() + 1].values;
      DenseMatrix w(d, d);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) w(i, j) = p[i] * v[j];
      return w;
    }
    case HiddenKind::kCirculant: return materialize(Circulant(p));
    case HiddenKind::kSymToeplitz: return materialize(SymToeplitz(p));
    case HiddenKind::kToeplitz: {
      const RealVec& tail = blocks_[hidden_first() + 1].values;
      RealVec row(d);
      row[0] = p[0];
      std::copy(tail.begin(), tail.end(), row.begin() + 1);
      return materialize(Toeplitz(p, std::move(row)));
    }
  }
  throw std::logic_error("hidden_matrix: unknown kind");
}

Mlp::Activations Mlp::forward(const DenseMatrix& x) const {
  if (x.cols() != cfg_.input_dim) throw DimensionError("mlp: input has wrong width");
  const std::size_t d = cfg_.embed_dim;
  Activations a;
  a.h1 = matmul_nt(x, DenseMatrix(d, cfg_.input_dim, blocks_[0].values));
  add_row_bias(a.h1, blocks_[1].values);
  for (double& v : a.h1.data()) v = std::tanh(v);

  a.z = matmul_nt(a.h1, hidden_matrix());
  add_row_bias(a.z, blocks_[hidden_bias_].values);
  a.h2 = a.z;
  for (double& v : a.h2.data()) v = gelu(v);

  a.logits = matmul_nt(a.h2, DenseMatrix(cfg_.classes, d, blocks_[hidden_bias_ + 1].values));
  add_row_bias(a.logits, blocks_[hidden_bias_ + 2].values);
  return a;
}

double Mlp::loss_and_grad(const DenseMatrix& x, const std::vector<std::size_t>& labels, std::vector<RealVec>* grads,
                          double* accuracy) const {
  if (x.rows() == 0 || x.rows() != labels.size()) throw std::invalid_argument("mlp: data must be nonempty");
  const Activations a = forward(x);
  const std::size_t n = x.rows();
  const std::size_t c = cfg_.classes;
  const std::size_t d = cfg_.embed_dim;

  // Softmax cross-entropy; dlogits = (p - onehot) / n.
  DenseMatrix dlogits(n, c);
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= c) throw std::invalid_argument("mlp: label out of range");
    const auto row = a.logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - mx);
    loss += std::log(sum) + mx - row[labels[i]];
    if (argmax(row) == labels[i]) ++correct;
    for (std::size_t k = 0; k < c; ++k) {
      dlogits(i, k) = (std::exp(row[k] - mx) / sum - (k == labels[i] ? 1.0 : 0.0)) / static_cast<double>(n);
    }
  }
  loss /= static_cast<double>(n);
  if (accuracy != nullptr) *accuracy = static_cast<double>(correct) / static_cast<double>(n);
  if (grads == nullptr) return loss;

  grads->assign(blocks_.size(), RealVec());
  for (std::size_t b = 0; b < blocks_.size(); ++b) (*grads)[b].assign(blocks_[b].values.size(), 0.0);

  const DenseMatrix head_w(c, d, blocks_[hidden_bias_ + 1].values);
  (*grads)[hidden_bias_ + 1] = matmul_tn(dlogits, a.h2).data();
  (*grads)[hidden_bias_ + 2] = column_sums(dlogits);

  DenseMatrix dz = matmul(dlogits, head_w);
  for (std::size_t k = 0; k < dz.size(); ++k) dz.data()[k] *= gelu_grad(a.z.data()[k]);
  (*grads)[hidden_bias_] = column_sums(dz);

  // Sum over samples of dz_s h1_s^T, pulled back to the structured parameters.
  const DenseMatrix outer = matmul_tn(dz, a.h1);
  const std::size_t h = hidden_first();
  switch (cfg_.hidden_kind) {
    case HiddenKind::kDense: (*grads)[h] = outer.data(); break;
    case HiddenKind::kLowRank1:
      (*grads)[h] = matvec(outer, blocks_[h + 1].values);
      (*grads)[h + 1] = matvec_t(outer, blocks_[h].values);
      break;
    case HiddenKind::kCirculant: (*grads)[h] = circulant_adjoint(outer); break;
    case HiddenKind::kSymToeplitz: (*grads)[h] = sym_toeplitz_adjoint(outer); break;
    case HiddenKind::kToeplitz: {
      ToeplitzGrad g = toeplitz_adjoint(outer);
      (*grads)[h] = std::move(g.col);
      (*grads)[h + 1].assign(g.row.begin() + 1, g.row.end());
      break;
    }
  }

  if (!cfg_.freeze_embedding) {
    DenseMatrix dh1 = matmul(dz, hidden_matrix());
    for (std::size_t k = 0; k < dh1.size(); ++k) {
      const double t = a.h1.data()[k];
      dh1.data()[k] *= 1.0 - t * t;
    }
    (*grads)[0] = matmul_tn(dh1, x).data();
    (*grads)[1] = column_sums(dh1);
  }
  return loss;
}

std::vector<std::size_t> Mlp::predict(const DenseMatrix& x) const {
  const Activations a = forward(x);
  std::vector<std::size_t> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = argmax(a.logits.row(i));
  return out;
}

DenseMatrix Mlp::hidden_representation(const DenseMatrix& x) const { return forward(x).h2; }

std::size_t Mlp::hidden_param_count() const { return surm::hidden_param_count(cfg_.hidden_kind, cfg_.embed_dim); }

std::size_t Mlp::trainable_param_count() const {
  std::size_t total = 0;
  for (const auto& b : blocks_)
    if (b.trainable) total += b.values.size();
  return total;
}

nlohmann::json Mlp::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& b : blocks_) j[b.name] = {{"trainable", b.trainable}, {"values", b.values}};
  return j;
}

TrainTrace train(const MlpConfig& cfg, const LabeledData& data) {
  if (data.size() == 0) throw std::invalid_argument("train: data must be nonempty");
  TrainTrace trace{cfg, {}, false, 0, 0, Mlp(cfg)};
  Mlp& model = trace.model;
  trace.hidden_param_count = model.hidden_param_count();
  trace.trainable_param_count = model.trainable_param_count();

  std::vector<RealVec> grads;
  for (std::size_t epoch = 0;; ++epoch) {
    const bool last = epoch == cfg.epochs;
    double acc = 0.0;
    const double loss = model.loss_and_grad(data.x, data.labels, last ? nullptr : &grads, &acc);
    trace.epochs.push_back({epoch, loss, acc});
    if (!std::isfinite(loss)) {
      trace.diverged = true;
      break;
    }
    if (last) break;
    for (std::size_t b = 0; b < model.blocks().size(); ++b) {
      ParamBlock& blk = model.blocks()[b];
      if (!blk.trainable) continue;
      for (std::size_t k = 0; k < blk.values.size(); ++k) blk.values[k] -= cfg.learning_rate * grads[b][k];
    }
  }
  return trace;
}

namespace {

std::ostringstream csv_stream() {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  return os;
}

}  // namespace

std::string trace_csv(const TrainTrace& trace) {
  auto os = csv_stream();
  os << "epoch,loss,accuracy\n";
  for (const auto& e : trace.epochs) os << e.epoch << ',' << e.loss << ',' << e.accuracy << '\n';
  return os.str();
}

nlohmann::json to_json(const TrainTrace& trace) {
  const EpochStats& f = trace.final_stats();
  return {{"config", trace.config.to_json()},
          {"final_loss", f.loss},
          {"final_accuracy", f.accuracy},
          {"initial_loss", trace.epochs.front().loss},
          {"epochs_recorded", trace.epochs.size()},
          {"diverged", trace.diverged},
          {"hidden_param_count", trace.hidden_param_count},
          {"trainable_param_count", trace.trainable_param_count}};
}

std::string decision_grid_csv(const Mlp& model, const LabeledData& data, std::size_t resolution) {
  if (resolution < 2) throw std::invalid_argument("decision grid: resolution must be >= 2");
  double lo[2] = {data.x(0, 0), data.x(0, 1)};
  double hi[2] = {lo[0], lo[1]};
  for (std::size_t i = 0; i < data.size(); ++i)
    for (int a = 0; a < 2; ++a) {
      lo[a] = std::min(lo[a], data.x(i, a));
      hi[a] = std::max(hi[a], data.x(i, a));
    }
  for (int a = 0; a < 2; ++a) {
    const double margin = 0.1 * std::max(hi[a] - lo[a], 1e-9);
    lo[a] -= margin;
    hi[a] += margin;
  }
  DenseMatrix grid(resolution * resolution, 2);
  const double steps = static_cast<double>(resolution - 1);
  for (std::size_t i = 0; i < resolution; ++i)
    for (std::size_t j = 0; j < resolution; ++j) {
      grid(i * resolution + j, 0) = lo[0] + (hi[0] - lo[0]) * static_cast<double>(j) / steps;
      grid(i * resolution + j, 1) = lo[1] + (hi[1] - lo[1]) * static_cast<double>(i) / steps;
    }
  const auto labels = model.predict(grid);
  auto os = csv_stream();
  os << "x,y,predicted_label\n";
  for (std::size_t k = 0; k < labels.size(); ++k) os << grid(k, 0) << ',' << grid(k, 1) << ',' << labels[k] << '\n';
  return os.str();
}

}  // namespace surm
