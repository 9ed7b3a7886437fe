#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "surm/linalg.hpp"
#include "surm/pinwheel.hpp"

namespace surm {

enum class HiddenKind { kDense, kLowRank1, kCirculant, kSymToeplitz, kToeplitz };

/// "dense", "low-rank-1", "circulant", "sym-toeplitz", "toeplitz".
std::string hidden_kind_name(HiddenKind kind);
/// Throws std::invalid_argument for unknown names.
HiddenKind parse_hidden_kind(const std::string& name);
/// Parameters of the hidden matrix alone (bias excluded).
std::size_t hidden_param_count(HiddenKind kind, std::size_t dim);

struct MlpConfig {
  std::size_t input_dim = 2;
  std::size_t embed_dim = 64;
  HiddenKind hidden_kind = HiddenKind::kDense;
  std::size_t classes = 5;
  std::size_t epochs = 2000;
  double learning_rate = 0.05;
  bool freeze_embedding = true;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
};

struct ParamBlock {
  std::string name;
  RealVec values;
  bool trainable = true;
};

/// embed (input_dim -> embed_dim) -> tanh -> hidden (embed_dim x embed_dim,
/// structured) + bias -> GeLU -> head (embed_dim -> classes) -> softmax.
class Mlp {
 public:
  explicit Mlp(const MlpConfig& cfg);

  const MlpConfig& config() const { return cfg_; }
  std::vector<ParamBlock>& blocks() { return blocks_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }

  /// Blocks holding the hidden matrix parameters: [first, last).
  std::size_t hidden_first() const { return 2; }
  std::size_t hidden_last() const { return hidden_bias_; }

  DenseMatrix hidden_matrix() const;

  /// Mean softmax cross-entropy. When grads is non-null it receives one
  /// vector per block (zeros for frozen blocks). When accuracy is non-null it
  /// receives the fraction of correct argmax predictions.
  double loss_and_grad(const DenseMatrix& x, const std::vector<std::size_t>& labels, std::vector<RealVec>* grads,
                       double* accuracy = nullptr) const;

  std::vector<std::size_t> predict(const DenseMatrix& x) const;
  /// Post-GeLU hidden activations, one row per sample.
  DenseMatrix hidden_representation(const DenseMatrix& x) const;

  std::size_t hidden_param_count() const;
  std::size_t trainable_param_count() const;

  nlohmann::json to_json() const;

 private:
  struct Activations {
    DenseMatrix h1;  // tanh(embedding)
    DenseMatrix z;   // hidden pre-activation
    DenseMatrix h2;  // gelu(z)
    DenseMatrix logits;
  };
  Activations forward(const DenseMatrix& x) const;

  MlpConfig cfg_;
  std::vector<ParamBlock> blocks_;
  std::size_t hidden_bias_ = 0;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainTrace {
  MlpConfig config;
  /// Entry e is the state after e updates; epochs = 0 gives one entry.
  std::vector<EpochStats> epochs;
  bool diverged = false;
  std::size_t hidden_param_count = 0;
  std::size_t trainable_param_count = 0;
  Mlp model;

  const EpochStats& final_stats() const { return epochs.back(); }
};

/// Full-batch gradient descent. A non-finite loss stops training and sets
/// `diverged`; it does not throw.
TrainTrace train(const MlpConfig& cfg, const LabeledData& data);

/// "epoch,loss,accuracy\n" then one row per entry.
std::string trace_csv(const TrainTrace& trace);
nlohmann::json to_json(const TrainTrace& trace);
/// "x,y,predicted_label\n" over a resolution x resolution lattice covering the
/// data's bounding box with a 10% margin.
std::string decision_grid_csv(const Mlp& model, const LabeledData& data, std::size_t resolution = 200);

}  // namespace surm
