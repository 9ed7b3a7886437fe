#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <json.hpp>

namespace surm::cli {

struct PsdOptions {
  std::size_t n = 50;
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  std::size_t iters = 5000;
  double learning_rate = 0.1;
};
nlohmann::json approx_psd(const PsdOptions& opt);

struct ClassOptions {
  std::string matrix_class = "random";  // random | near-low-rank | low-intrinsic
  std::string method = "circulant";     // circulant | toeplitz | ldr
  std::size_t r = 1;                    // displacement rank for ldr
  std::size_t target_rank = 5;          // rank of the near-low-rank target
  double eps = 0.05;
  std::size_t n = 100;
  std::uint64_t seed = 0;
  std::size_t iters = 5000;
  double learning_rate = 0.0;  // 0 picks the method default
};
/// Writes the error trace CSV into *csv when non-null.
nlohmann::json approx_classes(const ClassOptions& opt, std::string* csv);

struct PinwheelOptions {
  std::string layer = "dense";
  std::size_t epochs = 2000;
  bool freeze_embedding = true;
  std::uint64_t seed = 0;
  double learning_rate = 0.05;
  std::size_t spokes = 5;
  std::size_t points_per_spoke = 100;
  double noise_std = 0.05;
  double angular_rate = 1.0;
  bool compare = false;  // also train dense and rank-1 references on the same seed
};
nlohmann::json pinwheel(const PinwheelOptions& opt, std::string* csv, std::string* grid);

nlohmann::json kron_shapes(std::size_t dim);

/// Accepts a structured-matrix object or a delta object. Throws
/// nlohmann::json::parse_error for malformed text.
nlohmann::json analyze(const std::string& text, const std::string& source);

/// True iff every entry of report["claims"] passed.
bool all_claims_pass(const nlohmann::json& report);

}  // namespace surm::cli
