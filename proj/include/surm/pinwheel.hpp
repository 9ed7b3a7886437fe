#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "surm/linalg.hpp"

namespace surm {

struct PinwheelConfig {
  std::size_t spokes = 5;
  std::size_t points_per_spoke = 100;
  double noise_std = 0.05;
  std::uint64_t seed = 0;
  /// Extra angle per unit radius; this is what bends the arms into spirals.
  double angular_rate = 1.0;
  double radius_min = 0.2;
  double radius_max = 2.0;

  void validate() const;
};

struct LabeledData {
  DenseMatrix x;  // one 2-D point per row
  std::vector<std::size_t> labels;
  std::size_t classes = 0;

  std::size_t size() const { return labels.size(); }
};

/// Spoke k, point j: r = radius_min + (radius_max - radius_min) (j + 0.5) / P,
/// theta = 2 pi k / spokes + angular_rate r + noise_std N(0, 1),
/// (x, y) = r (cos theta, sin theta). Rows are grouped by spoke.
LabeledData gen_pinwheel(const PinwheelConfig& cfg);

/// Arm position of spoke k at radius r with no noise.
std::pair<double, double> pinwheel_arm_point(const PinwheelConfig& cfg, std::size_t spoke, double r);

}  // namespace surm
