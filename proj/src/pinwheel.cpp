#include "surm/pinwheel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "surm/rng.hpp"

namespace surm {

void PinwheelConfig::validate() const {
  if (spokes < 2) throw std::invalid_argument("pinwheel: spokes must be >= 2");
  if (points_per_spoke < 1) throw std::invalid_argument("pinwheel: points_per_spoke must be >= 1");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw std::invalid_argument("pinwheel: noise_std must be >= 0");
  if (!std::isfinite(angular_rate)) throw std::invalid_argument("pinwheel: angular_rate must be finite");
  if (!(radius_min >= 0.0) || !(radius_max > radius_min) || !std::isfinite(radius_max)) {
    throw std::invalid_argument("pinwheel: need 0 <= radius_min < radius_max");
  }
}

std::pair<double, double> pinwheel_arm_point(const PinwheelConfig& cfg, std::size_t spoke, double r) {
  const double theta = 2.0 * std::numbers::pi * static_cast<double>(spoke) / static_cast<double>(cfg.spokes) +
                       cfg.angular_rate * r;
  return {r * std::cos(theta), r * std::sin(theta)};
}

LabeledData gen_pinwheel(const PinwheelConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const std::size_t total = cfg.spokes * cfg.points_per_spoke;
  LabeledData out{DenseMatrix(total, 2), std::vector<std::size_t>(total), cfg.spokes};
  const double span = cfg.radius_max - cfg.radius_min;
  std::size_t row = 0;
  for (std::size_t k = 0; k < cfg.spokes; ++k) {
    const double base = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(cfg.spokes);
    for (std::size_t j = 0; j < cfg.points_per_spoke; ++j, ++row) {
      const double r = cfg.radius_min + span * (static_cast<double>(j) + 0.5) /
                                            static_cast<double>(cfg.points_per_spoke);
      double theta = base + cfg.angular_rate * r;
      if (cfg.noise_std > 0.0) theta += cfg.noise_std * rng.normal();
      out.x(row, 0) = r * std::cos(theta);
      out.x(row, 1) = r * std::sin(theta);
      out.labels[row] = k;
    }
  }
  return out;
}

}  // namespace surm
