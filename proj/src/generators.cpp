#include "surm/generators.hpp"

#include <cmath>
#include <stdexcept>

namespace surm {

RealVec gaussian_vector(std::size_t n, Rng& rng, double scale) {
  RealVec v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale) {
  return DenseMatrix(rows, cols, gaussian_vector(rows * cols, rng, scale));
}

DenseMatrix gen_random_gaussian(std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("gen_random_gaussian: n must be >= 1");
  return gaussian_matrix(n, n, rng);
}

DenseMatrix gen_near_low_rank(std::size_t n, std::size_t r, double eps, Rng& rng) {
  if (n == 0 || r > n) throw std::invalid_argument("gen_near_low_rank: need 1 <= n and r <= n");
  if (eps < 0.0) throw std::invalid_argument("gen_near_low_rank: eps must be >= 0");
  const DenseMatrix g = gaussian_matrix(n, r, rng);
  const DenseMatrix h = gaussian_matrix(n, r, rng);
  DenseMatrix m = matmul_nt(g, h);
  const DenseMatrix noise = gaussian_matrix(n, n, rng);
  for (std::size_t k = 0; k < m.size(); ++k) m.data()[k] += eps * noise.data()[k];
  return m;
}

DenseMatrix low_intrinsic_from(std::span<const double> t) {
  const std::size_t n = t.size();
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = std::sin(static_cast<double>(j + 1) * t[i]);
  return m;
}

DenseMatrix gen_low_intrinsic(std::size_t n, double eps, Rng& rng) {
  if (n == 0) throw std::invalid_argument("gen_low_intrinsic: n must be >= 1");
  if (eps < 0.0) throw std::invalid_argument("gen_low_intrinsic: eps must be >= 0");
  const RealVec t = gaussian_vector(n, rng);
  DenseMatrix m = low_intrinsic_from(t);
  if (eps > 0.0) {
    for (double& v : m.data()) v += eps * rng.normal();
  }
  return m;
}

DenseMatrix gen_psd_row_normalized(std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("gen_psd_row_normalized: n must be >= 1");
  const DenseMatrix g = gaussian_matrix(n, n, rng);
  DenseMatrix m = matmul_nt(g, g);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = m.row(i);
    const double norm = norm2(row);
    for (double& v : row) v /= norm;
  }
  return m;
}

}  // namespace surm
