#pragma once

#include <cstddef>
#include <span>

#include "surm/linalg.hpp"
#include "surm/rng.hpp"

namespace surm {

/// Vector of i.i.d. standard normals scaled by `scale`.
RealVec gaussian_vector(std::size_t n, Rng& rng, double scale = 1.0);
DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0);

/// n x n matrix with i.i.d. N(0, 1) entries.
DenseMatrix gen_random_gaussian(std::size_t n, Rng& rng);

/// G H^T + eps R with G, H in R^{n x r} and R in R^{n x n}, all N(0, 1).
DenseMatrix gen_near_low_rank(std::size_t n, std::size_t r, double eps, Rng& rng);

/// Row i is (sin(1 t_i), ..., sin(n t_i)) + g_i with t_i ~ N(0, 1) and
/// g_i ~ eps * N(0, I). With eps = 0 no noise is drawn.
DenseMatrix gen_low_intrinsic(std::size_t n, double eps, Rng& rng);

/// The noiseless low-intrinsic matrix for a fixed tuple t.
DenseMatrix low_intrinsic_from(std::span<const double> t);

/// G G^T for G ~ N(0, 1)^{n x n}, then each row scaled to unit L2 norm.
/// The normalized result is generally neither symmetric nor PSD; it is not
/// re-symmetrized.
DenseMatrix gen_psd_row_normalized(std::size_t n, Rng& rng);

}  // namespace surm
