#pragma once

#include "surm/linalg.hpp"

namespace surm {

/// Linear CKA ||Xc^T Yc||_F^2 / (||Xc^T Xc||_F ||Yc^T Yc||_F) with
/// column-centered Xc, Yc. Rows are samples. Throws std::domain_error when
/// either input has zero variance.
double cka(const DenseMatrix& x, const DenseMatrix& y);

/// 1 - <W_hat, W>_F / (||W_hat||_F ||W||_F); throws std::domain_error for a
/// zero matrix.
double weight_similarity(const DenseMatrix& w_hat, const DenseMatrix& w);

}  // namespace surm
