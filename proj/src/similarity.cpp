#include "surm/similarity.hpp"

#include <stdexcept>

namespace surm {

namespace {

DenseMatrix center_columns(const DenseMatrix& m) {
  DenseMatrix c = m;
  const double rows = static_cast<double>(m.rows());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) mean += m(i, j);
    mean /= rows;
    for (std::size_t i = 0; i < m.rows(); ++i) c(i, j) -= mean;
  }
  return c;
}

}  // namespace

double cka(const DenseMatrix& x, const DenseMatrix& y) {
  if (x.rows() != y.rows()) throw DimensionError("cka: inputs must have the same number of rows");
  if (x.rows() < 2) throw std::domain_error("cka: need at least two samples");
  const DenseMatrix xc = center_columns(x);
  const DenseMatrix yc = center_columns(y);
  const double xx = frobenius_norm(matmul_tn(xc, xc));
  const double yy = frobenius_norm(matmul_tn(yc, yc));
  if (xx == 0.0 || yy == 0.0) throw std::domain_error("cka: input has zero variance");
  const double xy = frobenius_norm(matmul_tn(xc, yc));
  return xy * xy / (xx * yy);
}

double weight_similarity(const DenseMatrix& w_hat, const DenseMatrix& w) {
  if (w_hat.rows() != w.rows() || w_hat.cols() != w.cols()) {
    throw DimensionError("weight_similarity: shapes differ");
  }
  const double a = frobenius_norm(w_hat);
  const double b = frobenius_norm(w);
  if (a == 0.0 || b == 0.0) throw std::domain_error("weight_similarity: zero matrix");
  return 1.0 - frobenius_inner(w_hat, w) / (a * b);
}

}  // namespace surm
