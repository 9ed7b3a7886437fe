#include "surm/structured.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "surm/fft.hpp"

namespace surm {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite parameter");
}

void require_len(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(want) + ", got " +
                         std::to_string(got));
  }
}

// Cyclic convolution of two equal power-of-two-length sequences.
RealVec cyclic_convolve_pow2(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  ComplexVec fa(a.begin(), a.end());
  ComplexVec fb(b.begin(), b.end());
  fa = fft(std::move(fa));
  fb = fft(std::move(fb));
  for (std::size_t i = 0; i < n; ++i) fa[i] *= fb[i];
  fa = fft(std::move(fa), true);
  RealVec out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fa[i].real();
  return out;
}

}  // namespace

Circulant::Circulant(RealVec c) : c_(std::move(c)) {
  if (c_.empty()) throw std::invalid_argument("Circulant: n must be >= 1");
  require_finite(c_, "Circulant");
}

Toeplitz::Toeplitz(RealVec col, RealVec row) : col_(std::move(col)), row_(std::move(row)) {
  if (col_.empty()) throw std::invalid_argument("Toeplitz: n must be >= 1");
  require_len(row_.size(), col_.size(), "Toeplitz row");
  if (col_[0] != row_[0]) throw std::invalid_argument("Toeplitz: col[0] must equal row[0]");
  require_finite(col_, "Toeplitz");
  require_finite(row_, "Toeplitz");
}

SymToeplitz::SymToeplitz(RealVec d) : d_(std::move(d)) {
  if (d_.empty()) throw std::invalid_argument("SymToeplitz: n must be >= 1");
  require_finite(d_, "SymToeplitz");
}

Kronecker::Kronecker(DenseMatrix a, DenseMatrix b) : a_(std::move(a)), b_(std::move(b)) {
  if (a_.size() == 0 || b_.size() == 0) throw std::invalid_argument("Kronecker: empty factor");
  if (!a_.all_finite() || !b_.all_finite()) throw std::invalid_argument("Kronecker: non-finite parameter");
}

LowRank::LowRank(DenseMatrix g, DenseMatrix h) : g_(std::move(g)), h_(std::move(h)) {
  if (g_.cols() != h_.cols()) throw DimensionError("LowRank: G and H must have the same rank dimension");
  if (!g_.all_finite() || !h_.all_finite()) throw std::invalid_argument("LowRank: non-finite parameter");
}

LdrGH::LdrGH(DenseMatrix g, DenseMatrix h) : g_(std::move(g)), h_(std::move(h)) {
  if (g_.rows() != h_.rows() || g_.cols() != h_.cols()) throw DimensionError("LdrGH: G and H must both be n x r");
  if (g_.rows() == 0) throw std::invalid_argument("LdrGH: n must be >= 1");
  if (!g_.all_finite() || !h_.all_finite()) throw std::invalid_argument("LdrGH: non-finite parameter");
}

std::string kind_name(const Structured& s) {
  struct Visitor {
    std::string operator()(const Circulant&) const { return "circulant"; }
    std::string operator()(const Toeplitz&) const { return "toeplitz"; }
    std::string operator()(const SymToeplitz&) const { return "sym_toeplitz"; }
    std::string operator()(const Kronecker&) const { return "kronecker"; }
    std::string operator()(const LowRank&) const { return "low_rank"; }
    std::string operator()(const LdrGH&) const { return "ldr"; }
    std::string operator()(const DenseMatrix&) const { return "dense"; }
  };
  return std::visit(Visitor{}, s);
}

std::size_t parameter_count(const Structured& s) {
  struct Visitor {
    std::size_t operator()(const Circulant& c) const { return c.n(); }
    std::size_t operator()(const Toeplitz& t) const { return 2 * t.n() - 1; }
    std::size_t operator()(const SymToeplitz& t) const { return t.n(); }
    std::size_t operator()(const Kronecker& k) const { return k.a().size() + k.b().size(); }
    std::size_t operator()(const LowRank& l) const { return l.g().size() + l.h().size(); }
    std::size_t operator()(const LdrGH& l) const { return l.g().size() + l.h().size(); }
    std::size_t operator()(const DenseMatrix& d) const { return d.size(); }
  };
  return std::visit(Visitor{}, s);
}

DenseMatrix z_matrix(std::span<const double> v, double f) {
  const std::size_t n = v.size();
  DenseMatrix z(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) z(i, j) = i >= j ? v[i - j] : f * v[n + i - j];
  return z;
}

DenseMatrix materialize(const Circulant& c) { return z_matrix(c.c(), 1.0); }

DenseMatrix materialize(const Toeplitz& t) {
  const std::size_t n = t.n();
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = i >= j ? t.col()[i - j] : t.row()[j - i];
  return m;
}

DenseMatrix materialize(const SymToeplitz& t) {
  const std::size_t n = t.n();
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = t.d()[i >= j ? i - j : j - i];
  return m;
}

DenseMatrix materialize(const Kronecker& k) {
  const DenseMatrix& a = k.a();
  const DenseMatrix& b = k.b();
  DenseMatrix m(k.rows(), k.cols());
  for (std::size_t i1 = 0; i1 < a.rows(); ++i1)
    for (std::size_t j1 = 0; j1 < a.cols(); ++j1)
      for (std::size_t i2 = 0; i2 < b.rows(); ++i2)
        for (std::size_t j2 = 0; j2 < b.cols(); ++j2)
          m(i1 * b.rows() + i2, j1 * b.cols() + j2) = a(i1, j1) * b(i2, j2);
  return m;
}

DenseMatrix materialize(const LowRank& l) { return matmul_nt(l.g(), l.h()); }

DenseMatrix materialize(const LdrGH& l) {
  const std::size_t n = l.n();
  DenseMatrix w(n, n);
  for (std::size_t i = 0; i < l.r(); ++i) {
    const RealVec g = l.g().column(i);
    const RealVec h = l.h().column(i);
    w += matmul(z_matrix(g, 1.0), z_matrix(h, -1.0));
  }
  return w;
}

DenseMatrix materialize(const Structured& s) {
  return std::visit([](const auto& m) -> DenseMatrix {
    if constexpr (std::is_same_v<std::decay_t<decltype(m)>, DenseMatrix>) return m;
    else return materialize(m);
  }, s);
}

Toeplitz to_toeplitz(const SymToeplitz& t) { return Toeplitz(t.d(), t.d()); }

RealVec circulant_matvec(const Circulant& c, std::span<const double> x) {
  require_len(x.size(), c.n(), "circulant_matvec");
  if (is_power_of_two(c.n())) return cyclic_convolve_pow2(c.c(), x);
  return f_circulant_apply(c.c(), 1.0, x);
}

RealVec toeplitz_matvec(const Toeplitz& t, std::span<const double> x) {
  const std::size_t n = t.n();
  require_len(x.size(), n, "toeplitz_matvec");
  const std::size_t big = next_power_of_two(2 * n - 1);
  RealVec c(big, 0.0);
  for (std::size_t k = 0; k < n; ++k) c[k] = t.col()[k];
  for (std::size_t k = 1; k < n; ++k) c[big - k] = t.row()[k];
  RealVec padded(big, 0.0);
  std::copy(x.begin(), x.end(), padded.begin());
  RealVec y = circulant_matvec(Circulant(std::move(c)), padded);
  y.resize(n);
  return y;
}

RealVec toeplitz_matvec(const SymToeplitz& t, std::span<const double> x) {
  return toeplitz_matvec(to_toeplitz(t), x);
}

RealVec kronecker_matvec(const Kronecker& k, std::span<const double> x) {
  require_len(x.size(), k.cols(), "kronecker_matvec");
  const DenseMatrix& a = k.a();
  const DenseMatrix& b = k.b();
  const DenseMatrix xm(a.cols(), b.cols(), RealVec(x.begin(), x.end()));
  return matmul_nt(matmul(a, xm), b).data();
}

RealVec low_rank_matvec(const LowRank& l, std::span<const double> x) {
  return matvec(l.g(), matvec_t(l.h(), x));
}

RealVec ldr_matvec(const LdrGH& l, std::span<const double> x, LdrPath path) {
  const std::size_t n = l.n();
  require_len(x.size(), n, "ldr_matvec");
  const bool fast = path == LdrPath::kFft || (path == LdrPath::kAuto && n > 512);
  RealVec y(n, 0.0);
  for (std::size_t i = 0; i < l.r(); ++i) {
    const RealVec g = l.g().column(i);
    const RealVec h = l.h().column(i);
    RealVec t;
    if (fast) {
      t = f_circulant_apply(g, 1.0, f_circulant_apply(h, -1.0, x));
    } else {
      t = matvec(z_matrix(g, 1.0), matvec(z_matrix(h, -1.0), x));
    }
    for (std::size_t k = 0; k < n; ++k) y[k] += t[k];
  }
  return y;
}

RealVec apply(const Structured& s, std::span<const double> x) {
  struct Visitor {
    std::span<const double> x;
    RealVec operator()(const Circulant& c) const { return circulant_matvec(c, x); }
    RealVec operator()(const Toeplitz& t) const { return toeplitz_matvec(t, x); }
    RealVec operator()(const SymToeplitz& t) const { return toeplitz_matvec(t, x); }
    RealVec operator()(const Kronecker& k) const { return kronecker_matvec(k, x); }
    RealVec operator()(const LowRank& l) const { return low_rank_matvec(l, x); }
    RealVec operator()(const LdrGH& l) const { return ldr_matvec(l, x); }
    RealVec operator()(const DenseMatrix& d) const { return matvec(d, x); }
  };
  return std::visit(Visitor{x}, s);
}

ComplexVec circulant_eigenvalues(const Circulant& c) {
  const std::size_t n = c.n();
  if (is_power_of_two(n)) {
    // Inverse DFT carries the + sign; undo its 1/n.
    ComplexVec lam = fft(ComplexVec(c.c().begin(), c.c().end()), true);
    for (auto& v : lam) v *= static_cast<double>(n);
    return lam;
  }
  ComplexVec lam(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::complex<double> s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double ang = 2.0 * std::numbers::pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
      s += c.c()[k] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    lam[j] = s;
  }
  return lam;
}

std::complex<double> circulant_determinant(const Circulant& c) {
  std::complex<double> det = 1.0;
  for (const auto& l : circulant_eigenvalues(c)) det *= l;
  return det;
}

bool circulant_nonsingular(const Circulant& c) {
  const ComplexVec lam = circulant_eigenvalues(c);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& l : lam) {
    lo = std::min(lo, std::abs(l));
    hi = std::max(hi, std::abs(l));
  }
  return hi > 0.0 && lo > 1e-10 * hi;
}

namespace {

double pivot_tolerance(std::size_t n) {
  return static_cast<double>(n) * std::numeric_limits<double>::epsilon();
}

double max_abs(const DenseMatrix& m) {
  double s = 0.0;
  for (double v : m.data()) s = std::max(s, std::abs(v));
  return s;
}

}  // namespace

ToeplitzInvertibility toeplitz_invertible(const Toeplitz& t) {
  const std::size_t n = t.n();
  const DenseMatrix m = materialize(t);
  ToeplitzInvertibility out;
  const LuDecomposition dec = lu_decompose(m, pivot_tolerance(n));
  if (dec.singular) return out;
  RealVec e1(n, 0.0), en(n, 0.0);
  e1[0] = 1.0;
  en[n - 1] = 1.0;
  out.x = lu_solve(dec, e1);
  out.y = lu_solve(dec, en);
  // x_1 is (T^{-1})_{11}; compare against the scale of T^{-1}, about 1/|T|.
  const double scale = max_abs(m);
  out.invertible = std::abs(out.x[0]) * scale > pivot_tolerance(n);
  return out;
}

ToeplitzInvertibility toeplitz_invertible(const SymToeplitz& t) {
  const std::size_t n = t.n();
  const DenseMatrix m = materialize(t);
  ToeplitzInvertibility out;
  const LuDecomposition dec = lu_decompose(m, pivot_tolerance(n));
  if (dec.singular) return out;
  RealVec e1(n, 0.0);
  e1[0] = 1.0;
  out.x = lu_solve(dec, e1);
  out.y.assign(out.x.rbegin(), out.x.rend());
  out.invertible = std::abs(out.x[0]) * max_abs(m) > pivot_tolerance(n);
  return out;
}

KronShapePlan optimal_kron_shapes(std::size_t d) {
  if (d == 0) throw std::invalid_argument("optimal_kron_shapes: d must be >= 1");
  std::size_t a = 1;
  for (std::size_t f = 1; f * f <= d; ++f)
    if (d % f == 0) a = f;
  const std::size_t b = d / a;
  KronShapePlan plan;
  plan.lower_bound = 2 * d;
  if (a == 1) {
    plan.m1 = 1;
    plan.n1 = d;
    plan.m2 = d;
    plan.n2 = 1;
    plan.degenerate = true;
  } else {
    plan.m1 = b;
    plan.n1 = a;
    plan.m2 = a;
    plan.n2 = b;
  }
  plan.param_count = plan.m1 * plan.n1 + plan.m2 * plan.n2;
  plan.max_rank = std::min(plan.m1, plan.n1) * std::min(plan.m2, plan.n2);
  return plan;
}

std::size_t structured_rank(const Structured& s) {
  if (const auto* k = std::get_if<Kronecker>(&s)) {
    const std::size_t product = numerical_rank(k->a()) * numerical_rank(k->b());
    if (k->rows() <= 256 && k->cols() <= 256) {
      const std::size_t dense = numerical_rank(materialize(*k));
      if (dense != product) {
        throw std::logic_error("structured_rank: Kronecker product rule violated (" + std::to_string(dense) +
                               " != " + std::to_string(product) + ")");
      }
    }
    return product;
  }
  return numerical_rank(materialize(s));
}

}  // namespace surm
