#include "surm/fft.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace surm {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace {

// exp(-2 pi i k / n) for k < n/2, computed directly rather than by recurrence.
const std::vector<std::complex<double>>& twiddles(std::size_t n) {
  thread_local std::map<std::size_t, std::vector<std::complex<double>>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<std::complex<double>> w(n / 2);
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    w[k] = {std::cos(ang), std::sin(ang)};
  }
  return cache.emplace(n, std::move(w)).first->second;
}

}  // namespace

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

ComplexVec fft(ComplexVec x, bool inverse) {
  const std::size_t n = x.size();
  if (!is_power_of_two(n)) {
    throw std::invalid_argument("fft: length " + std::to_string(n) + " is not a power of two");
  }
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  const std::vector<std::complex<double>>& roots = twiddles(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t k = 0; k < half; ++k) {
      const std::complex<double> w = inverse ? std::conj(roots[k * stride]) : roots[k * stride];
      for (std::size_t i = 0; i < n; i += len) {
        const std::complex<double> u = x[i + k];
        const std::complex<double> v = x[i + k + half] * w;
        x[i + k] = u + v;
        x[i + k + half] = u - v;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& v : x) v *= inv;
  }
  return x;
}

RealVec linear_convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  const std::size_t n = next_power_of_two(out_len);
  ComplexVec fa(n), fb(n);
  for (std::size_t i = 0; i < a.size(); ++i) fa[i] = a[i];
  for (std::size_t i = 0; i < b.size(); ++i) fb[i] = b[i];
  fa = fft(std::move(fa));
  fb = fft(std::move(fb));
  for (std::size_t i = 0; i < n; ++i) fa[i] *= fb[i];
  fa = fft(std::move(fa), true);
  RealVec out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) out[i] = fa[i].real();
  return out;
}

RealVec f_circulant_apply(std::span<const double> v, double f, std::span<const double> x) {
  const std::size_t n = v.size();
  if (x.size() != n) throw DimensionError("f_circulant_apply: vector length mismatch");
  if (n == 0) return {};
  // z = v * x (linear); the part that runs past index n-1 wraps back scaled by f.
  const RealVec z = linear_convolve(v, x);
  RealVec y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = z[i] + (i + n < z.size() ? f * z[i + n] : 0.0);
  return y;
}

}  // namespace surm
