#pragma once

#include <cstddef>
#include <span>

#include "surm/linalg.hpp"

namespace surm {

bool is_power_of_two(std::size_t n);
std::size_t next_power_of_two(std::size_t n);

/// Radix-2 iterative DFT. Forward uses exp(-2 pi i jk / n); the inverse
/// includes the 1/n factor. Throws std::invalid_argument unless the length
/// is a power of two.
ComplexVec fft(ComplexVec x, bool inverse = false);

/// Linear convolution of two real sequences (length a + b - 1), via
/// zero-padded FFT.
RealVec linear_convolve(std::span<const double> a, std::span<const double> b);

/// y = Z_f(v) x where Z_f(v) is the f-circulant with first column v:
/// entry (i, j) is v[i - j] for i >= j and f * v[n + i - j] otherwise.
/// f = 1 gives the ordinary circulant product. Length-agnostic: the
/// underlying convolution is padded to a power of two.
RealVec f_circulant_apply(std::span<const double> v, double f, std::span<const double> x);

}  // namespace surm
