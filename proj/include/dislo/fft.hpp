#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

namespace dislo::fft {

/// Smallest power of two >= n.
std::size_t next_pow2(std::size_t n);

/// In-place radix-2 complex FFT; n must be a power of two. inverse applies
/// the conjugate transform and the 1/n scaling.
void transform(std::complex<double>* a, std::size_t n, bool inverse);

/// Separable transform of a row-major array with extents dims (dims[d] = 1
/// for unused axes; used extents must be powers of two).
void transform_nd(std::vector<std::complex<double>>& a, const std::array<std::size_t, 3>& dims,
                  bool inverse);

}  // namespace dislo::fft
