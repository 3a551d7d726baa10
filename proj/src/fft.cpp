#include "dislo/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace dislo::fft {

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void transform(std::complex<double>* a, std::size_t n, bool inverse) {
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft: length must be a power of two");
    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) *
                           (inverse ? 1.0 : -1.0);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) a[i] *= inv;
    }
}

void transform_nd(std::vector<std::complex<double>>& a, const std::array<std::size_t, 3>& dims,
                  bool inverse) {
    const std::size_t n0 = dims[0], n1 = dims[1], n2 = dims[2];
    if (a.size() != n0 * n1 * n2) throw std::invalid_argument("fft: size/extent mismatch");
    std::vector<std::complex<double>> line;

    // Axis 2 (contiguous rows).
    if (n2 > 1)
        for (std::size_t i = 0; i < n0 * n1; ++i) transform(a.data() + i * n2, n2, inverse);

    // Axis 1.
    if (n1 > 1) {
        line.resize(n1);
        for (std::size_t i = 0; i < n0; ++i)
            for (std::size_t k = 0; k < n2; ++k) {
                for (std::size_t j = 0; j < n1; ++j) line[j] = a[(i * n1 + j) * n2 + k];
                transform(line.data(), n1, inverse);
                for (std::size_t j = 0; j < n1; ++j) a[(i * n1 + j) * n2 + k] = line[j];
            }
    }

    // Axis 0.
    if (n0 > 1) {
        line.resize(n0);
        for (std::size_t j = 0; j < n1; ++j)
            for (std::size_t k = 0; k < n2; ++k) {
                for (std::size_t i = 0; i < n0; ++i) line[i] = a[(i * n1 + j) * n2 + k];
                transform(line.data(), n0, inverse);
                for (std::size_t i = 0; i < n0; ++i) a[(i * n1 + j) * n2 + k] = line[i];
            }
    }
}

}  // namespace dislo::fft
