#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "ofmlmc/errors.hpp"

namespace ofmlmc {

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

//! In-place iterative radix-2 Cooley-Tukey; n must be a power of two.
inline void fft_pow2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double pi = 3.14159265358979323846;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

}  // namespace detail

//! Discrete Fourier transform of arbitrary length. Powers of two run radix-2
//! directly; other lengths go through Bluestein's chirp-z reduction. Angles
//! use k^2 mod 2n to keep the chirp phases accurate for long inputs.
inline std::vector<std::complex<double>> fft(std::vector<std::complex<double>> a,
                                             bool inverse = false) {
  const std::size_t n = a.size();
  if (n == 0) throw ArgumentError("fft: empty input");
  if (detail::is_pow2(n)) {
    detail::fft_pow2(a, inverse);
    return a;
  }
  const double pi = 3.14159265358979323846;
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<std::complex<double>> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t k2 = (static_cast<std::uint64_t>(k) * k) %
                             (2 * static_cast<std::uint64_t>(n));
    const double ang = sign * pi * static_cast<double>(k2) / static_cast<double>(n);
    chirp[k] = {std::cos(ang), std::sin(ang)};
  }
  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  std::vector<std::complex<double>> fa(m, {0.0, 0.0}), fb(m, {0.0, 0.0});
  for (std::size_t k = 0; k < n; ++k) fa[k] = a[k] * chirp[k];
  for (std::size_t k = 0; k < n; ++k) {
    fb[k] = std::conj(chirp[k]);
    if (k != 0) fb[m - k] = std::conj(chirp[k]);
  }
  detail::fft_pow2(fa, false);
  detail::fft_pow2(fb, false);
  for (std::size_t k = 0; k < m; ++k) fa[k] *= fb[k];
  detail::fft_pow2(fa, true);
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = fa[k] * chirp[k];
  if (inverse)
    for (auto& x : out) x /= static_cast<double>(n);
  return out;
}

//! Circular convolution of two equal-length real sequences via the transform.
inline std::vector<double> circular_convolve(const std::vector<double>& x,
                                             const std::vector<double>& kernel) {
  if (x.size() != kernel.size() || x.empty())
    throw ArgumentError("circular_convolve: size mismatch");
  const std::size_t n = x.size();
  std::vector<std::complex<double>> fx(n), fk(n);
  for (std::size_t i = 0; i < n; ++i) {
    fx[i] = x[i];
    fk[i] = kernel[i];
  }
  fx = fft(std::move(fx), false);
  fk = fft(std::move(fk), false);
  for (std::size_t i = 0; i < n; ++i) fx[i] *= fk[i];
  fx = fft(std::move(fx), true);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fx[i].real();
  return out;
}

}  // namespace ofmlmc
