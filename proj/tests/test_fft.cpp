#include <doctest.h>

#include <cmath>
#include <complex>
#include <ofmlmc/fft.hpp>
#include <ofmlmc/random.hpp>
#include <vector>

using namespace ofmlmc;

namespace {

// Oracle: quadratic-time DFT.
std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x,
                                            bool inverse) {
  const std::size_t n = x.size();
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<std::complex<double>> out(n, {0.0, 0.0});
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = sign * 2.0 * 3.14159265358979323846 *
                         static_cast<double>(j * k % n) / static_cast<double>(n);
      out[k] += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
  if (inverse)
    for (auto& v : out) v /= static_cast<double>(n);
  return out;
}

}  // namespace

TEST_CASE("fft matches the naive DFT for mixed sizes") {
  RandomStream rng(0xFF7ULL);
  for (std::size_t n : {1u, 2u, 3u, 5u, 8u, 12u, 17u, 64u, 100u, 257u}) {
    std::vector<std::complex<double>> x(n);
    for (auto& v : x) v = {rng.normal(), rng.normal()};
    const auto fast = fft(x, false);
    const auto slow = naive_dft(x, false);
    for (std::size_t k = 0; k < n; ++k)
      CHECK(std::abs(fast[k] - slow[k]) < 1e-9);
  }
}

TEST_CASE("inverse transform round-trips") {
  RandomStream rng(0x1FF7ULL);
  for (std::size_t n : {4u, 9u, 31u, 128u}) {
    std::vector<std::complex<double>> x(n);
    for (auto& v : x) v = {rng.normal(), rng.normal()};
    const auto back = fft(fft(x, false), true);
    for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(back[k] - x[k]) < 1e-10);
  }
}

TEST_CASE("circular convolution matches the direct sum") {
  RandomStream rng(0x2FF7ULL);
  for (std::size_t n : {8u, 15u, 100u}) {
    std::vector<double> x(n), k(n);
    for (auto& v : x) v = rng.normal();
    for (auto& v : k) v = rng.normal();
    const auto fast = circular_convolve(x, k);
    for (std::size_t i = 0; i < n; ++i) {
      double direct = 0.0;
      for (std::size_t j = 0; j < n; ++j) direct += x[j] * k[(i + n - j) % n];
      CHECK(std::fabs(fast[i] - direct) < 1e-10);
    }
  }
}
