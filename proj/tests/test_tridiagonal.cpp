#include <doctest.h>

#include <cmath>
#include <ofmlmc/random.hpp>
#include <ofmlmc/tridiagonal.hpp>
#include <vector>

using namespace ofmlmc;

namespace {

// Independent oracle: dense Gaussian elimination with partial pivoting.
std::vector<double> dense_solve(std::vector<std::vector<double>> a,
                                std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
    x[i] = s / a[i][i];
  }
  return x;
}

std::vector<std::vector<double>> dense_from_tridiagonal(
    const std::vector<double>& sub, const std::vector<double>& diag,
    const std::vector<double>& super) {
  const std::size_t n = diag.size();
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    a[i][i] = diag[i];
    if (i + 1 < n) {
      a[i][i + 1] = super[i];
      a[i + 1][i] = sub[i];
    }
  }
  return a;
}

}  // namespace

TEST_CASE("tridiagonal solve matches dense oracle on random SPD systems") {
  RandomStream rng(0x7d1d1a60ULL);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform() * 8.0);  // sizes 1..8
    std::vector<double> diag(n), sub(std::max(0, n - 1)), rhs(n);
    for (int i = 0; i < n; ++i) {
      diag[i] = 1.0 + 10.0 * rng.uniform();
      rhs[i] = rng.normal();
    }
    for (int i = 0; i + 1 < n; ++i) {
      // Keep the system diagonally dominant, hence SPD for symmetric fill.
      const double bound = 0.45 * std::min(diag[i], diag[i + 1]);
      sub[i] = bound * (2.0 * rng.uniform() - 1.0);
    }
    const auto x = solve_tridiagonal(sub, diag, sub, rhs);
    REQUIRE(x.has_value());
    const auto oracle = dense_solve(dense_from_tridiagonal(sub, diag, sub), rhs);
    for (int i = 0; i < n; ++i) {
      const double scale = std::max(1.0, std::fabs(oracle[i]));
      CHECK(std::fabs((*x)[i] - oracle[i]) / scale <= 1e-12);
    }
  }
}

TEST_CASE("tridiagonal solve rejects singular and ill-conditioned systems") {
  CHECK_FALSE(solve_tridiagonal({}, {0.0}, {}, {1.0}).has_value());
  // Pivot ratio far beyond 1e12.
  CHECK_FALSE(
      solve_tridiagonal({0.0}, {1.0, 1e-14}, {0.0}, {1.0, 1.0}).has_value());
  // 2x2 singular: [[1,1],[1,1]].
  CHECK_FALSE(solve_tridiagonal({1.0}, {1.0, 1.0}, {1.0}, {1.0, 2.0}).has_value());
}

TEST_CASE("tridiagonal solve 1x1 and hand-checked 2x2") {
  const auto one = solve_tridiagonal({}, {4.0}, {}, {2.0});
  REQUIRE(one.has_value());
  CHECK((*one)[0] == doctest::Approx(0.5));

  // [[17,-8],[-8,272]] x = [0,128] -> x = (0.224561..., 0.477193...)
  const auto two = solve_tridiagonal({-8.0}, {17.0, 272.0}, {-8.0}, {0.0, 128.0});
  REQUIRE(two.has_value());
  CHECK((*two)[0] == doctest::Approx(1024.0 / 4560.0).epsilon(1e-12));
  CHECK((*two)[1] == doctest::Approx(2176.0 / 4560.0).epsilon(1e-12));
}
