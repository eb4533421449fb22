#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace ofmlmc {

//! Thomas algorithm for A x = rhs with A tridiagonal.
//!
//! `sub` and `super` have size n-1 (sub[i] couples row i+1 to i, super[i]
//! couples row i to i+1); `diag` and `rhs` have size n. Returns nullopt when a
//! pivot collapses or the pivot spread suggests a condition number beyond
//! ~1e12, so callers can fall back instead of propagating garbage. No
//! pivoting; intended for the symmetric positive-definite systems produced by
//! the coefficient optimization.
inline std::optional<std::vector<double>> solve_tridiagonal(
    const std::vector<double>& sub, const std::vector<double>& diag,
    const std::vector<double>& super, const std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  if (n == 0 || rhs.size() != n || sub.size() + 1 != n || super.size() + 1 != n)
    return std::nullopt;

  std::vector<double> c(n, 0.0), d(n, 0.0);
  double pivot_max = 0.0, pivot_min = 0.0;

  double m = diag[0];
  if (m == 0.0 || !std::isfinite(m)) return std::nullopt;
  pivot_max = pivot_min = std::fabs(m);
  if (n > 1) c[0] = super[0] / m;
  d[0] = rhs[0] / m;

  for (std::size_t i = 1; i < n; ++i) {
    m = diag[i] - sub[i - 1] * c[i - 1];
    if (m == 0.0 || !std::isfinite(m)) return std::nullopt;
    const double am = std::fabs(m);
    if (am > pivot_max) pivot_max = am;
    if (am < pivot_min) pivot_min = am;
    if (i + 1 < n) c[i] = super[i] / m;
    d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / m;
  }

  // Pivot-ratio condition estimate; exact for SPD matrices up to a modest factor.
  if (pivot_min <= 0.0 || pivot_max / pivot_min > 1e12) return std::nullopt;

  std::vector<double> x(n, 0.0);
  x[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
  for (double v : x)
    if (!std::isfinite(v)) return std::nullopt;
  return x;
}

}  // namespace ofmlmc
