#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ofmlmc/errors.hpp"
#include "ofmlmc/indicators.hpp"
#include "ofmlmc/tridiagonal.hpp"

namespace ofmlmc {

//! Control variate coefficients alpha_0..alpha_L; the finest coefficient is
//! fixed to 1 so the telescoping expectation stays unbiased.
struct CoefficientVector {
  std::vector<double> alpha;
  //! True when the optimization fell back to plain telescoping (alpha == 1).
  bool fallback_unit = false;

  int num_levels() const { return static_cast<int>(alpha.size()); }
};

inline CoefficientVector unit_coefficients(int num_levels) {
  CoefficientVector c;
  c.alpha.assign(static_cast<std::size_t>(num_levels), 1.0);
  return c;
}

//! Work-weighted variance cost of the coupled estimator at given coefficients:
//!   C(alpha) = V[alpha_0 q_0] W_0 + sum_l V[alpha_l q_l - alpha_{l-1} q_{l-1}] W_l.
//! This is the objective the optimal coefficients minimize.
inline double variance_reduction_cost(const LevelIndicators& ind,
                                      const CoefficientVector& cv) {
  const std::vector<double>& a = cv.alpha;
  double cost = a[0] * a[0] * ind.variance[0] * ind.work[0];
  for (int l = 1; l < ind.num_levels; ++l) {
    const double v = a[l] * a[l] * ind.variance[l] +
                     a[l - 1] * a[l - 1] * ind.variance[l - 1] -
                     2.0 * a[l] * a[l - 1] * ind.cross_cov[l];
    cost += v * ind.work[l];
  }
  return cost;
}

//! Optimal control variate coefficients from the symmetric tridiagonal
//! stationarity system (diagonal sigma2_l * (W_{l+1} + W_l), off-diagonal
//! -sigma2_{l+1,l} * W_{l+1}, right-hand side sigma2_{L,L-1} * W_L on the last
//! row). Falls back to alpha == 1 with the fallback flag set when the system
//! is singular or ill-conditioned; plain telescoping is the safe degenerate
//! case. For L == 1 this reproduces the closed-form two-level coefficient
//! W_1/(W_1 + W_0) * Cov/V.
inline CoefficientVector optimal_coefficients(const LevelIndicators& ind) {
  const int levels = ind.num_levels;
  if (levels < 1) throw ArgumentError("optimal_coefficients: empty indicators");
  if (levels == 1) return unit_coefficients(1);

  const int n = levels - 1;  // unknowns alpha_0..alpha_{L-1}
  std::vector<double> diag(n), off(std::max(0, n - 1)), rhs(n, 0.0);
  for (int k = 0; k < n; ++k) {
    diag[k] = ind.variance[k] * (ind.work[k + 1] + ind.work[k]);
    if (k + 1 < n) off[k] = -ind.cross_cov[k + 1] * ind.work[k + 1];
  }
  rhs[n - 1] = ind.cross_cov[levels - 1] * ind.work[levels - 1];

  const auto solution = solve_tridiagonal(off, diag, off, rhs);
  if (!solution) {
    CoefficientVector cv = unit_coefficients(levels);
    cv.fallback_unit = true;
    return cv;
  }
  CoefficientVector cv;
  cv.alpha = *solution;
  cv.alpha.push_back(1.0);
  return cv;
}

//! Sample-reduced variance building blocks of the estimator error:
//! sigma~2_0 = V[alpha_0 q_0], sigma~2_l = V[alpha_l q_l - alpha_{l-1} q_{l-1}].
struct WeightedDifferenceVariances {
  std::vector<double> value;
  int clamped = 0;  // negative estimates clamped to zero

  int num_levels() const { return static_cast<int>(value.size()); }
};

inline WeightedDifferenceVariances weighted_variances(const LevelIndicators& ind,
                                                      const CoefficientVector& cv) {
  if (cv.num_levels() != ind.num_levels)
    throw ArgumentError("weighted_variances: dimension mismatch");
  WeightedDifferenceVariances w;
  w.value.resize(ind.num_levels);
  const std::vector<double>& a = cv.alpha;
  w.value[0] = a[0] * a[0] * ind.variance[0];
  for (int l = 1; l < ind.num_levels; ++l) {
    double v = a[l] * a[l] * ind.variance[l] +
               a[l - 1] * a[l - 1] * ind.variance[l - 1] -
               2.0 * a[l] * a[l - 1] * ind.cross_cov[l];
    if (v < 0.0) {
      v = 0.0;
      ++w.clamped;
    }
    w.value[l] = v;
  }
  return w;
}

//! Weighted difference variances estimated directly from the coupled pairs:
//! the sample variance of alpha_l q_l - alpha_{l-1} q_{l-1} over each level's
//! pair set. Immune to the cancellation that plagues the indicator formula
//! when level variances are large and nearly equal. Levels with fewer than
//! two pairs keep value zero and measured == false; callers substitute the
//! indicator formula there.
struct SampleWeightedVariances {
  std::vector<double> value;
  std::vector<bool> measured;
};

inline SampleWeightedVariances weighted_variances_from_samples(
    const std::vector<PairSamples>& levels, const CoefficientVector& cv) {
  if (cv.num_levels() != static_cast<int>(levels.size()))
    throw ArgumentError("weighted_variances_from_samples: dimension mismatch");
  SampleWeightedVariances out;
  out.value.assign(levels.size(), 0.0);
  out.measured.assign(levels.size(), false);
  const std::vector<double>& a = cv.alpha;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const PairSamples& ps = levels[l];
    const std::size_t n = ps.fine.size();
    if (n < 2) continue;
    double mean = 0.0;
    std::vector<double> weighted(n);
    for (std::size_t i = 0; i < n; ++i) {
      weighted[i] = l == 0 ? a[0] * ps.fine[i]
                           : a[l] * ps.fine[i] - a[l - 1] * ps.coarse[i];
      mean += weighted[i];
    }
    mean /= static_cast<double>(n);
    double s2 = 0.0;
    for (double w : weighted) s2 += (w - mean) * (w - mean);
    out.value[l] = s2 / static_cast<double>(n - 1);
    out.measured[l] = true;
  }
  return out;
}

//! Statistical RMS error of the coupled estimator at sample counts M_l:
//! sqrt(sum_l sigma~2_l / M_l).
inline double estimator_error(const WeightedDifferenceVariances& wv,
                              const std::vector<std::int64_t>& counts) {
  if (counts.size() != wv.value.size())
    throw ArgumentError("estimator_error: dimension mismatch");
  double sum = 0.0;
  for (std::size_t l = 0; l < counts.size(); ++l) {
    if (counts[l] < 1) throw ArgumentError("estimator_error: counts must be >= 1");
    sum += wv.value[l] / static_cast<double>(counts[l]);
  }
  return std::sqrt(sum);
}

//! Coupled multi-level expectation over valid samples:
//!   alpha_0 mean(q_0) + sum_l mean(alpha_l q_l - alpha_{l-1} q_{l-1}).
//! With alpha == 1 this is the classic telescoping estimator. Samples must be
//! supplied in a canonical (index-sorted) order so results are bit-stable.
inline double of_mlmc_expectation(const std::vector<PairSamples>& levels,
                                  const CoefficientVector& cv) {
  if (cv.num_levels() != static_cast<int>(levels.size()))
    throw ArgumentError("of_mlmc_expectation: dimension mismatch");
  const std::vector<double>& a = cv.alpha;
  double total = 0.0;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const PairSamples& ps = levels[l];
    const std::size_t n = ps.fine.size();
    if (n == 0)
      throw EstimatorError("of_mlmc_expectation: difference level " +
                           std::to_string(l) + " has zero valid samples");
    double sum = 0.0;
    if (l == 0) {
      for (double v : ps.fine) sum += v;
      total += a[0] * sum / static_cast<double>(n);
    } else {
      for (std::size_t i = 0; i < n; ++i)
        sum += a[l] * ps.fine[i] - a[l - 1] * ps.coarse[i];
      total += sum / static_cast<double>(n);
    }
  }
  return total;
}

//! Single-level Monte Carlo cost to match error eps, reported in the published
//! form M = ceil(sigma_L / eps) and in the variance-consistent form
//! M = ceil(sigma_L^2 / eps^2) side by side (the two differ; downstream tables
//! carry both).
struct McCostEstimate {
  std::int64_t samples_as_published = 0;
  std::int64_t samples_variance_consistent = 0;
  double work_as_published = 0.0;
  double work_variance_consistent = 0.0;
};

inline McCostEstimate mc_cost_estimate(double sigma_top, double eps, double work_top) {
  if (eps <= 0.0) throw ArgumentError("mc_cost_estimate: eps must be > 0");
  McCostEstimate r;
  r.samples_as_published =
      std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(sigma_top / eps)));
  r.samples_variance_consistent = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::ceil((sigma_top * sigma_top) / (eps * eps))));
  r.work_as_published = static_cast<double>(r.samples_as_published) * work_top;
  r.work_variance_consistent =
      static_cast<double>(r.samples_variance_consistent) * work_top;
  return r;
}

}  // namespace ofmlmc
