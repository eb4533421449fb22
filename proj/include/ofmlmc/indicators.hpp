#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ofmlmc/errors.hpp"

namespace ofmlmc {

//! Valid realizations at one difference level. For level 0 `fine` holds the
//! plain q_0 draws and `coarse` stays empty; for l >= 1 entries are coupled
//! pairs (q_l, q_{l-1}) evaluated from the same stochastic sample.
struct PairSamples {
  int level = 0;
  std::vector<double> fine;
  std::vector<double> coarse;
  //! Model-reported work per evaluation (same length as fine/coarse, or empty).
  std::vector<double> fine_work;
  std::vector<double> coarse_work;
};

//! Empirical statistics steering the algorithm: level variances, cross-level
//! covariances, work costs and kurtosis, each with standard errors. Entries
//! that could not be measured (fewer than two samples) carry an
//! inferred-required flag and are filled by the decay fit / nearest-level
//! fallback before use.
struct LevelIndicators {
  int num_levels = 0;

  std::vector<double> variance;       // sigma2[l] = V[q_l]
  std::vector<double> variance_se;
  std::vector<bool> variance_inferred;

  std::vector<double> cross_cov;      // sigma2[l,l-1] = Cov[q_l, q_{l-1}], index l >= 1
  std::vector<double> cross_cov_se;
  std::vector<bool> cross_cov_inferred;

  std::vector<double> diff_variance;  // V[q_l - q_{l-1}]; level 0: V[q_0]
  std::vector<double> diff_variance_se;
  std::vector<bool> diff_variance_inferred;

  std::vector<double> work;           // measured single-sample work per level
  std::vector<std::int64_t> samples;  // valid sample count per difference level
  std::vector<double> kurtosis;       // 4th central moment of level differences

  double pair_cost(int l) const {
    return l == 0 ? work[0] : work[l] + work[l - 1];
  }

  std::vector<double> pair_costs() const {
    std::vector<double> c(num_levels);
    for (int l = 0; l < num_levels; ++l) c[l] = pair_cost(l);
    return c;
  }
};

namespace detail {

struct Moments {
  std::int64_t n = 0;
  double mean = 0.0;
  double var = 0.0;   // unbiased, defined for n >= 2
  double m4 = 0.0;    // fourth central moment, 1/n normalization
};

inline Moments moments(const std::vector<double>& v) {
  Moments m;
  m.n = static_cast<std::int64_t>(v.size());
  if (m.n == 0) return m;
  double s = 0.0;
  for (double x : v) s += x;
  m.mean = s / static_cast<double>(m.n);
  if (m.n < 2) return m;
  double s2 = 0.0, s4 = 0.0;
  for (double x : v) {
    const double d = x - m.mean;
    s2 += d * d;
    s4 += d * d * d * d;
  }
  m.var = s2 / static_cast<double>(m.n - 1);
  m.m4 = s4 / static_cast<double>(m.n);
  return m;
}

inline double covariance(const std::vector<double>& a, const std::vector<double>& b,
                         double mean_a, double mean_b) {
  const std::size_t n = a.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += (a[i] - mean_a) * (b[i] - mean_b);
  return s / static_cast<double>(n - 1);
}

//! Standard error of the unbiased variance estimator; uses the fourth moment
//! when it is informative and falls back to the normal approximation.
inline double variance_se(const Moments& m) {
  if (m.n < 2) return 0.0;
  const double n = static_cast<double>(m.n);
  const double v = (m.m4 - m.var * m.var * (n - 3.0) / (n - 1.0)) / n;
  if (v > 0.0) return std::sqrt(v);
  return m.var * std::sqrt(2.0 / (n - 1.0));
}

}  // namespace detail

//! Unbiased per-level moment estimates from valid samples.
//!
//! Level variances pool the two independent views of q_l available in the
//! telescoping scheme (fine side of difference l, coarse side of difference
//! l+1). Cross covariances come from the coupled pairs of their difference
//! level, so Cauchy-Schwarz holds within each pair set. Differences feed the
//! kurtosis entries used for confidence inflation. Throws IndicatorError when
//! a difference level has no samples at all.
inline LevelIndicators estimate_indicators(const std::vector<PairSamples>& levels) {
  const int count = static_cast<int>(levels.size());
  if (count == 0) throw ArgumentError("estimate_indicators: no levels");

  LevelIndicators ind;
  ind.num_levels = count;
  ind.variance.assign(count, 0.0);
  ind.variance_se.assign(count, 0.0);
  ind.variance_inferred.assign(count, false);
  ind.cross_cov.assign(count, 0.0);
  ind.cross_cov_se.assign(count, 0.0);
  ind.cross_cov_inferred.assign(count, false);
  ind.diff_variance.assign(count, 0.0);
  ind.diff_variance_se.assign(count, 0.0);
  ind.diff_variance_inferred.assign(count, false);
  ind.work.assign(count, 0.0);
  ind.samples.assign(count, 0);
  ind.kurtosis.assign(count, 0.0);

  std::vector<double> work_sum(count, 0.0);
  std::vector<std::int64_t> work_n(count, 0);

  for (int l = 0; l < count; ++l) {
    const PairSamples& ps = levels[l];
    const std::int64_t n = static_cast<std::int64_t>(ps.fine.size());
    if (n == 0)
      throw IndicatorError(l, "estimate_indicators: difference level " +
                                  std::to_string(l) + " has zero valid samples");
    if (l > 0 && ps.coarse.size() != ps.fine.size())
      throw ArgumentError("estimate_indicators: fine/coarse size mismatch at level " +
                          std::to_string(l));
    ind.samples[l] = n;

    for (std::size_t i = 0; i < ps.fine_work.size(); ++i) {
      work_sum[l] += ps.fine_work[i];
      ++work_n[l];
    }
    if (l > 0) {
      for (std::size_t i = 0; i < ps.coarse_work.size(); ++i) {
        work_sum[l - 1] += ps.coarse_work[i];
        ++work_n[l - 1];
      }
    }

    // Differences (level 0: the values themselves).
    std::vector<double> diffs;
    diffs.reserve(ps.fine.size());
    if (l == 0) {
      diffs = ps.fine;
    } else {
      for (std::size_t i = 0; i < ps.fine.size(); ++i)
        diffs.push_back(ps.fine[i] - ps.coarse[i]);
    }
    const detail::Moments dm = detail::moments(diffs);
    if (dm.n >= 2) {
      ind.diff_variance[l] = dm.var;
      ind.diff_variance_se[l] = detail::variance_se(dm);
      ind.kurtosis[l] = dm.m4;
    } else {
      ind.diff_variance_inferred[l] = true;
    }

    if (l > 0) {
      if (n >= 2) {
        const detail::Moments fm = detail::moments(ps.fine);
        const detail::Moments cm = detail::moments(ps.coarse);
        const double cov = detail::covariance(ps.fine, ps.coarse, fm.mean, cm.mean);
        ind.cross_cov[l] = cov;
        ind.cross_cov_se[l] =
            std::sqrt(std::max(0.0, (fm.var * cm.var + cov * cov) /
                                        static_cast<double>(n - 1)));
      } else {
        ind.cross_cov_inferred[l] = true;
      }
    }
  }

  // Pooled level variances: fine side of difference l, coarse side of l+1.
  for (int l = 0; l < count; ++l) {
    std::vector<double> pooled = levels[l].fine;
    if (l + 1 < count)
      pooled.insert(pooled.end(), levels[l + 1].coarse.begin(),
                    levels[l + 1].coarse.end());
    const detail::Moments pm = detail::moments(pooled);
    if (pm.n >= 2) {
      ind.variance[l] = pm.var;
      ind.variance_se[l] = detail::variance_se(pm);
    } else {
      ind.variance_inferred[l] = true;
    }
  }

  for (int l = 0; l < count; ++l)
    if (work_n[l] > 0) ind.work[l] = work_sum[l] / static_cast<double>(work_n[l]);

  return ind;
}

//! Replace unmeasurable level variances with the nearest measured lower level
//! (levels vary slowly relative to the decaying differences). Returns number
//! of entries filled.
inline int fill_inferred_variances(LevelIndicators& ind) {
  int filled = 0;
  double last = -1.0;
  for (int l = 0; l < ind.num_levels; ++l) {
    if (!ind.variance_inferred[l]) {
      last = ind.variance[l];
    } else if (last >= 0.0) {
      ind.variance[l] = last;
      ++filled;
    }
  }
  return filled;
}

//! Clamp cross covariances into the Cauchy-Schwarz bound implied by the stored
//! level variances (pooling and inference can nudge estimates past it).
//! Returns number of clamped entries.
inline int clamp_cauchy_schwarz(LevelIndicators& ind) {
  int clamped = 0;
  for (int l = 1; l < ind.num_levels; ++l) {
    const double bound = std::sqrt(ind.variance[l] * ind.variance[l - 1]);
    if (std::fabs(ind.cross_cov[l]) > bound) {
      ind.cross_cov[l] = ind.cross_cov[l] < 0.0 ? -bound : bound;
      ++clamped;
    }
  }
  return clamped;
}

}  // namespace ofmlmc
