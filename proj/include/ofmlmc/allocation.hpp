#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ofmlmc/errors.hpp"

namespace ofmlmc {

//! Per-level sample counts plus the cost/error they imply.
struct Allocation {
  std::vector<std::int64_t> samples;

  int num_levels() const { return static_cast<int>(samples.size()); }

  double total_cost(const std::vector<double>& work) const {
    double c = 0.0;
    for (std::size_t l = 0; l < samples.size(); ++l)
      c += static_cast<double>(samples[l]) * work[l];
    return c;
  }

  double implied_error(const std::vector<double>& sigma2t) const {
    double s = 0.0;
    for (std::size_t l = 0; l < samples.size(); ++l)
      s += sigma2t[l] / static_cast<double>(samples[l]);
    return std::sqrt(s);
  }

  bool operator==(const Allocation&) const = default;
};

//! Either a tolerance tau on the estimator error or a total work budget.
struct AllocationTarget {
  enum class Kind { tolerance, budget };
  Kind kind = Kind::tolerance;
  double value = 0.0;

  static AllocationTarget tolerance(double tau) { return {Kind::tolerance, tau}; }
  static AllocationTarget budget(double b) { return {Kind::budget, b}; }
};

namespace detail {

inline void check_alloc_inputs(const std::vector<double>& sigma2t,
                               const std::vector<double>& work) {
  if (sigma2t.empty() || sigma2t.size() != work.size())
    throw ArgumentError("allocation: dimension mismatch");
  for (double w : work)
    if (w <= 0.0) throw ArgumentError("allocation: work must be > 0");
  for (double s : sigma2t)
    if (s < 0.0) throw ArgumentError("allocation: variances must be >= 0");
}

inline std::int64_t ceil_count(double x) {
  const double c = std::ceil(x);
  return c < 1.0 ? 1 : static_cast<std::int64_t>(c);
}

}  // namespace detail

//! Cost-minimizing sample counts subject to implied_error <= tau:
//!   M_l = ceil(tau^-2 sqrt(sigma~2_l / W_l) sum_k sqrt(sigma~2_k W_k)),
//! floored at one sample per level (telescoping needs every difference).
inline Allocation allocate_for_tolerance(const std::vector<double>& sigma2t,
                                         const std::vector<double>& work,
                                         double tau) {
  detail::check_alloc_inputs(sigma2t, work);
  if (tau <= 0.0) throw ArgumentError("allocate_for_tolerance: tau must be > 0");
  double s = 0.0;
  for (std::size_t k = 0; k < sigma2t.size(); ++k)
    s += std::sqrt(sigma2t[k] * work[k]);
  Allocation a;
  a.samples.resize(sigma2t.size());
  for (std::size_t l = 0; l < sigma2t.size(); ++l)
    a.samples[l] =
        detail::ceil_count(std::sqrt(sigma2t[l] / work[l]) * s / (tau * tau));
  return a;
}

//! Error-minimizing sample counts under a total work budget:
//!   M_l = ceil(B sqrt(sigma~2_l / W_l) / sum_k sqrt(sigma~2_k W_k)).
//! Requires the budget to afford one sample per level; the ceil leaves the
//! realized cost in [B, B + sum_l W_l].
inline Allocation allocate_for_budget(const std::vector<double>& sigma2t,
                                      const std::vector<double>& work, double b) {
  detail::check_alloc_inputs(sigma2t, work);
  double min_b = 0.0;
  for (double w : work) min_b += w;
  if (b < min_b)
    throw BudgetError(min_b, "allocate_for_budget: budget " + std::to_string(b) +
                                 " below one-sample-per-level minimum " +
                                 std::to_string(min_b));
  double s = 0.0;
  for (std::size_t k = 0; k < sigma2t.size(); ++k)
    s += std::sqrt(sigma2t[k] * work[k]);
  Allocation a;
  a.samples.assign(sigma2t.size(), 1);
  if (s <= 0.0) return a;  // nothing to reduce: floor everywhere
  for (std::size_t l = 0; l < sigma2t.size(); ++l)
    a.samples[l] = detail::ceil_count(b * std::sqrt(sigma2t[l] / work[l]) / s);
  return a;
}

//! Re-optimization that keeps already computed samples. Levels whose optimal
//! count falls below the done count are pinned there; their error contribution
//! (or cost) is removed from the target and the remaining levels re-solved,
//! iterating until the result dominates `done` everywhere. If the pinned
//! levels alone already meet the target, `done` is returned unchanged.
inline Allocation reoptimize_with_floor(const std::vector<std::int64_t>& done,
                                        const std::vector<double>& sigma2t,
                                        const std::vector<double>& work,
                                        const AllocationTarget& target) {
  detail::check_alloc_inputs(sigma2t, work);
  const std::size_t n = sigma2t.size();
  if (done.size() != n) throw ArgumentError("reoptimize_with_floor: dimension mismatch");
  if (target.value <= 0.0)
    throw ArgumentError("reoptimize_with_floor: target must be > 0");

  std::vector<bool> fixed(n, false);
  Allocation done_alloc{done};
  for (auto& m : done_alloc.samples)
    if (m < 1) m = 1;

  while (true) {
    double residual = target.kind == AllocationTarget::Kind::tolerance
                          ? target.value * target.value
                          : target.value;
    std::size_t free_count = 0;
    for (std::size_t l = 0; l < n; ++l) {
      if (fixed[l]) {
        if (target.kind == AllocationTarget::Kind::tolerance)
          residual -= sigma2t[l] / static_cast<double>(done_alloc.samples[l]);
        else
          residual -= static_cast<double>(done_alloc.samples[l]) * work[l];
      } else {
        ++free_count;
      }
    }
    if (free_count == 0 || residual <= 0.0) return done_alloc;

    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      if (!fixed[k]) s += std::sqrt(sigma2t[k] * work[k]);

    Allocation result = done_alloc;
    bool newly_fixed = false;
    for (std::size_t l = 0; l < n; ++l) {
      if (fixed[l]) continue;
      std::int64_t m = 1;
      if (s > 0.0) {
        const double scale = target.kind == AllocationTarget::Kind::tolerance
                                 ? s / residual
                                 : residual / s;
        m = detail::ceil_count(std::sqrt(sigma2t[l] / work[l]) * scale);
      }
      if (m < done_alloc.samples[l]) {
        fixed[l] = true;
        newly_fixed = true;
      } else {
        result.samples[l] = m;
      }
    }
    if (!newly_fixed) return result;
  }
}

//! Confidence inflation (optional, s standard deviations of the variance
//! estimator): grow counts until the tolerance still holds when every
//! sigma~2_l is replaced by sigma~2_l + s * sqrt(kurtosis_l) / sqrt(M_l).
//! s == 0 is the identity.
inline Allocation inflate_for_confidence(const Allocation& current,
                                         const std::vector<double>& kurtosis,
                                         double s,
                                         const std::vector<double>& sigma2t,
                                         const std::vector<double>& work,
                                         double tau) {
  if (s < 0.0) throw ArgumentError("inflate_for_confidence: s must be >= 0");
  if (s == 0.0) return current;
  const std::size_t n = sigma2t.size();
  if (current.samples.size() != n || kurtosis.size() != n)
    throw ArgumentError("inflate_for_confidence: dimension mismatch");

  Allocation cur = current;
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<double> inflated(n);
    for (std::size_t l = 0; l < n; ++l)
      inflated[l] = sigma2t[l] + s * std::sqrt(kurtosis[l]) /
                                     std::sqrt(static_cast<double>(cur.samples[l]));
    Allocation next = reoptimize_with_floor(cur.samples, inflated, work,
                                            AllocationTarget::tolerance(tau));
    if (next == cur) break;
    cur = next;
  }
  return cur;
}

}  // namespace ofmlmc
