#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ofmlmc/errors.hpp"

namespace ofmlmc {

//! Per-sample work at `level` under geometric growth: base_work * 2^(rate*level).
inline double work_model(int level, double base_work, double rate) {
  if (level < 0) throw ArgumentError("work_model: level must be >= 0");
  if (base_work <= 0.0) throw ArgumentError("work_model: base_work must be > 0");
  return base_work * std::exp2(rate * static_cast<double>(level));
}

//! The discretization-level hierarchy and its a-priori work model.
//!
//! work_per_sample holds single-sample costs W_l; the cost of one coupled
//! fine/coarse pair at difference level l >= 1 is W_l + W_{l-1}. Instances are
//! immutable after construction, safe to share across workers. The scheduler
//! later replaces these a-priori costs with measured averages.
struct LevelHierarchy {
  std::vector<double> work_per_sample;
  double work_growth_rate = 4.0;
  //! Opaque per-level resolution tokens handed to the model (e.g. time-step
  //! refinement exponent). Defaults to "0", "1", ...
  std::vector<std::string> resolution;

  static LevelHierarchy geometric(int num_levels, double base_work, double rate) {
    if (num_levels < 1) throw ArgumentError("hierarchy: need at least one level");
    LevelHierarchy h;
    h.work_growth_rate = rate;
    for (int l = 0; l < num_levels; ++l) {
      h.work_per_sample.push_back(work_model(l, base_work, rate));
      h.resolution.push_back(std::to_string(l));
    }
    h.validate();
    return h;
  }

  int num_levels() const { return static_cast<int>(work_per_sample.size()); }
  int max_level() const { return num_levels() - 1; }

  //! Cost of one statistical sample at difference level l (pair for l >= 1).
  double pair_cost(int l) const {
    return l == 0 ? work_per_sample[0]
                  : work_per_sample[l] + work_per_sample[l - 1];
  }

  void validate() const {
    if (work_per_sample.empty())
      throw ArgumentError("hierarchy: need at least one level");
    double prev = 0.0;
    for (double w : work_per_sample) {
      if (w <= prev)
        throw ArgumentError("hierarchy: work_per_sample must be positive and strictly increasing");
      prev = w;
    }
  }
};

//! Level-dependent warm-up sample counts M_l = ceil((W_L / W_l) * 2^-(L-l)).
//!
//! Guarantees a single sample on the finest level and keeps the total warm-up
//! cost within a small multiple of W_L (geometric series bound).
inline std::vector<std::int64_t> warmup_allocation(const LevelHierarchy& h) {
  h.validate();
  const int top = h.max_level();
  const double w_top = h.work_per_sample[top];
  std::vector<std::int64_t> counts(h.num_levels());
  for (int l = 0; l <= top; ++l) {
    const double ratio = (w_top / h.work_per_sample[l]) * std::exp2(-(top - l));
    counts[l] = static_cast<std::int64_t>(std::ceil(ratio));
    if (counts[l] < 1) counts[l] = 1;
  }
  return counts;
}

}  // namespace ofmlmc
