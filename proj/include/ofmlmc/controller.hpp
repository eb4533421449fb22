#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "ofmlmc/allocation.hpp"
#include "ofmlmc/estimator.hpp"
#include "ofmlmc/indicators.hpp"
#include "ofmlmc/levels.hpp"
#include "ofmlmc/scheduler.hpp"
#include "ofmlmc/store.hpp"

namespace ofmlmc {

//! Everything a campaign needs besides the model itself. Exactly one of
//! tolerance/budget is active; all randomness flows from `seed`.
struct CampaignConfig {
  std::string id = "campaign";
  std::uint64_t seed = 0;

  enum class Mode { tolerance, budget };
  Mode mode = Mode::tolerance;
  double tolerance = 0.0;
  double budget = 0.0;

  LevelHierarchy hierarchy;
  std::string model_name;
  std::map<std::string, std::string> model_params;
  std::string qoi = "value";

  int max_iterations = 10;
  double kurtosis_inflation = 0.0;  // 0 = off
  bool decay_fit = true;
  bool unit_coefficients = false;   // force alpha == 1 (plain telescoping)

  void validate() const {
    hierarchy.validate();
    if (mode == Mode::tolerance && !(tolerance > 0.0))
      throw ArgumentError("campaign: tolerance must be > 0");
    if (mode == Mode::budget && !(budget > 0.0))
      throw ArgumentError("campaign: budget must be > 0");
    if (max_iterations < 1) throw ArgumentError("campaign: max_iterations must be >= 1");
    if (kurtosis_inflation < 0.0)
      throw ArgumentError("campaign: kurtosis_inflation must be >= 0");
  }
};

//! Weighted least-squares line fit of ln(value) against the level index for
//! difference levels 1..L, used to infer unmeasured cross covariances and to
//! stabilize measured ones.
//!
//! Weights are inverse squared relative standard errors (the delta-method
//! variance of the log measurement). Levels flagged missing (or non-positive)
//! take the fitted value outright; measured levels blend measurement and fit
//! by inverse variance in log space. With fewer than two usable measurements
//! the inputs pass through unchanged and `applied` stays false.
struct DecayFit {
  std::vector<double> value;
  bool applied = false;
  std::string warning;
};

inline DecayFit fit_decay(const std::vector<double>& measured,
                          const std::vector<double>& standard_error,
                          const std::vector<bool>& missing) {
  const std::size_t n = measured.size();
  DecayFit out;
  out.value = measured;
  if (n != standard_error.size() || n != missing.size())
    throw ArgumentError("fit_decay: dimension mismatch");

  std::vector<std::size_t> usable;
  for (std::size_t l = 1; l < n; ++l)
    if (!missing[l] && measured[l] > 0.0 && std::isfinite(measured[l]))
      usable.push_back(l);
  if (usable.size() < 2) {
    out.warning = "fit_decay: fewer than two usable measurements, passthrough";
    return out;
  }

  // WLS for y = a + b*l on y_l = ln(measured_l), weight w = 1/rel_se^2.
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::vector<double> log_var(n, 0.0);
  for (std::size_t l : usable) {
    const double rel = std::max(standard_error[l] / measured[l], 1e-8);
    log_var[l] = rel * rel;
    const double w = 1.0 / log_var[l];
    const double x = static_cast<double>(l);
    const double y = std::log(measured[l]);
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
  }
  const double det = sw * sxx - sx * sx;
  if (det <= 0.0) {
    out.warning = "fit_decay: degenerate design, passthrough";
    return out;
  }
  const double intercept = (sxx * sy - sx * sxy) / det;
  const double slope = (sw * sxy - sx * sy) / det;
  // Parameter covariance (XtWX)^-1 for the fit's predictive variance.
  const double cov_aa = sxx / det, cov_bb = sw / det, cov_ab = -sx / det;

  std::set<std::size_t> usable_set(usable.begin(), usable.end());
  for (std::size_t l = 1; l < n; ++l) {
    const double x = static_cast<double>(l);
    const double fit_log = intercept + slope * x;
    const double fit_var = cov_aa + 2.0 * cov_ab * x + cov_bb * x * x;
    if (!usable_set.count(l)) {
      out.value[l] = std::exp(fit_log);
    } else {
      const double pm = 1.0 / log_var[l];
      const double pf = 1.0 / std::max(fit_var, 1e-300);
      out.value[l] =
          std::exp((pm * std::log(measured[l]) + pf * fit_log) / (pm + pf));
    }
  }
  out.applied = true;
  return out;
}

//! Snapshot of one controller iteration.
struct IterationState {
  int iteration = 0;
  std::vector<std::int64_t> target;  // requested counts this iteration
  std::vector<std::int64_t> done;    // valid counts actually available
  LevelIndicators indicators;
  CoefficientVector alpha;
  std::vector<double> weighted_var;
  double error_estimate = 0.0;
  double cumulative_cost = 0.0;
  bool decay_fit_applied = false;
  int cauchy_schwarz_clamped = 0;
  int negative_variance_clamped = 0;
};

struct CampaignResult {
  std::string termination;  // tolerance_met | budget_spent | max_iterations
  std::vector<IterationState> iterations;
  CoefficientVector alpha;
  std::vector<double> weighted_var;
  double error_estimate = 0.0;
  double cumulative_cost = 0.0;
  std::vector<double> cost_by_level;
  std::vector<std::int64_t> done;
  LevelIndicators indicators;
  std::map<std::string, double> estimates;  // per scalar QoI
};

inline json to_json(const IterationState& it) {
  json j;
  j["iteration"] = it.iteration;
  j["target"] = it.target;
  j["done"] = it.done;
  j["alpha"] = it.alpha.alpha;
  j["alpha_fallback_unit"] = it.alpha.fallback_unit;
  j["weighted_variances"] = it.weighted_var;
  j["error_estimate"] = it.error_estimate;
  j["cumulative_cost"] = it.cumulative_cost;
  j["decay_fit_applied"] = it.decay_fit_applied;
  j["cauchy_schwarz_clamped"] = it.cauchy_schwarz_clamped;
  j["negative_variance_clamped"] = it.negative_variance_clamped;
  j["indicators"] = {{"variance", it.indicators.variance},
                     {"variance_se", it.indicators.variance_se},
                     {"cross_cov", it.indicators.cross_cov},
                     {"cross_cov_se", it.indicators.cross_cov_se},
                     {"diff_variance", it.indicators.diff_variance},
                     {"work", it.indicators.work},
                     {"samples", it.indicators.samples},
                     {"kurtosis", it.indicators.kurtosis}};
  return j;
}

//! Steps 3-5 of an iteration: indicators (with optional decay fit and the
//! inferred-entry fills), coefficients, weighted variances, error estimate.
//! Pure in the ledger records, so a report rebuilt later reproduces the
//! campaign's numbers exactly.
inline IterationState evaluate_state(const CampaignConfig& config,
                                     const std::vector<SampleRecord>& records,
                                     int iteration) {
  const int num_levels = config.hierarchy.num_levels();
  const auto counts = ledger_counts(records, num_levels);
  for (int l = 0; l < num_levels; ++l)
    if (counts.done[l] == 0)
      throw CampaignAbort(l, "campaign: level " + std::to_string(l) +
                                 " produced no valid samples");
  const auto samples = valid_samples(records, num_levels, config.qoi);

  IterationState state;
  state.iteration = iteration;
  state.indicators = estimate_indicators(samples);
  for (int l = 0; l < num_levels; ++l) {
    state.done.push_back(counts.done[l]);
    if (!(state.indicators.work[l] > 0.0))
      state.indicators.work[l] = config.hierarchy.work_per_sample[l];
  }
  if (config.decay_fit) {
    const DecayFit fit =
        fit_decay(state.indicators.cross_cov, state.indicators.cross_cov_se,
                  state.indicators.cross_cov_inferred);
    if (fit.applied) {
      state.indicators.cross_cov = fit.value;
      for (int l = 1; l < num_levels; ++l)
        state.indicators.cross_cov_inferred[l] = false;
      state.decay_fit_applied = true;
    }
  }
  fill_inferred_variances(state.indicators);
  state.cauchy_schwarz_clamped = clamp_cauchy_schwarz(state.indicators);

  // The stationarity system is driven by the finest cross covariance; while
  // that entry is still unmeasured and the fit could not fill it, the solve
  // would return zeros, so plain telescoping is the only sound choice.
  const bool finest_cov_unknown =
      num_levels > 1 && state.indicators.cross_cov_inferred[num_levels - 1];
  if (config.unit_coefficients || finest_cov_unknown) {
    state.alpha = unit_coefficients(num_levels);
    state.alpha.fallback_unit = !config.unit_coefficients;
  } else {
    state.alpha = optimal_coefficients(state.indicators);
  }

  // Step 5: weighted difference variances, estimated directly from the pairs
  // where two or more exist. An unmeasured level (single warm-up sample)
  // takes the larger of the indicator-formula value and the decay-fit
  // extrapolation of the plain difference variances: the formula guards
  // against stray coefficients, the extrapolation against the formula's
  // cancellation collapsing to zero at clamped correlations.
  WeightedDifferenceVariances wv = weighted_variances(state.indicators, state.alpha);
  state.negative_variance_clamped = wv.clamped;
  const SampleWeightedVariances direct =
      weighted_variances_from_samples(samples, state.alpha);
  DecayFit diff_fit;
  if (config.decay_fit)
    diff_fit = fit_decay(state.indicators.diff_variance,
                         state.indicators.diff_variance_se,
                         state.indicators.diff_variance_inferred);
  for (int l = 0; l < num_levels; ++l) {
    if (direct.measured[l]) {
      wv.value[l] = direct.value[l];
    } else if (diff_fit.applied && l > 0 && std::isfinite(diff_fit.value[l])) {
      wv.value[l] = std::max(wv.value[l], diff_fit.value[l]);
    }
  }
  state.weighted_var = wv.value;
  state.error_estimate = estimator_error(wv, state.done);
  state.cumulative_cost = counts.total_work;
  return state;
}

//! Final estimator values for every scalar QoI present in the done samples.
inline std::map<std::string, double> estimate_all_qois(
    const std::vector<SampleRecord>& records, int num_levels,
    const CoefficientVector& alpha) {
  std::set<std::string> names;
  for (const auto& r : records)
    if (r.status == SampleStatus::done)
      for (const auto& [name, value] : r.fine.qoi) names.insert(name);
  std::map<std::string, double> estimates;
  for (const auto& name : names) {
    const auto qoi_samples = valid_samples(records, num_levels, name);
    estimates[name] = of_mlmc_expectation(qoi_samples, alpha);
  }
  return estimates;
}

//! The adaptive campaign: warm-up, then iterate sampling, indicator
//! estimation (with optional decay fit), coefficient optimization, error
//! check, floor-aware re-allocation, until the tolerance is met, the budget
//! is spent, or the iteration cap is hit. Per-iteration state is persisted to
//! the store; progress lines go to `progress` when given.
inline CampaignResult run_campaign(const CampaignConfig& config, CampaignStore& store,
                                   const Model& model, int workers = 1,
                                   std::ostream* progress = nullptr) {
  config.validate();
  const int num_levels = config.hierarchy.num_levels();
  if (model.num_levels() < num_levels)
    throw ArgumentError("campaign: model supports fewer levels than the hierarchy");

  SampleScheduler scheduler(store, model, config.seed, workers);
  CampaignResult result;

  // Resume support: pick up where the ledger left off. A persisted plan is
  // honored before any re-estimation so an interrupted iteration completes
  // with exactly the sample set it would have had uninterrupted.
  std::vector<std::int64_t> requested = store.next_index(num_levels);
  int iteration = static_cast<int>(store.iterations().size());

  // Warm-up targets from the a-priori work model (step 1). In budget mode the
  // warm-up is scaled down to fit the budget (floored at one sample per
  // level), so a minimum-feasible budget runs exactly one sample everywhere.
  std::vector<std::int64_t> target = warmup_allocation(config.hierarchy);
  if (config.mode == CampaignConfig::Mode::budget) {
    const auto scaled_cost = [&](double f) {
      double c = 0.0;
      for (int l = 0; l < num_levels; ++l)
        c += static_cast<double>(std::max<std::int64_t>(
                 1, static_cast<std::int64_t>(std::floor(f * static_cast<double>(target[l]))))) *
             config.hierarchy.pair_cost(l);
      return c;
    };
    if (scaled_cost(1.0) > config.budget) {
      double lo = 0.0, hi = 1.0;  // scaled_cost(0) is the one-sample floor
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (scaled_cost(mid) <= config.budget ? lo : hi) = mid;
      }
      for (int l = 0; l < num_levels; ++l)
        target[l] = std::max<std::int64_t>(
            1, static_cast<std::int64_t>(std::floor(lo * static_cast<double>(target[l]))));
    }
  }
  for (int l = 0; l < num_levels; ++l)
    target[l] = std::max(target[l], requested[l]);
  if (const auto plan = store.last_plan(); plan && plan->size() == target.size())
    for (int l = 0; l < num_levels; ++l)
      target[l] = std::max(target[l], (*plan)[l]);

  while (true) {
    // Step 2: evaluate the missing samples.
    std::vector<SampleKey> pending;
    for (int l = 0; l < num_levels; ++l)
      for (std::int64_t i = requested[l]; i < target[l]; ++i)
        pending.push_back({l, i});
    if (!pending.empty()) {
      const auto plan = store.last_plan();
      if (!plan || *plan != target) store.append_plan(target);
      scheduler.execute_plan(BatchPlan::single_group(std::move(pending), workers));
    }
    for (int l = 0; l < num_levels; ++l)
      requested[l] = std::max(requested[l], target[l]);

    // Fault path: a level whose attempts all failed gets fresh indices (failed
    // keys are never resampled) before estimation; abort only when a level
    // still yields nothing after the retry passes.
    for (int retry = 0; retry < 6; ++retry) {
      const auto counts = ledger_counts(store.records(), num_levels);
      std::vector<SampleKey> extra;
      for (int l = 0; l < num_levels; ++l)
        if (counts.done[l] == 0)
          for (std::int64_t i = 0; i < (std::int64_t{1} << retry); ++i)
            extra.push_back({l, requested[l] + i});
      if (extra.empty()) break;
      for (const auto& key : extra)
        requested[key.level] = std::max(requested[key.level], key.index + 1);
      store.append_plan(requested);
      scheduler.execute_plan(BatchPlan::single_group(std::move(extra), workers));
    }

    const auto records = store.records();
    IterationState state = evaluate_state(config, records, iteration);
    state.target = target;
    WeightedDifferenceVariances wv;
    wv.value = state.weighted_var;

    store.append_iteration(to_json(state));
    result.iterations.push_back(state);
    if (progress) {
      *progress << "iteration " << iteration << ": M = [";
      for (int l = 0; l < num_levels; ++l)
        *progress << (l ? ", " : "") << state.done[l];
      *progress << "], eps = " << state.error_estimate
                << ", cost = " << state.cumulative_cost << "\n";
    }

    // Step 6: termination checks.
    const bool tolerance_met = config.mode == CampaignConfig::Mode::tolerance &&
                               state.error_estimate <= config.tolerance;
    const bool budget_spent = config.mode == CampaignConfig::Mode::budget &&
                              state.cumulative_cost >= config.budget * (1.0 - 1e-12);
    const bool out_of_iterations = iteration + 1 >= config.max_iterations;

    std::vector<std::int64_t> next_target;
    bool nothing_to_add = false;
    if (!tolerance_met && !budget_spent && !out_of_iterations) {
      // Step 7: floor-aware re-optimization on measured pair costs. The
      // allocation speaks in desired done counts; with failures in the ledger
      // the request stream tops up by the shortfall using fresh indices.
      const std::vector<double> pair_costs = state.indicators.pair_costs();
      const AllocationTarget goal =
          config.mode == CampaignConfig::Mode::tolerance
              ? AllocationTarget::tolerance(config.tolerance)
              : AllocationTarget::budget(config.budget);
      Allocation alloc =
          reoptimize_with_floor(state.done, wv.value, pair_costs, goal);
      if (config.mode == CampaignConfig::Mode::tolerance &&
          config.kurtosis_inflation > 0.0)
        alloc = inflate_for_confidence(alloc, state.indicators.kurtosis,
                                       config.kurtosis_inflation, wv.value,
                                       pair_costs, config.tolerance);
      next_target.resize(num_levels);
      nothing_to_add = true;
      for (int l = 0; l < num_levels; ++l) {
        const std::int64_t shortfall =
            std::max<std::int64_t>(0, alloc.samples[l] - state.done[l]);
        next_target[l] = requested[l] + shortfall;
        if (shortfall > 0) nothing_to_add = false;
      }
    }

    if (tolerance_met || budget_spent || out_of_iterations || nothing_to_add) {
      result.termination = tolerance_met ? "tolerance_met"
                           : budget_spent
                               ? "budget_spent"
                               : out_of_iterations
                                     ? "max_iterations"
                                     : (config.mode == CampaignConfig::Mode::budget
                                            ? "budget_spent"
                                            : "stalled");
      result.alpha = state.alpha;
      result.weighted_var = state.weighted_var;
      result.error_estimate = state.error_estimate;
      result.cumulative_cost = state.cumulative_cost;
      result.cost_by_level = ledger_counts(records, num_levels).work_by_level;
      result.done = state.done;
      result.indicators = state.indicators;
      result.estimates = estimate_all_qois(records, num_levels, state.alpha);
      return result;
    }

    target = next_target;
    ++iteration;
  }
}

}  // namespace ofmlmc
