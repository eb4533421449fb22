#pragma once

#include <stdexcept>
#include <string>

namespace ofmlmc {

//! Invalid argument to a numerical routine (negative level, zero tolerance, ...).
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

//! Raised when a level has no usable samples for indicator estimation.
struct IndicatorError : std::runtime_error {
  int level;
  explicit IndicatorError(int lvl, const std::string& what)
      : std::runtime_error(what), level(lvl) {}
};

//! Budget too small to place at least one sample per level.
struct BudgetError : std::runtime_error {
  double minimum_feasible;
  BudgetError(double min_b, const std::string& what)
      : std::runtime_error(what), minimum_feasible(min_b) {}
};

//! Estimator cannot be formed (a difference level with zero valid samples).
struct EstimatorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! Random cloud generation failed (packing infeasible within retry budget).
struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! Campaign-level abort: an entire level produced no valid samples.
struct CampaignAbort : std::runtime_error {
  int level;
  explicit CampaignAbort(int lvl, const std::string& what)
      : std::runtime_error(what), level(lvl) {}
};

//! Configuration file problems; `key` names the offending entry.
struct ConfigError : std::runtime_error {
  std::string key;
  ConfigError(std::string k, const std::string& what)
      : std::runtime_error(what), key(std::move(k)) {}
};

//! Storage-layer failure (unreadable ledger, unwritable store, ...).
struct StoreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ofmlmc
