#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ofmlmc/controller.hpp"
#include "ofmlmc/errors.hpp"

namespace ofmlmc {

//! Flat sectioned key-value campaign configuration:
//!
//!   [campaign]
//!   id = demo
//!   seed = 42
//!   mode = tolerance        # or budget
//!   tolerance = 0.05        # or budget = <work units>
//!   ...
//!   [hierarchy]
//!   levels = 4
//!   base_work = 1.0
//!   work_rate = 4.0
//!   [model]
//!   name = synthetic
//!   <model parameters>
//!
//! '#' starts a comment. Unknown sections or keys are errors naming the key.
struct ConfigFile {
  std::map<std::string, std::map<std::string, std::string>> sections;

  bool has(const std::string& section, const std::string& key) const {
    const auto s = sections.find(section);
    return s != sections.end() && s->second.count(key) > 0;
  }

  std::string get(const std::string& section, const std::string& key) const {
    if (!has(section, key))
      throw ConfigError(section + "." + key, "missing required key " + section + "." + key);
    return sections.at(section).at(key);
  }

  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const {
    return has(section, key) ? sections.at(section).at(key) : fallback;
  }

  double get_double(const std::string& section, const std::string& key) const {
    const std::string raw = get(section, key);
    try {
      std::size_t used = 0;
      const double v = std::stod(raw, &used);
      if (used != raw.size()) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(section + "." + key,
                        "key " + section + "." + key + " is not a number: '" + raw + "'");
    }
  }

  double get_double_or(const std::string& section, const std::string& key,
                       double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
  }

  std::int64_t get_int(const std::string& section, const std::string& key) const {
    const std::string raw = get(section, key);
    try {
      std::size_t used = 0;
      const std::int64_t v = std::stoll(raw, &used);
      if (used != raw.size()) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(section + "." + key, "key " + section + "." + key +
                                                 " is not an integer: '" + raw + "'");
    }
  }

  bool get_bool_or(const std::string& section, const std::string& key,
                   bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string raw = get(section, key);
    if (raw == "on" || raw == "true" || raw == "1") return true;
    if (raw == "off" || raw == "false" || raw == "0") return false;
    throw ConfigError(section + "." + key,
                      "key " + section + "." + key + " must be on/off: '" + raw + "'");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

inline ConfigFile parse_config_text(const std::string& text) {
  ConfigFile cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno),
                          "malformed section header: " + line);
      section = detail::trim(line.substr(1, line.size() - 2));
      cfg.sections[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos || section.empty())
      throw ConfigError("line " + std::to_string(lineno),
                        "expected 'key = value' inside a section: " + line);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(lineno), "empty key: " + line);
    cfg.sections[section][key] = value;
  }
  return cfg;
}

inline ConfigFile load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

namespace detail {

inline void reject_unknown_keys(const ConfigFile& cfg, const std::string& section,
                                const std::set<std::string>& known) {
  const auto it = cfg.sections.find(section);
  if (it == cfg.sections.end()) return;
  for (const auto& [key, value] : it->second)
    if (!known.count(key))
      throw ConfigError(section + "." + key, "unknown key " + section + "." + key);
}

}  // namespace detail

//! Validate and assemble a campaign configuration. Model parameters are kept
//! as raw strings; the model factory interprets them.
inline CampaignConfig build_campaign_config(const ConfigFile& cfg) {
  for (const auto& [name, keys] : cfg.sections)
    if (name != "campaign" && name != "hierarchy" && name != "model")
      throw ConfigError(name, "unknown section [" + name + "]");
  detail::reject_unknown_keys(
      cfg, "campaign",
      {"id", "seed", "mode", "tolerance", "budget", "max_iterations",
       "kurtosis_inflation", "decay_fit", "coefficients", "qoi"});
  detail::reject_unknown_keys(cfg, "hierarchy",
                              {"levels", "base_work", "work_rate", "work"});

  CampaignConfig config;
  config.id = cfg.get_or("campaign", "id", "campaign");
  if (!cfg.has("campaign", "seed"))
    throw ConfigError("campaign.seed",
                      "campaign.seed is required (no wall-clock seeding)");
  config.seed = static_cast<std::uint64_t>(cfg.get_int("campaign", "seed"));

  const std::string mode = cfg.get("campaign", "mode");
  if (mode == "tolerance") {
    config.mode = CampaignConfig::Mode::tolerance;
    config.tolerance = cfg.get_double("campaign", "tolerance");
    if (cfg.has("campaign", "budget"))
      throw ConfigError("campaign.budget",
                        "campaign.budget conflicts with mode = tolerance");
  } else if (mode == "budget") {
    config.mode = CampaignConfig::Mode::budget;
    config.budget = cfg.get_double("campaign", "budget");
    if (cfg.has("campaign", "tolerance"))
      throw ConfigError("campaign.tolerance",
                        "campaign.tolerance conflicts with mode = budget");
  } else {
    throw ConfigError("campaign.mode",
                      "campaign.mode must be tolerance or budget, got '" + mode + "'");
  }

  config.max_iterations =
      static_cast<int>(cfg.has("campaign", "max_iterations")
                           ? cfg.get_int("campaign", "max_iterations")
                           : 10);
  config.kurtosis_inflation = cfg.get_double_or("campaign", "kurtosis_inflation", 0.0);
  config.decay_fit = cfg.get_bool_or("campaign", "decay_fit", true);
  const std::string coeffs = cfg.get_or("campaign", "coefficients", "optimal");
  if (coeffs == "unit")
    config.unit_coefficients = true;
  else if (coeffs != "optimal")
    throw ConfigError("campaign.coefficients",
                      "campaign.coefficients must be optimal or unit");

  const int levels = static_cast<int>(cfg.get_int("hierarchy", "levels"));
  if (levels < 1) throw ConfigError("hierarchy.levels", "hierarchy.levels must be >= 1");
  if (cfg.has("hierarchy", "work")) {
    // Explicit per-level costs: "work = 1, 16, 256, ...".
    LevelHierarchy h;
    std::stringstream ss(cfg.get("hierarchy", "work"));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        h.work_per_sample.push_back(std::stod(detail::trim(item)));
      } catch (const std::exception&) {
        throw ConfigError("hierarchy.work",
                          "hierarchy.work entry is not a number: '" + item + "'");
      }
      h.resolution.push_back(std::to_string(h.work_per_sample.size() - 1));
    }
    if (static_cast<int>(h.work_per_sample.size()) != levels)
      throw ConfigError("hierarchy.work", "hierarchy.work must list exactly " +
                                              std::to_string(levels) + " values");
    if (levels >= 2)
      h.work_growth_rate = std::log2(h.work_per_sample[1] / h.work_per_sample[0]);
    try {
      h.validate();
    } catch (const ArgumentError& e) {
      throw ConfigError("hierarchy.work", e.what());
    }
    config.hierarchy = h;
  } else {
    config.hierarchy = LevelHierarchy::geometric(
        levels, cfg.get_double_or("hierarchy", "base_work", 1.0),
        cfg.get_double_or("hierarchy", "work_rate", 4.0));
  }

  config.model_name = cfg.get("model", "name");
  if (config.model_name != "synthetic" && config.model_name != "cloud_surrogate")
    throw ConfigError("model.name", "unknown model '" + config.model_name +
                                        "' (available: synthetic, cloud_surrogate)");
  const auto model_section = cfg.sections.find("model");
  if (model_section != cfg.sections.end())
    for (const auto& [key, value] : model_section->second)
      if (key != "name") config.model_params[key] = value;
  config.qoi = cfg.get_or("campaign", "qoi",
                          config.model_name == "synthetic" ? "value" : "peak_pressure");

  config.validate();
  if (config.mode == CampaignConfig::Mode::budget) {
    double min_budget = 0.0;
    for (int l = 0; l < config.hierarchy.num_levels(); ++l)
      min_budget += config.hierarchy.pair_cost(l);
    if (config.budget < min_budget)
      throw BudgetError(min_budget,
                        "campaign.budget " + std::to_string(config.budget) +
                            " is below the one-sample-per-level minimum " +
                            std::to_string(min_budget));
  }
  return config;
}

}  // namespace ofmlmc
