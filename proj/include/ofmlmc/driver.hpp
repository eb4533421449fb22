#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ofmlmc/config.hpp"
#include "ofmlmc/controller.hpp"
#include "ofmlmc/report.hpp"
#include "ofmlmc/statistics.hpp"
#include "ofmlmc/store.hpp"
#include "ofmlmc/surrogate.hpp"
#include "ofmlmc/synthetic.hpp"

namespace ofmlmc {

namespace detail {

inline double param_double(const std::map<std::string, std::string>& params,
                           const std::string& key, double fallback) {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("model." + key,
                      "model." + key + " is not a number: '" + it->second + "'");
  }
}

inline void reject_unknown_params(const std::map<std::string, std::string>& params,
                                  const std::set<std::string>& known) {
  for (const auto& [key, value] : params)
    if (!known.count(key))
      throw ConfigError("model." + key, "unknown key model." + key);
}

}  // namespace detail

//! Instantiate the configured model. "synthetic" is the analytic verification
//! hierarchy; "cloud_surrogate" the interacting-bubble collapse model.
inline std::unique_ptr<Model> build_model(const CampaignConfig& config) {
  const auto& p = config.model_params;
  if (config.model_name == "synthetic") {
    detail::reject_unknown_params(
        p, {"decay_rate", "amplitude", "base_work", "work_rate", "levels"});
    SyntheticModel::Params sp;
    sp.decay_rate = detail::param_double(p, "decay_rate", 1.0);
    sp.amplitude = detail::param_double(p, "amplitude", 1.0);
    sp.base_work = detail::param_double(p, "base_work",
                                        config.hierarchy.work_per_sample[0]);
    sp.work_rate =
        detail::param_double(p, "work_rate", config.hierarchy.work_growth_rate);
    sp.levels = static_cast<int>(detail::param_double(
        p, "levels", static_cast<double>(config.hierarchy.num_levels())));
    return std::make_unique<SyntheticModel>(sp);
  }
  if (config.model_name == "cloud_surrogate") {
    detail::reject_unknown_params(
        p, {"bubbles", "cloud_radius", "center_x", "center_y", "center_z", "r_min",
            "r_max", "lognormal_mu", "lognormal_sigma", "liquid_density",
            "gas_pressure", "ambient_pressure", "polytropic_gamma", "dt0", "t_end",
            "output_points", "levels", "work_scale"});
    SurrogateModel::Params sp;
    sp.cloud.count = static_cast<int>(detail::param_double(p, "bubbles", 500.0));
    sp.cloud.cloud_radius = detail::param_double(p, "cloud_radius", 20.0);
    sp.cloud.center = {detail::param_double(p, "center_x", 50.0),
                       detail::param_double(p, "center_y", 50.0),
                       detail::param_double(p, "center_z", 50.0)};
    sp.cloud.r_min = detail::param_double(p, "r_min", 0.8);
    sp.cloud.r_max = detail::param_double(p, "r_max", 1.2);
    sp.cloud.lognormal_mu = detail::param_double(p, "lognormal_mu", 0.0);
    sp.cloud.lognormal_sigma = detail::param_double(p, "lognormal_sigma", 0.1);
    sp.liquid_density = detail::param_double(p, "liquid_density", 1000.0);
    sp.gas_pressure = detail::param_double(p, "gas_pressure", 0.5e6);
    sp.ambient_pressure = detail::param_double(p, "ambient_pressure", 10.0e6);
    sp.polytropic_gamma = detail::param_double(p, "polytropic_gamma", 1.4);
    sp.dt0 = detail::param_double(p, "dt0", 5.0e-9);
    sp.t_end = detail::param_double(p, "t_end", 7.0e-5);
    sp.output_points = static_cast<int>(detail::param_double(p, "output_points", 257.0));
    sp.levels = static_cast<int>(detail::param_double(
        p, "levels", static_cast<double>(config.hierarchy.num_levels())));
    sp.work_scale = detail::param_double(p, "work_scale", 1e-6);
    return std::make_unique<SurrogateModel>(sp);
  }
  throw ConfigError("model.name", "unknown model '" + config.model_name +
                                      "' (available: synthetic, cloud_surrogate)");
}

//! Store root resolution: explicit flag, then OFMLMC_STORE, then ./ofmlmc_store.
inline std::filesystem::path resolve_store_root(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("OFMLMC_STORE"); env && *env) return env;
  return "ofmlmc_store";
}

//! Final campaign state rebuilt from the ledger alone (no model execution).
inline CampaignResult reconstruct_result(const CampaignConfig& config,
                                         const CampaignStore& store) {
  const auto records = store.records();
  const auto iterations = store.iterations();
  const int num_levels = config.hierarchy.num_levels();
  const int iteration = std::max(0, static_cast<int>(iterations.size()) - 1);

  CampaignResult result;
  IterationState state = evaluate_state(config, records, iteration);
  result.alpha = state.alpha;
  result.weighted_var = state.weighted_var;
  result.error_estimate = state.error_estimate;
  result.cumulative_cost = state.cumulative_cost;
  result.cost_by_level = ledger_counts(records, num_levels).work_by_level;
  result.done = state.done;
  result.indicators = state.indicators;
  result.estimates = estimate_all_qois(records, num_levels, state.alpha);

  const bool tolerance_met = config.mode == CampaignConfig::Mode::tolerance &&
                             state.error_estimate <= config.tolerance;
  const bool budget_spent = config.mode == CampaignConfig::Mode::budget &&
                            state.cumulative_cost >= config.budget * (1.0 - 1e-12);
  if (tolerance_met)
    result.termination = "tolerance_met";
  else if (budget_spent)
    result.termination = "budget_spent";
  else if (static_cast<int>(iterations.size()) >= config.max_iterations)
    result.termination = "max_iterations";
  else {
    // Mirror the controller's nothing-to-add check.
    const AllocationTarget goal =
        config.mode == CampaignConfig::Mode::tolerance
            ? AllocationTarget::tolerance(config.tolerance)
            : AllocationTarget::budget(config.budget);
    const Allocation alloc = reoptimize_with_floor(
        state.done, state.weighted_var, state.indicators.pair_costs(), goal);
    bool nothing_to_add = true;
    for (int l = 0; l < num_levels; ++l)
      if (alloc.samples[l] > state.done[l]) nothing_to_add = false;
    result.termination =
        nothing_to_add
            ? (config.mode == CampaignConfig::Mode::budget ? "budget_spent" : "stalled")
            : "in_progress";
  }
  return result;
}

inline bool campaign_complete(const CampaignResult& result) {
  return result.termination != "in_progress";
}

namespace detail {

inline std::string format_csv_row(const std::vector<double>& values) {
  std::string row;
  char buf[64];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
    if (i) row += ',';
    row += buf;
  }
  row += '\n';
  return row;
}

//! Scalar QoI names and series names available in the done records.
inline void available_names(const std::vector<SampleRecord>& records,
                            std::set<std::string>& scalars,
                            std::set<std::string>& series) {
  for (const auto& r : records) {
    if (r.status != SampleStatus::done) continue;
    for (const auto& [name, v] : r.fine.qoi) scalars.insert(name);
    for (const auto& [name, ts] : r.fine.series) series.insert(name);
  }
}

//! Done records sorted by key, full payloads rehydrated from sandboxes when
//! the in-memory copies lack series data.
inline std::vector<SampleRecord> full_done_records(CampaignStore& store) {
  auto records = store.records();
  std::sort(records.begin(), records.end(),
            [](const SampleRecord& a, const SampleRecord& b) { return a.key < b.key; });
  std::vector<SampleRecord> done;
  auto* disk = dynamic_cast<DiskStore*>(&store);
  for (auto& r : records) {
    if (r.status != SampleStatus::done) continue;
    if (r.fine.series.empty() && disk) {
      if (auto full = disk->load_full_record(r.key)) {
        full->work = r.work;
        full->wall_seconds = r.wall_seconds;
        done.push_back(std::move(*full));
        continue;
      }
    }
    done.push_back(r);
  }
  return done;
}

}  // namespace detail

//! Statistics products regenerated from the ledger: confidence bands, PDFs,
//! joint PDFs, correlation tables, the comparison table, cloud CSV exports.
//! `products` is a comma-free token list; `qois` selects the quantities.
inline void write_products(CampaignStore& store, const CampaignConfig& config,
                           const CampaignResult& result,
                           const std::vector<std::string>& products,
                           const std::vector<std::string>& qois, std::ostream& out) {
  const auto records = detail::full_done_records(store);
  const int num_levels = config.hierarchy.num_levels();
  std::set<std::string> scalar_names, series_names;
  detail::available_names(records, scalar_names, series_names);

  auto scalar_levels = [&](const std::string& name) {
    std::vector<ScalarPairLevel> levels(num_levels);
    for (int l = 0; l < num_levels; ++l) levels[l].level = l;
    for (const auto& r : records) {
      if (r.key.level < 0 || r.key.level >= num_levels) continue;
      levels[r.key.level].fine.push_back(r.fine.value(name));
      if (r.has_coarse) levels[r.key.level].coarse.push_back(r.coarse.value(name));
    }
    return levels;
  };

  auto finest_scalar_column = [&](const std::string& name) {
    // Finest level with at least two done samples.
    std::vector<std::vector<double>> per_level(num_levels);
    for (const auto& r : records)
      per_level[r.key.level].push_back(r.fine.value(name));
    for (int l = num_levels - 1; l >= 0; --l)
      if (per_level[l].size() >= 2) return std::pair<int, std::vector<double>>{l, per_level[l]};
    throw ArgumentError("products: no level has two or more samples");
  };

  auto require_scalar = [&](const std::string& name) {
    if (!scalar_names.count(name)) {
      std::string list;
      for (const auto& n : scalar_names) list += (list.empty() ? "" : ", ") + n;
      throw ArgumentError("unknown QoI '" + name + "' (available: " + list + ")");
    }
  };

  for (const std::string& product : products) {
    if (product == "report") continue;  // report.json is always rebuilt
    if (product == "speedup") {
      const SpeedupTable table = speedup_table(result);
      store.write_product("compare.json", to_json(table).dump(2) + "\n");
      store.write_product("compare.txt", format_speedup_table(table));
      out << "wrote compare.json, compare.txt\n";
    } else if (product == "pdf") {
      for (const std::string& name : qois) {
        require_scalar(name);
        const auto levels = scalar_levels(name);
        double lo = 0.0, hi = 0.0;
        bool first = true;
        for (const auto& lv : levels)
          for (double v : lv.fine) {
            lo = first ? v : std::min(lo, v);
            hi = first ? v : std::max(hi, v);
            first = false;
          }
        const double pad = (hi > lo ? hi - lo : std::max(1.0, std::fabs(hi))) * 0.2;
        std::vector<double> grid(201);
        for (int g = 0; g < 201; ++g)
          grid[g] = lo - pad + (hi - lo + 2 * pad) * g / 200.0;
        const DensityEstimate pdf = multilevel_density(levels, result.alpha, grid);
        std::string csv = "value,density\n";
        for (std::size_t g = 0; g < grid.size(); ++g)
          csv += detail::format_csv_row({grid[g], pdf.density[g]});
        store.write_product("pdf_" + name + ".csv", csv);
        json meta{{"qoi", name},
                  {"bandwidths", pdf.bandwidths},
                  {"clamped_mass", pdf.clamped_mass},
                  {"bandwidth_fallback", pdf.bandwidth_fallback},
                  {"samples", result.done},
                  {"combination",
                   "telescoping level corrections, clamped at zero and renormalized"}};
        store.write_product("pdf_" + name + ".meta.json", meta.dump(2) + "\n");
        out << "wrote pdf_" << name << ".csv\n";
      }
    } else if (product == "bands") {
      for (const std::string& name : qois) {
        if (!series_names.count(name)) {
          std::string list;
          for (const auto& n : series_names) list += (list.empty() ? "" : ", ") + n;
          throw ArgumentError("unknown series QoI '" + name +
                              "' (available: " + list + ")");
        }
        std::vector<SeriesPairLevel> levels(num_levels);
        TimeSeries grid_ref;
        for (int l = 0; l < num_levels; ++l) levels[l].level = l;
        for (const auto& r : records) {
          const auto it = r.fine.series.find(name);
          if (it == r.fine.series.end()) continue;
          grid_ref = it->second;
          levels[r.key.level].fine.push_back(it->second.values);
          if (r.has_coarse)
            levels[r.key.level].coarse.push_back(r.coarse.series.at(name).values);
        }
        const ConfidenceBands bands = confidence_bands(levels, result.alpha);
        std::string csv = "t,mean,median,p5,p25,p75,p95\n";
        for (std::size_t t = 0; t < bands.mean.size(); ++t)
          csv += detail::format_csv_row({grid_ref.time_at(t), bands.mean[t],
                                         bands.median[t], bands.p5[t], bands.p25[t],
                                         bands.p75[t], bands.p95[t]});
        store.write_product("bands_" + name + ".csv", csv);
        json meta{{"qoi", name},
                  {"percentile_level", bands.percentile_level},
                  {"percentile_samples", levels[bands.percentile_level].fine.size()},
                  {"alpha", result.alpha.alpha},
                  {"bands", {"50% (p25..p75)", "90% (p5..p95)"}},
                  {"mean", "telescoping multi-level estimate per time point"}};
        store.write_product("bands_" + name + ".meta.json", meta.dump(2) + "\n");
        out << "wrote bands_" << name << ".csv\n";
      }
    } else if (product == "correlations") {
      std::vector<std::string> names(scalar_names.begin(), scalar_names.end());
      std::vector<std::vector<double>> columns;
      int level_used = num_levels - 1;
      for (const auto& name : names) {
        auto [lvl, col] = finest_scalar_column(name);
        level_used = lvl;
        columns.push_back(std::move(col));
      }
      const CorrelationMatrix m = correlation_matrix(names, columns);
      std::string csv = "variable";
      for (const auto& n : names) csv += "," + n;
      csv += '\n';
      for (std::size_t i = 0; i < names.size(); ++i) {
        csv += names[i];
        for (std::size_t j = 0; j < names.size(); ++j) {
          char buf[48];
          if (m.is_missing(i, j))
            std::snprintf(buf, sizeof(buf), ",");
          else
            std::snprintf(buf, sizeof(buf), ",%.6g", m.at(i, j));
          csv += buf;
        }
        csv += '\n';
      }
      store.write_product("correlations.csv", csv);
      // Magnitude/sign table for external Hinton-diagram rendering.
      json cells = json::array();
      for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t j = 0; j < names.size(); ++j) {
          if (m.is_missing(i, j)) continue;
          cells.push_back({{"row", names[i]},
                           {"col", names[j]},
                           {"value", m.at(i, j)},
                           {"magnitude", std::fabs(m.at(i, j))},
                           {"sign", m.at(i, j) >= 0.0 ? 1 : -1}});
        }
      json meta{{"variables", names}, {"level", level_used}, {"cells", cells}};
      store.write_product("correlations.json", meta.dump(2) + "\n");
      out << "wrote correlations.csv, correlations.json\n";
    } else if (product == "joint") {
      if (qois.size() < 2)
        throw ArgumentError("joint product needs two QoI names (--qoi a,b)");
      require_scalar(qois[0]);
      require_scalar(qois[1]);
      auto [lx, xs] = finest_scalar_column(qois[0]);
      auto [ly, ys] = finest_scalar_column(qois[1]);
      if (lx != ly || xs.size() != ys.size())
        throw ArgumentError("joint product: QoIs live on different sample sets");
      auto make_grid = [](const std::vector<double>& v) {
        double lo = v[0], hi = v[0];
        for (double x : v) {
          lo = std::min(lo, x);
          hi = std::max(hi, x);
        }
        const double pad = (hi > lo ? hi - lo : std::max(1.0, std::fabs(hi))) * 0.2;
        std::vector<double> grid(65);
        for (int g = 0; g < 65; ++g)
          grid[g] = lo - pad + (hi - lo + 2 * pad) * g / 64.0;
        return grid;
      };
      const Density2D joint = kde_2d(xs, ys, make_grid(xs), make_grid(ys));
      std::string csv = qois[0] + "," + qois[1] + ",density\n";
      for (std::size_t i = 0; i < joint.grid_x.size(); ++i)
        for (std::size_t j = 0; j < joint.grid_y.size(); ++j)
          csv += detail::format_csv_row({joint.grid_x[i], joint.grid_y[j], joint.at(i, j)});
      const std::string base = "joint_" + qois[0] + "_" + qois[1];
      store.write_product(base + ".csv", csv);
      json meta{{"x", qois[0]},
                {"y", qois[1]},
                {"bandwidth_x", joint.bandwidth_x},
                {"bandwidth_y", joint.bandwidth_y},
                {"level", lx},
                {"samples", xs.size()}};
      store.write_product(base + ".meta.json", meta.dump(2) + "\n");
      out << "wrote " << base << ".csv\n";
    } else if (product == "cloud") {
      int exported = 0;
      for (const auto& r : records) {
        if (r.key.level != num_levels - 1 || r.fine.cloud.empty()) continue;
        std::string csv = "x,y,z,r\n";
        for (const auto& row : r.fine.cloud)
          csv += detail::format_csv_row({row[0], row[1], row[2], row[3]});
        char name[64];
        std::snprintf(name, sizeof(name), "cloud_l%d_i%08lld.csv", r.key.level,
                      static_cast<long long>(r.key.index));
        store.write_product(name, csv);
        ++exported;
      }
      out << "wrote " << exported << " cloud CSV files\n";
    } else {
      throw ArgumentError("unknown product '" + product +
                          "' (available: report, bands, pdf, correlations, joint, "
                          "speedup, cloud)");
    }
  }
}

//! `run <config>`: execute a fresh campaign, write ledger and report.
inline int cmd_run(const std::string& config_path, const std::string& store_flag,
                   int workers, std::ostream& out, std::ostream& err) {
  try {
    const ConfigFile file = load_config_file(config_path);
    const CampaignConfig config = build_campaign_config(file);
    const auto model = build_model(config);
    const auto root = resolve_store_root(store_flag);
    DiskStore store = DiskStore::create(root, config.id);
    std::ifstream raw(config_path);
    std::stringstream ss;
    ss << raw.rdbuf();
    store.write_config(ss.str());

    const auto t0 = std::chrono::steady_clock::now();
    const CampaignResult result = run_campaign(config, store, *model, workers, &out);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    store.write_report(build_report(store.config_text(), store.iterations(), result,
                                    wall, store.product_index()));
    out << "campaign '" << config.id << "' finished: " << result.termination
        << ", eps = " << result.error_estimate
        << ", cost = " << result.cumulative_cost << "\n";
    return 0;
  } catch (const CampaignAbort& e) {
    err << "abort: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

//! `resume <id>`: continue a persisted campaign without recomputing done
//! samples; a completed campaign is a no-op.
inline int cmd_resume(const std::string& id, const std::string& store_flag,
                      int workers, std::ostream& out, std::ostream& err) {
  try {
    const auto root = resolve_store_root(store_flag);
    DiskStore store = DiskStore::open(root, id);
    const CampaignConfig config =
        build_campaign_config(parse_config_text(store.config_text()));

    const CampaignResult current = reconstruct_result(config, store);
    if (campaign_complete(current)) {
      store.write_report(build_report(store.config_text(), store.iterations(), current,
                                      0.0, store.product_index()));
      out << "campaign '" << id << "' already complete (" << current.termination
          << "); nothing to do\n";
      return 0;
    }

    const auto model = build_model(config);
    const auto t0 = std::chrono::steady_clock::now();
    const CampaignResult result = run_campaign(config, store, *model, workers, &out);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    store.write_report(build_report(store.config_text(), store.iterations(), result,
                                    wall, store.product_index()));
    out << "campaign '" << id << "' resumed and finished: " << result.termination
        << ", eps = " << result.error_estimate << "\n";
    return 0;
  } catch (const CampaignAbort& e) {
    err << "abort: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

//! `report <id>`: rebuild the report and requested products from the ledger,
//! with zero model executions.
inline int cmd_report(const std::string& id, const std::string& store_flag,
                      const std::vector<std::string>& qois,
                      const std::vector<std::string>& products, std::ostream& out,
                      std::ostream& err) {
  try {
    const auto root = resolve_store_root(store_flag);
    DiskStore store = DiskStore::open(root, id);
    const CampaignConfig config =
        build_campaign_config(parse_config_text(store.config_text()));
    const CampaignResult result = reconstruct_result(config, store);
    std::vector<std::string> qoi_list = qois;
    if (qoi_list.empty()) qoi_list.push_back(config.qoi);
    write_products(store, config, result, products, qoi_list, out);
    store.write_report(build_report(store.config_text(), store.iterations(), result,
                                    0.0, store.product_index()));
    out << "rebuilt report for campaign '" << id << "' (" << result.termination
        << ")\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

//! `compare <id>`: print the method comparison table.
inline int cmd_compare(const std::string& id, const std::string& store_flag,
                       std::ostream& out, std::ostream& err) {
  try {
    const auto root = resolve_store_root(store_flag);
    DiskStore store = DiskStore::open(root, id);
    const CampaignConfig config =
        build_campaign_config(parse_config_text(store.config_text()));
    const CampaignResult result = reconstruct_result(config, store);
    const SpeedupTable table = speedup_table(result);
    out << format_speedup_table(table);
    store.write_product("compare.json", to_json(table).dump(2) + "\n");
    store.write_product("compare.txt", format_speedup_table(table));
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ofmlmc
