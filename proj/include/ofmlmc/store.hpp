#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ofmlmc/errors.hpp"
#include "ofmlmc/model.hpp"

namespace ofmlmc {

using json = nlohmann::json;

struct SampleKey {
  int level = 0;
  std::int64_t index = 0;

  bool operator==(const SampleKey&) const = default;
  bool operator<(const SampleKey& o) const {
    return level != o.level ? level < o.level : index < o.index;
  }
};

enum class SampleStatus { done, failed };

//! One ledger entry: key, outcome, QoI payloads, work, failure reason.
struct SampleRecord {
  SampleKey key;
  SampleStatus status = SampleStatus::done;
  ModelSample fine;
  ModelSample coarse;
  bool has_coarse = false;
  double work = 0.0;          // model-reported work units (fine + coarse)
  double wall_seconds = 0.0;  // timing only; never feeds estimators
  std::string failure;
  std::string sandbox;
};

inline json to_json(const TimeSeries& ts) {
  return json{{"t0", ts.t0}, {"dt", ts.dt}, {"values", ts.values}};
}

inline TimeSeries time_series_from_json(const json& j) {
  TimeSeries ts;
  ts.t0 = j.at("t0").get<double>();
  ts.dt = j.at("dt").get<double>();
  ts.values = j.at("values").get<std::vector<double>>();
  return ts;
}

inline json to_json(const ModelSample& s, bool include_series) {
  json j;
  j["qoi"] = s.qoi;
  j["work"] = s.work;
  j["valid"] = s.valid;
  if (include_series) {
    json series = json::object();
    for (const auto& [name, ts] : s.series) series[name] = to_json(ts);
    j["series"] = series;
    if (!s.cloud.empty()) {
      json rows = json::array();
      for (const auto& row : s.cloud) rows.push_back({row[0], row[1], row[2], row[3]});
      j["cloud"] = rows;
    }
  }
  return j;
}

inline ModelSample model_sample_from_json(const json& j) {
  ModelSample s;
  s.qoi = j.at("qoi").get<std::map<std::string, double>>();
  s.work = j.at("work").get<double>();
  s.valid = j.at("valid").get<bool>();
  if (j.contains("series"))
    for (const auto& [name, ts] : j.at("series").items())
      s.series[name] = time_series_from_json(ts);
  if (j.contains("cloud"))
    for (const auto& row : j.at("cloud"))
      s.cloud.push_back({row[0].get<double>(), row[1].get<double>(),
                         row[2].get<double>(), row[3].get<double>()});
  return s;
}

//! Campaign persistence interface. Ledger mutation is serialized through the
//! owning store; sample payload queries are read-only and thread-safe after
//! execution completes.
class CampaignStore {
 public:
  virtual ~CampaignStore() = default;

  virtual std::string id() const = 0;

  //! Record that execution of a key started (in-flight marker).
  virtual void begin_sample(const SampleKey& key) = 0;
  //! Record the outcome of a key; exactly once per begun key.
  virtual void finish_sample(const SampleRecord& record) = 0;
  //! Absolute sandbox directory for a key; empty when the store is memory-only.
  virtual std::string sandbox_dir(const SampleKey& key) = 0;

  virtual void append_iteration(const json& state) = 0;
  //! Persist the sampling targets planned for the upcoming iteration, before
  //! execution starts, so an interrupted campaign resumes the same plan.
  virtual void append_plan(const std::vector<std::int64_t>& target) = 0;
  virtual std::optional<std::vector<std::int64_t>> last_plan() const = 0;

  virtual std::vector<SampleRecord> records() const = 0;
  virtual std::vector<json> iterations() const = 0;
  //! Highest began index + 1 per level (size >= num_levels).
  virtual std::vector<std::int64_t> next_index(int num_levels) const = 0;

  virtual void write_config(const std::string& text) = 0;
  virtual std::string config_text() const = 0;
  virtual void write_report(const json& report) = 0;
  virtual std::optional<json> read_report() const = 0;
  //! Persist a statistics product (CSV/JSON text) under the report directory.
  virtual void write_product(const std::string& filename, const std::string& content) = 0;
  //! Sorted filenames of the statistics products currently present.
  virtual std::vector<std::string> product_index() const = 0;
};

//! In-memory store for verification campaigns; no filesystem traffic.
class MemoryStore : public CampaignStore {
 public:
  explicit MemoryStore(std::string id = "memory") : id_(std::move(id)) {}

  std::string id() const override { return id_; }

  void begin_sample(const SampleKey& key) override {
    std::lock_guard lock(mutex_);
    began_.push_back(key);
  }

  void finish_sample(const SampleRecord& record) override {
    std::lock_guard lock(mutex_);
    records_.push_back(record);
  }

  std::string sandbox_dir(const SampleKey&) override { return {}; }

  void append_iteration(const json& state) override {
    std::lock_guard lock(mutex_);
    iterations_.push_back(state);
  }

  void append_plan(const std::vector<std::int64_t>& target) override {
    std::lock_guard lock(mutex_);
    plan_ = target;
  }

  std::optional<std::vector<std::int64_t>> last_plan() const override {
    std::lock_guard lock(mutex_);
    return plan_;
  }

  std::vector<SampleRecord> records() const override {
    std::lock_guard lock(mutex_);
    return records_;
  }

  std::vector<json> iterations() const override {
    std::lock_guard lock(mutex_);
    return iterations_;
  }

  std::vector<std::int64_t> next_index(int num_levels) const override {
    std::lock_guard lock(mutex_);
    std::vector<std::int64_t> next(num_levels, 0);
    for (const auto& k : began_)
      if (k.level < num_levels)
        next[k.level] = std::max(next[k.level], k.index + 1);
    return next;
  }

  void write_config(const std::string& text) override { config_ = text; }
  std::string config_text() const override { return config_; }
  void write_report(const json& report) override { report_ = report; }
  std::optional<json> read_report() const override { return report_; }
  void write_product(const std::string& filename, const std::string& content) override {
    std::lock_guard lock(mutex_);
    products_[filename] = content;
  }

  std::vector<std::string> product_index() const override {
    std::lock_guard lock(mutex_);
    std::vector<std::string> names;
    for (const auto& [name, content] : products_) names.push_back(name);
    return names;
  }

  const std::map<std::string, std::string>& products() const { return products_; }

 private:
  std::string id_;
  mutable std::mutex mutex_;
  std::vector<SampleKey> began_;
  std::vector<SampleRecord> records_;
  std::vector<json> iterations_;
  std::optional<std::vector<std::int64_t>> plan_;
  std::string config_;
  std::optional<json> report_;
  std::map<std::string, std::string> products_;
};

//! Disk-backed store: one directory per campaign, one sandbox directory per
//! sample, one append-only ledger file.
//!
//! Layout under <root>/<campaign-id>/:
//!   config.cfg            verbatim campaign configuration
//!   ledger.jsonl          magic header, then one JSON record per line
//!   samples/l<l>_i<idx>/  sandbox: input.json, output.json, log.txt
//!   report/               report.json and statistics products
//!
//! Ledger events: {"event":"begin",...} marks execution start;
//! {"event":"sample",...} carries the outcome with scalar payloads;
//! {"event":"iteration",...} records controller state. Full payloads
//! (time series, cloud tables) live in the sandboxes. On restore, begun keys
//! without a parseable result line are downgraded to failed entries: they are
//! never re-executed, the next allocation simply tops counts up with fresh
//! indices.
class DiskStore : public CampaignStore {
 public:
  static constexpr const char* kMagic = "{\"ofmlmc_ledger\":1}";

  //! Create a fresh campaign directory. Fails if it already exists.
  static DiskStore create(const std::filesystem::path& root, const std::string& id) {
    const auto dir = root / id;
    if (std::filesystem::exists(dir / "ledger.jsonl"))
      throw StoreError("campaign '" + id + "' already exists at " + dir.string() +
                       " (use resume)");
    std::filesystem::create_directories(dir / "samples");
    std::filesystem::create_directories(dir / "report");
    DiskStore store(dir, id);
    store.ledger_out() << kMagic << std::endl;
    return store;
  }

  //! Open an existing campaign and replay its ledger.
  static DiskStore open(const std::filesystem::path& root, const std::string& id) {
    const auto dir = root / id;
    if (!std::filesystem::exists(dir / "ledger.jsonl"))
      throw StoreError("campaign '" + id + "' not found at " + dir.string());
    DiskStore store(dir, id);
    store.replay();
    return store;
  }

  DiskStore(DiskStore&&) = default;

  std::string id() const override { return id_; }
  const std::filesystem::path& dir() const { return dir_; }

  void begin_sample(const SampleKey& key) override {
    std::lock_guard lock(*mutex_);
    began_.push_back(key);
    json j{{"event", "begin"}, {"level", key.level}, {"index", key.index}};
    ledger_out() << j.dump() << std::endl;
    const auto sandbox = sandbox_path(key);
    std::filesystem::create_directories(sandbox);
    std::ofstream input(sandbox / "input.json");
    input << json{{"level", key.level}, {"index", key.index}}.dump(2) << "\n";
  }

  void finish_sample(const SampleRecord& record) override {
    std::lock_guard lock(*mutex_);
    records_.push_back(record);
    json j{{"event", "sample"},
           {"level", record.key.level},
           {"index", record.key.index},
           {"status", record.status == SampleStatus::done ? "done" : "failed"},
           {"work", record.work},
           {"wall", record.wall_seconds},
           {"failure", record.failure},
           {"fine", to_json(record.fine, false)}};
    if (record.has_coarse) j["coarse"] = to_json(record.coarse, false);
    ledger_out() << j.dump() << std::endl;

    const auto sandbox = sandbox_path(record.key);
    std::filesystem::create_directories(sandbox);
    json payload{{"status", record.status == SampleStatus::done ? "done" : "failed"},
                 {"fine", to_json(record.fine, true)}};
    if (record.has_coarse) payload["coarse"] = to_json(record.coarse, true);
    std::ofstream out(sandbox / "output.json");
    out << payload.dump(2) << "\n";
    if (!record.failure.empty()) {
      std::ofstream log(sandbox / "log.txt", std::ios::app);
      log << "sample failed: " << record.failure << "\n";
    }
  }

  std::string sandbox_dir(const SampleKey& key) override {
    return sandbox_path(key).string();
  }

  void append_iteration(const json& state) override {
    std::lock_guard lock(*mutex_);
    iterations_.push_back(state);
    json j{{"event", "iteration"}, {"state", state}};
    ledger_out() << j.dump() << std::endl;
  }

  void append_plan(const std::vector<std::int64_t>& target) override {
    std::lock_guard lock(*mutex_);
    plan_ = target;
    json j{{"event", "plan"}, {"target", target}};
    ledger_out() << j.dump() << std::endl;
  }

  std::optional<std::vector<std::int64_t>> last_plan() const override {
    std::lock_guard lock(*mutex_);
    return plan_;
  }

  std::vector<SampleRecord> records() const override {
    std::lock_guard lock(*mutex_);
    return records_;
  }

  std::vector<json> iterations() const override {
    std::lock_guard lock(*mutex_);
    return iterations_;
  }

  std::vector<std::int64_t> next_index(int num_levels) const override {
    std::lock_guard lock(*mutex_);
    std::vector<std::int64_t> next(num_levels, 0);
    for (const auto& k : began_)
      if (k.level < num_levels)
        next[k.level] = std::max(next[k.level], k.index + 1);
    return next;
  }

  void write_config(const std::string& text) override {
    std::ofstream out(dir_ / "config.cfg");
    out << text;
  }

  std::string config_text() const override {
    std::ifstream in(dir_ / "config.cfg");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void write_report(const json& report) override {
    std::ofstream out(dir_ / "report" / "report.json");
    out << report.dump(2) << "\n";
  }

  std::optional<json> read_report() const override {
    std::ifstream in(dir_ / "report" / "report.json");
    if (!in) return std::nullopt;
    json j;
    in >> j;
    return j;
  }

  void write_product(const std::string& filename, const std::string& content) override {
    std::ofstream out(dir_ / "report" / filename);
    out << content;
  }

  std::vector<std::string> product_index() const override {
    std::vector<std::string> names;
    const auto report_dir = dir_ / "report";
    if (std::filesystem::exists(report_dir))
      for (const auto& entry : std::filesystem::directory_iterator(report_dir)) {
        const std::string name = entry.path().filename().string();
        if (name != "report.json") names.push_back(name);
      }
    std::sort(names.begin(), names.end());
    return names;
  }

  //! Rehydrate full payloads (series, cloud tables) from a sandbox.
  std::optional<SampleRecord> load_full_record(const SampleKey& key) const {
    std::ifstream in(sandbox_path(key) / "output.json");
    if (!in) return std::nullopt;
    json j;
    try {
      in >> j;
    } catch (const json::exception&) {
      return std::nullopt;
    }
    SampleRecord r;
    r.key = key;
    r.status = j.at("status") == "done" ? SampleStatus::done : SampleStatus::failed;
    r.fine = model_sample_from_json(j.at("fine"));
    if (j.contains("coarse")) {
      r.coarse = model_sample_from_json(j.at("coarse"));
      r.has_coarse = true;
    }
    return r;
  }

  int corrupt_records() const { return corrupt_; }

 private:
  DiskStore(std::filesystem::path dir, std::string id)
      : dir_(std::move(dir)), id_(std::move(id)) {}

  std::filesystem::path sandbox_path(const SampleKey& key) const {
    char name[64];
    std::snprintf(name, sizeof(name), "l%d_i%08lld", key.level,
                  static_cast<long long>(key.index));
    return dir_ / "samples" / name;
  }

  std::ofstream& ledger_out() {
    if (!ledger_.is_open())
      ledger_.open(dir_ / "ledger.jsonl", std::ios::app);
    if (!ledger_) throw StoreError("cannot write ledger at " + dir_.string());
    return ledger_;
  }

  void replay() {
    std::ifstream in(dir_ / "ledger.jsonl");
    if (!in) throw StoreError("cannot read ledger at " + dir_.string());
    std::string line;
    bool first = true;
    std::map<SampleKey, bool> finished;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (first) {
        first = false;
        if (line != kMagic)
          throw StoreError("ledger magic header mismatch in campaign '" + id_ + "'");
        continue;
      }
      json j;
      try {
        j = json::parse(line);
        const std::string event = j.at("event").get<std::string>();
        if (event == "begin") {
          began_.push_back({j.at("level").get<int>(), j.at("index").get<std::int64_t>()});
        } else if (event == "sample") {
          SampleRecord r;
          r.key = {j.at("level").get<int>(), j.at("index").get<std::int64_t>()};
          r.status = j.at("status") == "done" ? SampleStatus::done : SampleStatus::failed;
          r.work = j.at("work").get<double>();
          r.wall_seconds = j.at("wall").get<double>();
          r.failure = j.at("failure").get<std::string>();
          r.fine = model_sample_from_json(j.at("fine"));
          if (j.contains("coarse")) {
            r.coarse = model_sample_from_json(j.at("coarse"));
            r.has_coarse = true;
          }
          records_.push_back(r);
          finished[r.key] = true;
        } else if (event == "iteration") {
          iterations_.push_back(j.at("state"));
        } else if (event == "plan") {
          plan_ = j.at("target").get<std::vector<std::int64_t>>();
        }
      } catch (const json::exception&) {
        ++corrupt_;  // truncated or damaged line; resolved below
        continue;
      }
    }
    // Begun keys without a parseable outcome are downgraded to failed.
    for (const auto& key : began_) {
      if (finished.count(key)) continue;
      SampleRecord r;
      r.key = key;
      r.status = SampleStatus::failed;
      r.failure = "incomplete or corrupt record";
      records_.push_back(r);
      finished[key] = true;
    }
  }

  std::filesystem::path dir_;
  std::string id_;
  mutable std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
  std::ofstream ledger_;
  std::vector<SampleKey> began_;
  std::vector<SampleRecord> records_;
  std::vector<json> iterations_;
  std::optional<std::vector<std::int64_t>> plan_;
  int corrupt_ = 0;
};

}  // namespace ofmlmc
