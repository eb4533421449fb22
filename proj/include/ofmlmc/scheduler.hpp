#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "ofmlmc/indicators.hpp"
#include "ofmlmc/model.hpp"
#include "ofmlmc/random.hpp"
#include "ofmlmc/store.hpp"

namespace ofmlmc {

//! Groups of sample keys to execute together, with a worker count per group
//! (job merging: one submission computing several samples concurrently).
struct BatchPlan {
  struct Group {
    std::vector<SampleKey> keys;
    int workers = 1;
  };
  std::vector<Group> groups;

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.keys.size();
    return n;
  }

  static BatchPlan single_group(std::vector<SampleKey> keys, int workers) {
    BatchPlan plan;
    plan.groups.push_back({std::move(keys), workers});
    return plan;
  }
};

//! Executes sample plans against a model with a local worker pool.
//!
//! Each sample runs in its own sandbox directory, with its randomness derived
//! purely from (campaign seed, level, index), so results are independent of
//! worker count and execution order. A model exception or an invalid model
//! output becomes a failed ledger entry; the batch carries on. Results land in
//! the store in completion order; consumers sort by key.
class SampleScheduler {
 public:
  SampleScheduler(CampaignStore& store, const Model& model,
                  std::uint64_t campaign_seed, int default_workers = 1)
      : store_(store), model_(model), seed_(campaign_seed),
        default_workers_(std::max(1, default_workers)) {}

  //! Test/instrumentation hook, called after each completed sample with the
  //! number of samples finished so far in this plan. Exceptions thrown here
  //! abort the plan (they are not sample failures).
  std::function<void(const SampleKey&, std::size_t)> after_sample;

  void execute_plan(const BatchPlan& plan) {
    for (const auto& group : plan.groups) execute_group(group);
  }

  std::uint64_t campaign_seed() const { return seed_; }
  int default_workers() const { return default_workers_; }

 private:
  void execute_group(const BatchPlan::Group& group) {
    const int workers =
        std::max(1, group.workers > 0 ? group.workers : default_workers_);
    std::atomic<std::size_t> cursor{0};
    std::atomic<std::size_t> completed{0};
    std::mutex control_mutex;
    std::exception_ptr abort;

    auto worker = [&]() {
      while (true) {
        {
          std::lock_guard lock(control_mutex);
          if (abort) return;
        }
        const std::size_t i = cursor.fetch_add(1);
        if (i >= group.keys.size()) return;
        const SampleKey key = group.keys[i];
        store_.begin_sample(key);
        SampleRecord record = run_one(key);
        store_.finish_sample(record);
        const std::size_t done = completed.fetch_add(1) + 1;
        if (after_sample) {
          try {
            after_sample(key, done);
          } catch (...) {
            std::lock_guard lock(control_mutex);
            if (!abort) abort = std::current_exception();
            return;
          }
        }
      }
    };

    if (workers == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    if (abort) std::rethrow_exception(abort);
  }

  SampleRecord run_one(const SampleKey& key) {
    SampleRecord record;
    record.key = key;
    record.sandbox = store_.sandbox_dir(key);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      RandomStream stream(derive_stream_id(seed_, static_cast<std::uint64_t>(key.level),
                                           static_cast<std::uint64_t>(key.index)));
      SamplePair pair = coupled_pair(model_, stream, key.level);
      record.fine = std::move(pair.fine);
      record.coarse = std::move(pair.coarse);
      record.has_coarse = pair.has_coarse;
      record.work = record.fine.work + (record.has_coarse ? record.coarse.work : 0.0);
      if (record.fine.valid && (!record.has_coarse || record.coarse.valid)) {
        record.status = SampleStatus::done;
      } else {
        record.status = SampleStatus::failed;
        record.failure = "model reported invalid sample";
      }
    } catch (const std::exception& e) {
      record.status = SampleStatus::failed;
      record.failure = e.what();
    }
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return record;
  }

  CampaignStore& store_;
  const Model& model_;
  std::uint64_t seed_;
  int default_workers_;
};

//! Done entries only, one PairSamples per level in canonical (index-sorted)
//! order: failed samples shrink the effective counts, they never bias values.
inline std::vector<PairSamples> valid_samples(const std::vector<SampleRecord>& records,
                                              int num_levels, const std::string& qoi) {
  std::vector<std::vector<const SampleRecord*>> by_level(num_levels);
  for (const auto& r : records) {
    if (r.status != SampleStatus::done) continue;
    if (r.key.level < 0 || r.key.level >= num_levels) continue;
    by_level[r.key.level].push_back(&r);
  }
  std::vector<PairSamples> out(num_levels);
  for (int l = 0; l < num_levels; ++l) {
    std::sort(by_level[l].begin(), by_level[l].end(),
              [](const SampleRecord* a, const SampleRecord* b) {
                return a->key.index < b->key.index;
              });
    out[l].level = l;
    for (const SampleRecord* r : by_level[l]) {
      out[l].fine.push_back(r->fine.value(qoi));
      out[l].fine_work.push_back(r->fine.work);
      if (l > 0) {
        out[l].coarse.push_back(r->coarse.value(qoi));
        out[l].coarse_work.push_back(r->coarse.work);
      }
    }
  }
  return out;
}

//! Per-level done/failed tallies.
struct LedgerCounts {
  std::vector<std::int64_t> done;
  std::vector<std::int64_t> failed;
  std::vector<double> work_by_level;
  double total_work = 0.0;  // model work units over done and failed entries
};

inline LedgerCounts ledger_counts(const std::vector<SampleRecord>& records,
                                  int num_levels) {
  LedgerCounts c;
  c.done.assign(num_levels, 0);
  c.failed.assign(num_levels, 0);
  c.work_by_level.assign(num_levels, 0.0);
  for (const auto& r : records) {
    if (r.key.level < 0 || r.key.level >= num_levels) continue;
    if (r.status == SampleStatus::done)
      ++c.done[r.key.level];
    else
      ++c.failed[r.key.level];
    c.work_by_level[r.key.level] += r.work;
    c.total_work += r.work;
  }
  return c;
}

//! Deterministic per-sample fault injection: fails (by throwing) on keys whose
//! fault draw falls below `probability`, consistently across the pair.
class RandomFailureModel : public Model {
 public:
  RandomFailureModel(const Model& inner, double probability)
      : inner_(inner), probability_(probability) {}

  std::string name() const override { return inner_.name(); }
  int num_levels() const override { return inner_.num_levels(); }

  ModelSample evaluate(const RandomStream& stream, int level) const override {
    RandomStream fault = stream.substream(0xFA113DULL);
    if (fault.uniform() < probability_)
      throw std::runtime_error("injected sample fault");
    return inner_.evaluate(stream, level);
  }

 private:
  const Model& inner_;
  double probability_;
};

//! Fails exactly the samples whose stream key is in the given set.
class KeyFailureModel : public Model {
 public:
  KeyFailureModel(const Model& inner, std::vector<std::uint64_t> stream_keys)
      : inner_(inner), keys_(std::move(stream_keys)) {}

  std::string name() const override { return inner_.name(); }
  int num_levels() const override { return inner_.num_levels(); }

  ModelSample evaluate(const RandomStream& stream, int level) const override {
    for (std::uint64_t k : keys_)
      if (k == stream.key()) throw std::runtime_error("forced sample fault");
    return inner_.evaluate(stream, level);
  }

 private:
  const Model& inner_;
  std::vector<std::uint64_t> keys_;
};

}  // namespace ofmlmc
