#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "ofmlmc/errors.hpp"
#include "ofmlmc/random.hpp"

namespace ofmlmc {

//! A named time series on a uniform grid.
struct TimeSeries {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> values;

  double time_at(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
};

//! One statistical realization of a model at one resolution level: named
//! scalar QoIs, optional named time series, model-reported work, validity.
struct ModelSample {
  std::map<std::string, double> qoi;
  std::map<std::string, TimeSeries> series;
  double work = 0.0;
  bool valid = true;
  //! Cavity table (x, y, z, r) for cloud-based models; empty otherwise.
  std::vector<std::array<double, 4>> cloud;

  double value(const std::string& name) const {
    const auto it = qoi.find(name);
    if (it == qoi.end())
      throw ArgumentError("ModelSample: unknown QoI '" + name + "'");
    return it->second;
  }
};

//! A stochastic model evaluated at (sample stream, resolution level).
//!
//! Evaluations must be pure: the result may depend only on the stream's key
//! and the level, never on call order or ambient state, so coupled pairs and
//! re-runs agree bit for bit. Implementations document their substream usage.
class Model {
 public:
  virtual ~Model() = default;
  virtual std::string name() const = 0;
  virtual int num_levels() const = 0;
  virtual ModelSample evaluate(const RandomStream& stream, int level) const = 0;
};

struct SamplePair {
  ModelSample fine;
  ModelSample coarse;  // unset (valid = false, empty qoi) at level 0
  bool has_coarse = false;

  bool valid() const { return fine.valid && (!has_coarse || coarse.valid); }
};

//! Coupled fine/coarse evaluation: the same stream (same omega) at levels l
//! and l-1. Level 0 yields only the single coarse-most sample.
inline SamplePair coupled_pair(const Model& model, const RandomStream& stream,
                               int level) {
  if (level < 0) throw ArgumentError("coupled_pair: level must be >= 0");
  SamplePair pair;
  pair.fine = model.evaluate(stream, level);
  if (level > 0) {
    pair.coarse = model.evaluate(stream, level - 1);
    pair.has_coarse = true;
  }
  return pair;
}

}  // namespace ofmlmc
