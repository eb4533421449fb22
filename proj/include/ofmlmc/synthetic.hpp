#pragma once

#include <cmath>
#include <string>

#include "ofmlmc/model.hpp"

namespace ofmlmc {

//! Analytic verification hierarchy:
//!   q_l(omega) = X(omega) + c * 2^(-s*l) * Z_l(omega),
//! with X, Z_0, Z_1, ... independent standard normals drawn from fixed
//! substreams (X from substream 0, Z_l from substream l+1), so a coupled pair
//! shares X and its own Z per level. Closed-form moments make every estimator
//! testable: E[q_l] = 0, V[q_l] = 1 + c^2 4^(-s*l), Cov[q_l, q_{l-1}] = 1.
//!
//! Reported work follows the declared growth rate so campaigns stay
//! deterministic across machines.
class SyntheticModel : public Model {
 public:
  struct Params {
    double decay_rate = 1.0;   // s
    double amplitude = 1.0;    // c
    double base_work = 1.0;
    double work_rate = 4.0;    // reported work = base_work * 2^(rate*level)
    int levels = 4;
  };

  explicit SyntheticModel(Params p) : p_(p) {}

  std::string name() const override { return "synthetic"; }
  int num_levels() const override { return p_.levels; }

  ModelSample evaluate(const RandomStream& stream, int level) const override {
    if (level < 0) throw ArgumentError("synthetic: level must be >= 0");
    RandomStream common = stream.substream(0);
    RandomStream noise = stream.substream(static_cast<std::uint64_t>(level) + 1);
    const double x = common.normal();
    const double z = noise.normal();
    ModelSample s;
    s.qoi["value"] = x + p_.amplitude * std::exp2(-p_.decay_rate * level) * z;
    s.work = p_.base_work * std::exp2(p_.work_rate * level);
    return s;
  }

  double analytic_mean() const { return 0.0; }

  double analytic_variance(int level) const {
    const double a = p_.amplitude * std::exp2(-p_.decay_rate * level);
    return 1.0 + a * a;
  }

  double analytic_cross_cov(int) const { return 1.0; }

  double analytic_diff_variance(int level) const {
    if (level == 0) return analytic_variance(0);
    const double af = p_.amplitude * std::exp2(-p_.decay_rate * level);
    const double ac = p_.amplitude * std::exp2(-p_.decay_rate * (level - 1));
    return af * af + ac * ac;
  }

  const Params& params() const { return p_; }

 private:
  Params p_;
};

}  // namespace ofmlmc
