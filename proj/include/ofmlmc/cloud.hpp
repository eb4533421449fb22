#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ofmlmc/errors.hpp"
#include "ofmlmc/random.hpp"

namespace ofmlmc {

using Vec3 = std::array<double, 3>;

inline double norm3(const Vec3& v) {
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

inline Vec3 sub3(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

//! A random spherical cloud of spherical cavities plus its derived geometric
//! metrics. Lengths are in millimetres. Invariants: every cavity lies fully
//! inside the cloud, radii respect the clip bounds, cavities do not overlap.
struct CloudConfiguration {
  Vec3 center{0.0, 0.0, 0.0};
  double cloud_radius = 0.0;
  std::vector<Vec3> positions;
  std::vector<double> radii;

  // Derived metrics.
  double gas_fraction = 0.0;       // sum r_i^3 / R_cloud^3
  double average_radius = 0.0;
  double interaction_parameter = 0.0;  // beta = gas_fraction * (R/R_avg)^2
  Vec3 skewness{0.0, 0.0, 0.0};    // centered third moment per axis
  double central_cavity_distance = 0.0;

  std::size_t size() const { return radii.size(); }

  void compute_metrics() {
    const std::size_t n = radii.size();
    if (n == 0) return;
    double r3 = 0.0, r_sum = 0.0;
    Vec3 mean{0.0, 0.0, 0.0};
    double min_dist = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      r3 += radii[i] * radii[i] * radii[i];
      r_sum += radii[i];
      for (int a = 0; a < 3; ++a) mean[a] += positions[i][a];
      const double d = norm3(sub3(positions[i], center));
      if (min_dist < 0.0 || d < min_dist) min_dist = d;
    }
    for (int a = 0; a < 3; ++a) mean[a] /= static_cast<double>(n);
    gas_fraction = r3 / (cloud_radius * cloud_radius * cloud_radius);
    average_radius = r_sum / static_cast<double>(n);
    interaction_parameter =
        gas_fraction * (cloud_radius / average_radius) * (cloud_radius / average_radius);
    central_cavity_distance = min_dist;
    skewness = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i)
      for (int a = 0; a < 3; ++a) {
        const double d = positions[i][a] - mean[a];
        skewness[a] += d * d * d;
      }
    for (int a = 0; a < 3; ++a) skewness[a] /= static_cast<double>(n);
  }

  //! CSV rows "x,y,z,r", one cavity per line, header included.
  std::string to_csv() const {
    std::string out = "x,y,z,r\n";
    char buf[160];
    for (std::size_t i = 0; i < radii.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", positions[i][0],
                    positions[i][1], positions[i][2], radii[i]);
      out += buf;
    }
    return out;
  }
};

struct CloudParams {
  int count = 500;
  Vec3 center{50.0, 50.0, 50.0};
  double cloud_radius = 20.0;
  double r_min = 0.8;
  double r_max = 1.2;
  double lognormal_mu = 0.0;      // ln(1.0 mm)
  double lognormal_sigma = 0.1;
  int max_attempts_per_cavity = 20000;
};

//! Random cloud: radii log-normal clipped to [r_min, r_max] by rejection,
//! positions uniform in the sphere by cube rejection. A cavity violating the
//! cloud boundary (|x - c| + r > R) or overlapping an already placed cavity is
//! redrawn entirely (radius and position), keeping the draw order a pure
//! function of the stream. Throws GenerationError when the retry budget is
//! exhausted (infeasible packing).
inline CloudConfiguration generate_cloud(RandomStream stream, const CloudParams& p) {
  if (p.count < 1) throw ArgumentError("generate_cloud: count must be >= 1");
  if (!(p.r_min > 0.0) || p.r_max < p.r_min)
    throw ArgumentError("generate_cloud: need 0 < r_min <= r_max");
  if (p.r_max >= p.cloud_radius)
    throw ArgumentError("generate_cloud: r_max must be below the cloud radius");

  CloudConfiguration cloud;
  cloud.center = p.center;
  cloud.cloud_radius = p.cloud_radius;
  cloud.positions.reserve(p.count);
  cloud.radii.reserve(p.count);

  for (int i = 0; i < p.count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < p.max_attempts_per_cavity && !placed; ++attempt) {
      // Radius: log-normal, rejected outside the clip bounds. Degenerate
      // bounds (r_min == r_max) force the radius without consuming draws.
      double r = p.r_min;
      if (p.r_max > p.r_min) {
        bool have_r = false;
        for (int k = 0; k < 1000; ++k) {
          r = std::exp(p.lognormal_mu + p.lognormal_sigma * stream.normal());
          if (r >= p.r_min && r <= p.r_max) {
            have_r = true;
            break;
          }
        }
        if (!have_r)
          throw GenerationError("generate_cloud: radius clip bounds reject everything");
      }

      // Position: uniform in the sphere via cube rejection, folded with the
      // containment constraint |x| + r <= R.
      Vec3 offset{};
      bool have_p = false;
      for (int k = 0; k < 1000; ++k) {
        for (int a = 0; a < 3; ++a)
          offset[a] = stream.uniform(-p.cloud_radius, p.cloud_radius);
        if (norm3(offset) <= p.cloud_radius) {
          have_p = norm3(offset) + r <= p.cloud_radius;
          break;  // uniform-in-sphere accepted; containment may still fail
        }
      }
      if (!have_p) continue;

      const Vec3 pos{p.center[0] + offset[0], p.center[1] + offset[1],
                     p.center[2] + offset[2]};
      bool overlaps = false;
      for (std::size_t j = 0; j < cloud.radii.size() && !overlaps; ++j)
        overlaps = norm3(sub3(pos, cloud.positions[j])) < r + cloud.radii[j];
      if (overlaps) continue;

      cloud.positions.push_back(pos);
      cloud.radii.push_back(r);
      placed = true;
    }
    if (!placed)
      throw GenerationError("generate_cloud: packing failed at cavity " +
                            std::to_string(i) + " after retry budget");
  }

  cloud.compute_metrics();
  return cloud;
}

}  // namespace ofmlmc
