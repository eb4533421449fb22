#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ofmlmc/cloud.hpp"
#include "ofmlmc/model.hpp"

namespace ofmlmc {

//! Interacting-bubble collapse surrogate.
//!
//! Each cavity follows Rayleigh-Plesset dynamics with polytropic gas content,
//!   R_i R"_i + 3/2 R'_i^2 = (p_b,i - p_inf - sum_j c_ij) / rho,
//!   p_b,i = p_gas (R_0,i / R_i)^(3 gamma),
//! coupled through the acoustic emission of the other cavities,
//!   c_ij = rho (R_j^2 R"_j + 2 R_j R'_j^2) / d_ij.
//! The accelerations appear on both sides; substituting y_j = R_j^2 R"_j turns
//! the coupling into the symmetric positive definite system
//!   sum_j S_ij y_j = g_i,  S_ii = 1/R_i,  S_ij = 1/d_ij,
//! (the potential matrix of disjoint spheres), solved every stage by
//! warm-started conjugate gradients. Time stepping is explicit second-order
//! Runge-Kutta with fixed dt_l = dt0 * 2^-l per resolution level, so
//! fine/coarse pairs of the same cloud are deterministically coupled.
//!
//! The pressure sensor is a point evaluation at the cloud center,
//!   p_c(t) = p_inf + sum_j rho (R_j^2 R"_j + 2 R_j R'_j^2) / |x_j - c|.
//! Positions and radii are in millimetres, dynamics run in SI units.
//!
//! Integration blow-up (non-finite state or runaway radius after a floor
//! rebound) marks the sample invalid; the scheduler's fault path handles it.
class SurrogateModel : public Model {
 public:
  struct Params {
    CloudParams cloud;
    double liquid_density = 1000.0;   // kg/m^3
    double gas_pressure = 0.5e6;      // Pa, initial equilibrium pressure
    double ambient_pressure = 10.0e6; // Pa, far-field drive
    double polytropic_gamma = 1.4;
    double dt0 = 5.0e-9;              // s, level-0 time step
    double t_end = 7.0e-5;            // s
    int output_points = 257;          // sensor/gas-volume trace length
    int levels = 4;
    double work_scale = 1e-6;         // reported work = steps * n^2 * scale
  };

  explicit SurrogateModel(Params p) : p_(p) {}

  std::string name() const override { return "cloud_surrogate"; }
  int num_levels() const override { return p_.levels; }

  //! Substream 0 feeds the cloud draw; the dynamics are deterministic given
  //! the cloud, so both sides of a coupled pair see the identical cloud.
  ModelSample evaluate(const RandomStream& stream, int level) const override {
    const CloudConfiguration cloud = generate_cloud(stream.substream(0), p_.cloud);
    return simulate(cloud, level);
  }

  //! Deterministic integration of a given cloud at one resolution level.
  ModelSample simulate(const CloudConfiguration& cloud, int level) const {
    if (level < 0 || level >= p_.levels)
      throw ArgumentError("surrogate: level out of range");
    const std::size_t n = cloud.size();
    const double dt = p_.dt0 * std::exp2(-static_cast<double>(level));
    const std::int64_t steps = static_cast<std::int64_t>(std::ceil(p_.t_end / dt));
    const double mm = 1e-3;

    // SI state.
    std::vector<double> r0(n), radius(n), velocity(n), accel(n, 0.0);
    std::vector<double> dist_center(n);
    std::vector<double> inv_dist(n * n, 0.0);  // constant off-diagonal of S
    {
      const Vec3 c{cloud.center[0] * mm, cloud.center[1] * mm, cloud.center[2] * mm};
      std::vector<Vec3> pos(n);
      for (std::size_t i = 0; i < n; ++i) {
        r0[i] = cloud.radii[i] * mm;
        radius[i] = r0[i];
        pos[i] = {cloud.positions[i][0] * mm, cloud.positions[i][1] * mm,
                  cloud.positions[i][2] * mm};
        dist_center[i] = std::max(norm3(sub3(pos[i], c)), r0[i]);
      }
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
          const double inv = 1.0 / norm3(sub3(pos[i], pos[j]));
          inv_dist[i * n + j] = inv;
          inv_dist[j * n + i] = inv;
        }
    }

    const double rho = p_.liquid_density;
    const double p_inf = p_.ambient_pressure;
    const double exponent = 3.0 * p_.polytropic_gamma;
    auto gas_pressure = [&](std::size_t i, double r) {
      return p_.gas_pressure * std::pow(r0[i] / r, exponent);
    };

    ModelSample out;
    out.work = static_cast<double>(steps) * static_cast<double>(n) *
               static_cast<double>(n) * p_.work_scale;

    // Acceleration solve: S(R) y = g, y_i = R_i^2 * accel_i, warm-started CG.
    std::vector<double> y(n, 0.0), cg_r(n), cg_p(n), cg_ap(n), rhs(n);
    auto solve_accelerations = [&](const std::vector<double>& r,
                                   const std::vector<double>& v,
                                   std::vector<double>& acc) {
      for (std::size_t i = 0; i < n; ++i) {
        double g = (gas_pressure(i, r[i]) - p_inf) / rho - 1.5 * v[i] * v[i];
        const double* row = inv_dist.data() + i * n;
        for (std::size_t j = 0; j < n; ++j)
          g -= 2.0 * r[j] * v[j] * v[j] * row[j];
        rhs[i] = g;
      }
      auto matvec = [&](const std::vector<double>& x, std::vector<double>& outv) {
        for (std::size_t i = 0; i < n; ++i) {
          double s = x[i] / r[i];
          const double* row = inv_dist.data() + i * n;
          for (std::size_t j = 0; j < n; ++j) s += row[j] * x[j];
          outv[i] = s;
        }
      };
      matvec(y, cg_ap);
      double rr = 0.0, gnorm = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        cg_r[i] = rhs[i] - cg_ap[i];
        cg_p[i] = cg_r[i];
        rr += cg_r[i] * cg_r[i];
        gnorm += rhs[i] * rhs[i];
      }
      const double tol2 = std::max(gnorm, 1e-300) * 1e-24;
      for (std::size_t iter = 0; iter < 4 * n + 8 && rr > tol2; ++iter) {
        matvec(cg_p, cg_ap);
        double pap = 0.0;
        for (std::size_t i = 0; i < n; ++i) pap += cg_p[i] * cg_ap[i];
        if (!(pap > 0.0)) break;
        const double alpha = rr / pap;
        double rr_next = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          y[i] += alpha * cg_p[i];
          cg_r[i] -= alpha * cg_ap[i];
          rr_next += cg_r[i] * cg_r[i];
        }
        const double beta = rr_next / rr;
        for (std::size_t i = 0; i < n; ++i) cg_p[i] = cg_r[i] + beta * cg_p[i];
        rr = rr_next;
      }
      for (std::size_t i = 0; i < n; ++i) acc[i] = y[i] / (r[i] * r[i]);
    };

    // Output grids; traces resample the integration onto the fixed grid by
    // linear interpolation so every level reports on identical time points.
    const int npts = std::max(2, p_.output_points);
    const double out_dt = p_.t_end / static_cast<double>(npts - 1);
    std::vector<double> sensor(npts, 0.0), gas_volume(npts, 0.0);

    double peak_pressure = 0.0, peak_time = 0.0;
    std::size_t peak_bubble = 0;
    bool blew_up = false;

    auto sensor_now = [&]() {
      double p = p_inf;
      for (std::size_t j = 0; j < n; ++j)
        p += rho *
             (radius[j] * radius[j] * accel[j] +
              2.0 * radius[j] * velocity[j] * velocity[j]) /
             dist_center[j];
      return p;
    };
    auto volume_now = [&]() {
      double v = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        v += radius[j] * radius[j] * radius[j];
      return 4.0 / 3.0 * 3.14159265358979323846 * v;
    };
    auto scan_peak = [&](double t) {
      for (std::size_t j = 0; j < n; ++j) {
        const double pb = gas_pressure(j, radius[j]);
        if (pb > peak_pressure) {
          peak_pressure = pb;
          peak_time = t;
          peak_bubble = j;
        }
      }
    };
    auto apply_floor = [&](std::vector<double>& r, std::vector<double>& v) {
      for (std::size_t i = 0; i < n; ++i)
        if (r[i] < 1e-3 * r0[i]) {  // crude rebound floor
          r[i] = 1e-3 * r0[i];
          v[i] = 0.0;
        }
    };

    solve_accelerations(radius, velocity, accel);
    double t_prev = 0.0, sensor_prev = sensor_now(), vol_prev = volume_now();
    sensor[0] = sensor_prev;
    gas_volume[0] = vol_prev;
    int next_out = 1;
    scan_peak(0.0);

    std::vector<double> r1(n), v1(n), a1(n);
    for (std::int64_t step = 0; step < steps && !blew_up; ++step) {
      // Heun step; stage 1 reuses the acceleration solved at this state.
      for (std::size_t i = 0; i < n; ++i) {
        r1[i] = radius[i] + dt * velocity[i];
        v1[i] = velocity[i] + dt * accel[i];
      }
      apply_floor(r1, v1);
      solve_accelerations(r1, v1, a1);
      for (std::size_t i = 0; i < n; ++i) {
        radius[i] += 0.5 * dt * (velocity[i] + v1[i]);
        velocity[i] += 0.5 * dt * (accel[i] + a1[i]);
      }
      apply_floor(radius, velocity);
      for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(radius[i]) || !std::isfinite(velocity[i]) ||
            radius[i] > 50.0 * r0[i])
          blew_up = true;
      if (blew_up) break;
      solve_accelerations(radius, velocity, accel);

      const double t_cur = static_cast<double>(step + 1) * dt;
      const double sensor_cur = sensor_now();
      const double vol_cur = volume_now();
      while (next_out < npts &&
             static_cast<double>(next_out) * out_dt <= t_cur * (1.0 + 1e-12)) {
        const double t_out = static_cast<double>(next_out) * out_dt;
        const double w = (t_out - t_prev) / (t_cur - t_prev);
        sensor[next_out] = sensor_prev + w * (sensor_cur - sensor_prev);
        gas_volume[next_out] = vol_prev + w * (vol_cur - vol_prev);
        ++next_out;
      }
      scan_peak(t_cur);
      t_prev = t_cur;
      sensor_prev = sensor_cur;
      vol_prev = vol_cur;
    }
    for (; next_out < npts && !blew_up; ++next_out) {
      sensor[next_out] = sensor_prev;
      gas_volume[next_out] = vol_prev;
    }

    if (blew_up || !std::isfinite(peak_pressure)) {
      out.valid = false;
      return out;
    }

    // Collapse time: argmax of the sensor trace on the output grid.
    int argmax = 0;
    for (int k = 1; k < npts; ++k)
      if (sensor[k] > sensor[argmax]) argmax = k;

    const double peak_dist =
        norm3(sub3(cloud.positions[peak_bubble], cloud.center));

    out.qoi["peak_pressure"] = peak_pressure;
    out.qoi["peak_time"] = peak_time;
    out.qoi["collapse_time"] = static_cast<double>(argmax) * out_dt;
    out.qoi["peak_location_distance"] = peak_dist;  // mm
    out.qoi["peak_sensor_pressure"] = sensor[argmax];
    out.qoi["gas_fraction"] = cloud.gas_fraction;
    out.qoi["beta"] = cloud.interaction_parameter;
    out.qoi["skewness_x"] = cloud.skewness[0];
    out.qoi["skewness_y"] = cloud.skewness[1];
    out.qoi["skewness_z"] = cloud.skewness[2];
    out.qoi["central_cavity_distance"] = cloud.central_cavity_distance;
    out.qoi["average_radius"] = cloud.average_radius;

    TimeSeries sensor_ts;
    sensor_ts.dt = out_dt;
    sensor_ts.values = std::move(sensor);
    out.series["sensor_pressure"] = std::move(sensor_ts);
    TimeSeries vol_ts;
    vol_ts.dt = out_dt;
    vol_ts.values = std::move(gas_volume);
    out.series["gas_volume"] = std::move(vol_ts);

    out.cloud.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      out.cloud.push_back({cloud.positions[i][0], cloud.positions[i][1],
                           cloud.positions[i][2], cloud.radii[i]});
    return out;
  }

  const Params& params() const { return p_; }

  //! Classical empty-cavity collapse time for a bubble of rest radius r0_mm
  //! under pressure difference dp; the oracle for collapse-time sanity checks.
  static double rayleigh_time(double r0_mm, double rho, double dp) {
    return 0.915 * (r0_mm * 1e-3) * std::sqrt(rho / dp);
  }

 private:
  Params p_;
};

}  // namespace ofmlmc
