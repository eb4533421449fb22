#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ofmlmc/errors.hpp"
#include "ofmlmc/estimator.hpp"
#include "ofmlmc/fft.hpp"

namespace ofmlmc {

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / 2.5066282746310005;
}

namespace detail {

inline double weighted_mean(const std::vector<double>& x, const std::vector<double>& w) {
  double sw = 0.0, s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += w[i] * x[i];
    sw += w[i];
  }
  return s / sw;
}

inline double weighted_sd(const std::vector<double>& x, const std::vector<double>& w) {
  const double m = weighted_mean(x, w);
  double sw = 0.0, s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += w[i] * (x[i] - m) * (x[i] - m);
    sw += w[i];
  }
  return std::sqrt(s / sw);
}

inline double effective_samples(const std::vector<double>& w) {
  double sw = 0.0, sw2 = 0.0;
  for (double v : w) {
    sw += v;
    sw2 += v * v;
  }
  return sw2 > 0.0 ? sw * sw / sw2 : 0.0;
}

//! Weighted p-quantile (type-7 style interpolation on the weighted ECDF).
inline double weighted_quantile(std::vector<double> x, std::vector<double> w, double p) {
  std::vector<std::size_t> idx(x.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  double sw = 0.0;
  for (double v : w) sw += v;
  double acc = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    acc += w[idx[k]];
    if (acc >= p * sw) return x[idx[k]];
  }
  return x[idx.back()];
}

inline double phi4(double x) {
  const double x2 = x * x;
  return (x2 * x2 - 6.0 * x2 + 3.0) * normal_pdf(x);
}

inline double phi6(double x) {
  const double x2 = x * x;
  return (x2 * x2 * x2 - 15.0 * x2 * x2 + 45.0 * x2 - 15.0) * normal_pdf(x);
}

//! Binned pair-distance kernel functional estimate
//!   psi_r(g) ~= W^-2 g^-(r+1) sum_ij phi^(r)((x_i - x_j)/g),
//! O(nb^2) once for the distance histogram, O(nb) per bandwidth.
struct BinnedPsi {
  std::vector<double> pair_weight;  // index = bin distance, 0 includes self pairs
  double bin_width = 0.0;
  double total_weight = 0.0;

  BinnedPsi(const std::vector<double>& x, const std::vector<double>& w,
            int bins = 512) {
    double lo = x[0], hi = x[0];
    for (double v : x) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi <= lo) hi = lo + 1.0;
    bin_width = (hi - lo) / static_cast<double>(bins - 1);
    std::vector<double> count(bins, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      int b = static_cast<int>(std::floor((x[i] - lo) / bin_width + 0.5));
      b = std::clamp(b, 0, bins - 1);
      count[b] += w[i];
      total_weight += w[i];
    }
    pair_weight.assign(bins, 0.0);
    for (int b = 0; b < bins; ++b) {
      if (count[b] == 0.0) continue;
      for (int d = 0; b + d < bins; ++d) pair_weight[d] += count[b] * count[b + d];
    }
  }

  template <typename Phi>
  double evaluate(double g, int order, Phi phi) const {
    double sum = pair_weight[0] * phi(0.0);
    for (std::size_t d = 1; d < pair_weight.size(); ++d) {
      if (pair_weight[d] == 0.0) continue;
      sum += 2.0 * pair_weight[d] * phi(static_cast<double>(d) * bin_width / g);
    }
    return sum / (total_weight * total_weight * std::pow(g, order + 1));
  }
};

}  // namespace detail

//! Silverman's rule-of-thumb bandwidth (the fallback rule).
inline double silverman_bandwidth(const std::vector<double>& x,
                                  const std::vector<double>& w) {
  const double sd = detail::weighted_sd(x, w);
  const double iqr = detail::weighted_quantile(x, w, 0.75) -
                     detail::weighted_quantile(x, w, 0.25);
  double scale = sd;
  if (iqr > 0.0) scale = std::min(scale, iqr / 1.349);
  const double n = detail::effective_samples(w);
  return 0.9 * scale * std::pow(n, -0.2);
}

//! Solve-the-equation plug-in bandwidth (Sheather-Jones type fixed point).
//!
//! The pilot functionals run on binned pair distances; the fixed point is
//! found by bisection over [1e-3, 1e3] * sample sd (60 iterations). Falls back
//! to Silverman's rule when the equation does not bracket a root.
//! `fallback` reports which rule produced the result.
inline double solve_the_equation_bandwidth(const std::vector<double>& x,
                                           const std::vector<double>& w,
                                           bool* fallback = nullptr) {
  if (fallback) *fallback = false;
  const double sd = detail::weighted_sd(x, w);
  const double n = detail::effective_samples(w);
  auto bail = [&]() {
    if (fallback) *fallback = true;
    return silverman_bandwidth(x, w);
  };
  if (!(sd > 0.0) || n < 3.0) return bail();

  const double iqr = detail::weighted_quantile(x, w, 0.75) -
                     detail::weighted_quantile(x, w, 0.25);
  double lambda = sd;
  if (iqr > 0.0) lambda = std::min(lambda, iqr / 1.349);

  detail::BinnedPsi psi(x, w);
  const double a = 0.920 * lambda * std::pow(n, -1.0 / 7.0);
  const double b = 0.912 * lambda * std::pow(n, -1.0 / 9.0);
  const double sd_a = psi.evaluate(a, 4, detail::phi4);
  const double td_b = -psi.evaluate(b, 6, detail::phi6);
  if (!(sd_a > 0.0) || !(td_b > 0.0)) return bail();
  const double chi = 1.357 * std::pow(sd_a / td_b, 1.0 / 7.0);

  const double rk = 1.0 / (2.0 * std::sqrt(3.14159265358979323846));
  auto equation = [&](double h) {
    const double pilot = chi * std::pow(h, 5.0 / 7.0);
    const double psi4 = psi.evaluate(pilot, 4, detail::phi4);
    if (!(psi4 > 0.0)) return -h;  // treat as overshoot
    return std::pow(rk / (n * psi4), 0.2) - h;
  };

  double lo = 1e-3 * sd, hi = 1e3 * sd;
  double flo = equation(lo), fhi = equation(hi);
  if (!(flo > 0.0) || !(fhi < 0.0)) return bail();
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (equation(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

//! A probability density on a grid; integrates to one by construction.
struct DensityEstimate {
  std::vector<double> grid;
  std::vector<double> density;
  std::vector<double> bandwidths;
  double clamped_mass = 0.0;      // mass removed by negativity clamping
  bool bandwidth_fallback = false;
  bool degenerate_spread = false; // delta-like kernel at a single point

  double integral() const {
    double s = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i)
      s += 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
    return s;
  }
};

namespace detail {

inline void check_grid(const std::vector<double>& grid) {
  if (grid.size() < 2) throw ArgumentError("kde: grid needs at least two points");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] <= grid[i - 1])
      throw ArgumentError("kde: grid must be strictly increasing");
}

inline void renormalize(DensityEstimate& d) {
  const double s = d.integral();
  if (s > 0.0)
    for (double& v : d.density) v /= s;
}

//! Unnormalized Gaussian KDE sum with unit weights.
inline std::vector<double> kde_raw(const std::vector<double>& samples, double h,
                                   const std::vector<double>& grid) {
  std::vector<double> density(grid.size(), 0.0);
  const double scale = static_cast<double>(samples.size()) * h;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double s = 0.0;
    for (double x : samples) s += normal_pdf((grid[g] - x) / h);
    density[g] = s / scale;
  }
  return density;
}

}  // namespace detail

//! Gaussian-kernel density with solve-the-equation bandwidth and optional
//! non-negative per-sample weights. Zero spread returns a narrow kernel (one
//! grid cell wide) at the common point, flagged degenerate.
inline DensityEstimate kde_1d(const std::vector<double>& samples,
                              std::vector<double> weights,
                              const std::vector<double>& grid) {
  detail::check_grid(grid);
  if (samples.empty()) throw ArgumentError("kde_1d: no samples");
  if (weights.empty()) weights.assign(samples.size(), 1.0);
  if (weights.size() != samples.size())
    throw ArgumentError("kde_1d: weight/sample size mismatch");
  for (double w : weights)
    if (w < 0.0) throw ArgumentError("kde_1d: weights must be >= 0");

  DensityEstimate out;
  out.grid = grid;
  out.density.assign(grid.size(), 0.0);

  const double sd = detail::weighted_sd(samples, weights);
  double h;
  if (sd > 0.0 && samples.size() >= 3) {
    h = solve_the_equation_bandwidth(samples, weights, &out.bandwidth_fallback);
  } else {
    h = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
    out.degenerate_spread = sd == 0.0;
    out.bandwidth_fallback = true;
  }
  out.bandwidths = {h};

  double total = 0.0;
  for (double w : weights) total += w;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double s = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i)
      s += weights[i] * normal_pdf((grid[g] - samples[i]) / h);
    out.density[g] = s / (total * h);
  }
  detail::renormalize(out);
  return out;
}

//! Two-dimensional product-Gaussian joint density; per-axis bandwidths follow
//! the one-dimensional rule. Row-major layout: density[ix * ny + iy].
struct Density2D {
  std::vector<double> grid_x, grid_y;
  std::vector<double> density;
  double bandwidth_x = 0.0, bandwidth_y = 0.0;

  double at(std::size_t ix, std::size_t iy) const {
    return density[ix * grid_y.size() + iy];
  }

  double integral() const {
    double s = 0.0;
    for (std::size_t i = 1; i < grid_x.size(); ++i)
      for (std::size_t j = 1; j < grid_y.size(); ++j) {
        const double cell = (grid_x[i] - grid_x[i - 1]) * (grid_y[j] - grid_y[j - 1]);
        s += 0.25 * cell *
             (at(i, j) + at(i - 1, j) + at(i, j - 1) + at(i - 1, j - 1));
      }
    return s;
  }
};

inline Density2D kde_2d(const std::vector<double>& xs, const std::vector<double>& ys,
                        const std::vector<double>& grid_x,
                        const std::vector<double>& grid_y) {
  detail::check_grid(grid_x);
  detail::check_grid(grid_y);
  if (xs.empty() || xs.size() != ys.size())
    throw ArgumentError("kde_2d: sample size mismatch");
  std::vector<double> w(xs.size(), 1.0);

  Density2D out;
  out.grid_x = grid_x;
  out.grid_y = grid_y;
  auto bandwidth_for = [&](const std::vector<double>& v,
                           const std::vector<double>& grid) {
    if (detail::weighted_sd(v, w) > 0.0 && v.size() >= 3) {
      bool fb = false;
      return solve_the_equation_bandwidth(v, w, &fb);
    }
    return (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
  };
  const double hx = out.bandwidth_x = bandwidth_for(xs, grid_x);
  const double hy = out.bandwidth_y = bandwidth_for(ys, grid_y);

  const std::size_t nx = grid_x.size(), ny = grid_y.size();
  out.density.assign(nx * ny, 0.0);
  std::vector<double> kx(nx), ky(ny);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t g = 0; g < nx; ++g)
      kx[g] = normal_pdf((grid_x[g] - xs[i]) / hx);
    for (std::size_t g = 0; g < ny; ++g)
      ky[g] = normal_pdf((grid_y[g] - ys[i]) / hy);
    for (std::size_t gx = 0; gx < nx; ++gx) {
      const double f = kx[gx];
      if (f == 0.0) continue;
      double* row = out.density.data() + gx * ny;
      for (std::size_t gy = 0; gy < ny; ++gy) row[gy] += f * ky[gy];
    }
  }
  const double scale =
      static_cast<double>(xs.size()) * hx * hy;
  for (double& v : out.density) v /= scale;
  const double integral = out.integral();
  if (integral > 0.0)
    for (double& v : out.density) v /= integral;
  return out;
}

//! Scalar pair samples per difference level, for the telescoping density.
struct ScalarPairLevel {
  int level = 0;
  std::vector<double> fine;
  std::vector<double> coarse;  // empty at level 0
};

//! Multi-level density: base KDE from the coarsest samples plus per-level
//! coefficient-weighted corrections,
//!   f = a_0 KDE_0(q_0) + sum_l [ a_l KDE_l(fine) - a_{l-1} KDE_l(coarse) ],
//! with one bandwidth per difference level (chosen from its fine side) so
//! identical pairs cancel exactly. The raw combination integrates to one by
//! telescoping of the coefficients; negative excursions are clamped to zero
//! and the result renormalized, with the clamped mass reported.
inline DensityEstimate multilevel_density(const std::vector<ScalarPairLevel>& levels,
                                          const CoefficientVector& cv,
                                          const std::vector<double>& grid) {
  detail::check_grid(grid);
  if (levels.empty() || cv.num_levels() != static_cast<int>(levels.size()))
    throw ArgumentError("multilevel_density: dimension mismatch");

  DensityEstimate out;
  out.grid = grid;
  out.density.assign(grid.size(), 0.0);

  for (std::size_t l = 0; l < levels.size(); ++l) {
    const ScalarPairLevel& lv = levels[l];
    if (lv.fine.empty())
      throw ArgumentError("multilevel_density: empty level " + std::to_string(l));
    // Bandwidth per difference level from its fine side; shared with the
    // coarse side so matching pairs cancel exactly.
    std::vector<double> ones(lv.fine.size(), 1.0);
    double h;
    if (detail::weighted_sd(lv.fine, ones) > 0.0 && lv.fine.size() >= 3) {
      bool fb = false;
      h = solve_the_equation_bandwidth(lv.fine, ones, &fb);
      out.bandwidth_fallback |= fb;
    } else {
      h = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
      out.bandwidth_fallback = true;
    }
    out.bandwidths.push_back(h);
    const auto fine = detail::kde_raw(lv.fine, h, grid);
    if (l == 0) {
      for (std::size_t g = 0; g < grid.size(); ++g)
        out.density[g] += cv.alpha[0] * fine[g];
      continue;
    }
    const auto coarse = detail::kde_raw(lv.coarse, h, grid);
    for (std::size_t g = 0; g < grid.size(); ++g)
      out.density[g] += cv.alpha[l] * fine[g] - cv.alpha[l - 1] * coarse[g];
  }

  double clamped = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g)
    if (out.density[g] < 0.0) {
      // Trapezoid share of the removed mass.
      const double dl = g > 0 ? 0.5 * (grid[g] - grid[g - 1]) : 0.0;
      const double dr = g + 1 < grid.size() ? 0.5 * (grid[g + 1] - grid[g]) : 0.0;
      clamped += -out.density[g] * (dl + dr);
      out.density[g] = 0.0;
    }
  out.clamped_mass = clamped;
  detail::renormalize(out);
  return out;
}

//! Pearson correlations between named variables. Constant variables produce
//! missing entries (quiet NaN plus the missing flag), never zeros.
struct CorrelationMatrix {
  std::vector<std::string> names;
  std::vector<double> values;  // row-major
  std::vector<bool> missing;

  double at(std::size_t i, std::size_t j) const { return values[i * names.size() + j]; }
  bool is_missing(std::size_t i, std::size_t j) const {
    return missing[i * names.size() + j];
  }
};

inline CorrelationMatrix correlation_matrix(
    const std::vector<std::string>& names,
    const std::vector<std::vector<double>>& columns) {
  if (names.size() != columns.size())
    throw ArgumentError("correlation_matrix: name/column mismatch");
  const std::size_t k = names.size();
  if (k == 0) throw ArgumentError("correlation_matrix: no variables");
  const std::size_t n = columns[0].size();
  if (n < 2) throw ArgumentError("correlation_matrix: need at least 2 samples");
  for (const auto& c : columns)
    if (c.size() != n) throw ArgumentError("correlation_matrix: ragged columns");

  std::vector<double> mean(k, 0.0), sd(k, 0.0);
  for (std::size_t v = 0; v < k; ++v) {
    for (double x : columns[v]) mean[v] += x;
    mean[v] /= static_cast<double>(n);
    for (double x : columns[v]) sd[v] += (x - mean[v]) * (x - mean[v]);
    sd[v] = std::sqrt(sd[v]);
  }

  CorrelationMatrix m;
  m.names = names;
  m.values.assign(k * k, std::numeric_limits<double>::quiet_NaN());
  m.missing.assign(k * k, false);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      if (sd[i] == 0.0 || sd[j] == 0.0) {
        m.missing[i * k + j] = true;
        continue;
      }
      if (i == j) {
        m.values[i * k + j] = 1.0;
        continue;
      }
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r)
        s += (columns[i][r] - mean[i]) * (columns[j][r] - mean[j]);
      m.values[i * k + j] = std::clamp(s / (sd[i] * sd[j]), -1.0, 1.0);
    }
  return m;
}

//! Gaussian smoothing of a uniform-grid series by circular convolution via the
//! fast transform. `width` is the kernel standard deviation in grid units;
//! zero width is the identity.
inline std::vector<double> gaussian_smooth(const std::vector<double>& series,
                                           double width) {
  if (width < 0.0) throw ArgumentError("gaussian_smooth: width must be >= 0");
  if (series.empty()) return series;
  if (width == 0.0) return series;
  const std::size_t n = series.size();
  std::vector<double> kernel(n, 0.0);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = std::min<double>(static_cast<double>(j),
                                      static_cast<double>(n - j));
    kernel[j] = std::exp(-0.5 * (d / width) * (d / width));
    sum += kernel[j];
  }
  for (double& v : kernel) v /= sum;
  return circular_convolve(series, kernel);
}

//! Uniform 3D scalar field (cell-centered values, x fastest).
struct GriddedField3D {
  std::array<double, 3> origin{0.0, 0.0, 0.0};   // center of cell (0,0,0)
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::array<int, 3> dims{0, 0, 0};
  std::vector<double> values;

  double at(int i, int j, int k) const {
    return values[(static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i];
  }
};

//! Mean of the field over grid cells whose centers lie within radius r of c.
inline double sphere_average(const GriddedField3D& field,
                             const std::array<double, 3>& center, double r) {
  if (r <= 0.0) throw ArgumentError("sphere_average: radius must be > 0");
  double sum = 0.0;
  std::int64_t count = 0;
  for (int k = 0; k < field.dims[2]; ++k)
    for (int j = 0; j < field.dims[1]; ++j)
      for (int i = 0; i < field.dims[0]; ++i) {
        const double dx = field.origin[0] + i * field.spacing[0] - center[0];
        const double dy = field.origin[1] + j * field.spacing[1] - center[1];
        const double dz = field.origin[2] + k * field.spacing[2] - center[2];
        if (dx * dx + dy * dy + dz * dz <= r * r) {
          sum += field.at(i, j, k);
          ++count;
        }
      }
  if (count == 0)
    throw ArgumentError("sphere_average: sphere contains no grid cells");
  return sum / static_cast<double>(count);
}

//! Aligned time-series pair samples per difference level ([sample][time]).
struct SeriesPairLevel {
  int level = 0;
  std::vector<std::vector<double>> fine;
  std::vector<std::vector<double>> coarse;
};

//! Per-time-point mean with median and percentile bands.
//!
//! The mean telescopes across levels with the campaign coefficients; median
//! and band bounds are single-level empirical percentiles on the finest level
//! holding at least two samples (nearest-rank for the bounds, middle average
//! for the median).
struct ConfidenceBands {
  std::vector<double> mean;
  std::vector<double> median;
  std::vector<double> p5, p25, p75, p95;
  int percentile_level = 0;  // level whose samples produced the bands
};

namespace detail {

inline double nearest_rank(const std::vector<double>& sorted, double pct) {
  const std::size_t n = sorted.size();
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(pct / 100.0 * static_cast<double>(n)));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  return sorted[rank - 1];
}

}  // namespace detail

inline ConfidenceBands confidence_bands(const std::vector<SeriesPairLevel>& levels,
                                        const CoefficientVector& cv) {
  if (levels.empty() || cv.num_levels() != static_cast<int>(levels.size()))
    throw ArgumentError("confidence_bands: dimension mismatch");
  int band_level = -1;
  for (int l = static_cast<int>(levels.size()) - 1; l >= 0; --l)
    if (levels[l].fine.size() >= 2) {
      band_level = l;
      break;
    }
  if (band_level < 0)
    throw ArgumentError("confidence_bands: need >= 2 samples on some level");
  const std::size_t npts = levels[band_level].fine[0].size();

  ConfidenceBands out;
  out.percentile_level = band_level;
  out.mean.assign(npts, 0.0);
  out.median.assign(npts, 0.0);
  out.p5.assign(npts, 0.0);
  out.p25.assign(npts, 0.0);
  out.p75.assign(npts, 0.0);
  out.p95.assign(npts, 0.0);

  // Telescoping mean per time point.
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const auto& lv = levels[l];
    if (lv.fine.empty())
      throw ArgumentError("confidence_bands: empty level " + std::to_string(l));
    const double n = static_cast<double>(lv.fine.size());
    for (std::size_t s = 0; s < lv.fine.size(); ++s)
      for (std::size_t t = 0; t < npts; ++t) {
        double term = cv.alpha[l] * lv.fine[s][t];
        if (l > 0) term -= cv.alpha[l - 1] * lv.coarse[s][t];
        out.mean[t] += term / n;
      }
  }

  std::vector<double> column(levels[band_level].fine.size());
  for (std::size_t t = 0; t < npts; ++t) {
    for (std::size_t s = 0; s < column.size(); ++s)
      column[s] = levels[band_level].fine[s][t];
    std::sort(column.begin(), column.end());
    const std::size_t n = column.size();
    out.median[t] = n % 2 == 1 ? column[n / 2]
                               : 0.5 * (column[n / 2 - 1] + column[n / 2]);
    out.p5[t] = detail::nearest_rank(column, 5.0);
    out.p25[t] = detail::nearest_rank(column, 25.0);
    out.p75[t] = detail::nearest_rank(column, 75.0);
    out.p95[t] = detail::nearest_rank(column, 95.0);
  }
  return out;
}

}  // namespace ofmlmc
