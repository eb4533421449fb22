#include <doctest.h>

#include <cmath>
#include <ofmlmc/estimator.hpp>
#include <ofmlmc/random.hpp>
#include <vector>

using namespace ofmlmc;

namespace {

LevelIndicators make_indicators(std::vector<double> variance,
                                std::vector<double> cross_cov,
                                std::vector<double> work) {
  LevelIndicators ind;
  ind.num_levels = static_cast<int>(variance.size());
  ind.variance = std::move(variance);
  ind.cross_cov = std::move(cross_cov);
  ind.work = std::move(work);
  ind.variance_se.assign(ind.num_levels, 0.0);
  ind.cross_cov_se.assign(ind.num_levels, 0.0);
  ind.variance_inferred.assign(ind.num_levels, false);
  ind.cross_cov_inferred.assign(ind.num_levels, false);
  ind.diff_variance.assign(ind.num_levels, 0.0);
  ind.diff_variance_inferred.assign(ind.num_levels, false);
  ind.samples.assign(ind.num_levels, 2);
  ind.kurtosis.assign(ind.num_levels, 0.0);
  return ind;
}

// Oracle for the two-level case: golden-section minimization of the
// work-weighted variance cost over the single free coefficient.
double minimize_two_level_cost(const LevelIndicators& ind) {
  const double phi = 0.6180339887498949;
  double lo = -4.0, hi = 4.0;
  auto cost = [&](double a0) {
    CoefficientVector cv;
    cv.alpha = {a0, 1.0};
    return variance_reduction_cost(ind, cv);
  };
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = cost(x1), f2 = cost(x2);
  for (int i = 0; i < 120; ++i) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = cost(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = cost(x2);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("two-level optimal coefficient matches minimization oracle") {
  const auto ind = make_indicators({1.0, 1.0}, {0.0, 0.8}, {1.0, 16.0});
  const auto cv = optimal_coefficients(ind);
  REQUIRE(cv.alpha.size() == 2);
  CHECK(cv.alpha[1] == doctest::Approx(1.0));
  CHECK(cv.alpha[0] == doctest::Approx(16.0 / 17.0 * 0.8).epsilon(1e-12));
  CHECK(cv.alpha[0] == doctest::Approx(minimize_two_level_cost(ind)).epsilon(1e-8));
  // Closed form W_1/(W_1+W_0) * Cov/V to 1e-12.
  CHECK(std::fabs(cv.alpha[0] - 0.8 * 16.0 / 17.0) < 1e-12);
}

TEST_CASE("work-free coarse level reduces to the plain control variate") {
  const auto ind = make_indicators({1.0, 1.0}, {0.0, 1.0}, {0.0, 8.0});
  const auto cv = optimal_coefficients(ind);
  CHECK(cv.alpha[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("three-level coefficients match the hand-solved system") {
  const auto ind =
      make_indicators({1.0, 1.0, 1.0}, {0.0, 0.5, 0.5}, {1.0, 16.0, 256.0});
  const auto cv = optimal_coefficients(ind);
  REQUIRE(cv.alpha.size() == 3);
  CHECK(cv.alpha[0] == doctest::Approx(0.22456).epsilon(1e-4));
  CHECK(cv.alpha[1] == doctest::Approx(0.47719).epsilon(1e-4));
  CHECK(cv.alpha[2] == doctest::Approx(1.0));
}

TEST_CASE("singular systems fall back to unit coefficients") {
  auto ind = make_indicators({0.0, 1.0}, {0.0, 0.5}, {1.0, 4.0});
  const auto cv = optimal_coefficients(ind);
  CHECK(cv.fallback_unit);
  CHECK(cv.alpha[0] == doctest::Approx(1.0));
  CHECK(cv.alpha[1] == doctest::Approx(1.0));
}

TEST_CASE("optimal cost beats unit and perturbed coefficients") {
  RandomStream rng(0xc0ef5ULL);
  for (int trial = 0; trial < 25; ++trial) {
    const int levels = 2 + static_cast<int>(rng.uniform() * 5.0);  // 2..6
    std::vector<double> var(levels), cov(levels, 0.0), work(levels);
    double w = 1.0;
    for (int l = 0; l < levels; ++l) {
      var[l] = 0.2 + 2.0 * rng.uniform();
      work[l] = w;
      w *= 2.0 + 14.0 * rng.uniform();
    }
    for (int l = 1; l < levels; ++l) {
      const double cor = 1.9 * rng.uniform() - 0.95;
      cov[l] = cor * std::sqrt(var[l] * var[l - 1]);
    }
    const auto ind = make_indicators(var, cov, work);
    const auto cv = optimal_coefficients(ind);
    REQUIRE_FALSE(cv.fallback_unit);
    const double at_opt = variance_reduction_cost(ind, cv);
    CHECK(at_opt <= variance_reduction_cost(ind, unit_coefficients(levels)) + 1e-10);
    for (int p = 0; p < 100; ++p) {
      CoefficientVector pert = cv;
      for (int l = 0; l < levels - 1; ++l)
        pert.alpha[l] += 0.5 * rng.normal();
      CHECK(at_opt <= variance_reduction_cost(ind, pert) + 1e-10);
    }
  }
}

TEST_CASE("weighted difference variances") {
  SUBCASE("perfectly correlated levels vanish at unit coefficients") {
    const auto ind = make_indicators({1.0, 1.0}, {0.0, 1.0}, {1.0, 4.0});
    const auto wv = weighted_variances(ind, unit_coefficients(2));
    CHECK(wv.value[1] == doctest::Approx(0.0));
  }
  SUBCASE("base level scales with alpha squared") {
    const auto ind = make_indicators({4.0, 1.0}, {0.0, 0.0}, {1.0, 4.0});
    CoefficientVector cv;
    cv.alpha = {0.5, 1.0};
    CHECK(weighted_variances(ind, cv).value[0] == doctest::Approx(1.0));
  }
  SUBCASE("independent levels add") {
    const auto ind = make_indicators({1.0, 1.0}, {0.0, 0.0}, {1.0, 4.0});
    CHECK(weighted_variances(ind, unit_coefficients(2)).value[1] ==
          doctest::Approx(2.0));
  }
  SUBCASE("negative estimates clamp to zero") {
    // Covariance beyond Cauchy-Schwarz produces a negative variance estimate.
    const auto ind = make_indicators({1.0, 1.0}, {0.0, 1.2}, {1.0, 4.0});
    const auto wv = weighted_variances(ind, unit_coefficients(2));
    CHECK(wv.value[1] == doctest::Approx(0.0));
    CHECK(wv.clamped == 1);
  }
}

TEST_CASE("two-level variance laws at moderate correlation") {
  // Equal variances, correlation 0.4, work-free coarse level.
  const double cor = 0.4;
  const auto ind = make_indicators({1.0, 1.0}, {0.0, cor}, {0.0, 8.0});
  const auto cv = optimal_coefficients(ind);
  CHECK(cv.alpha[0] == doctest::Approx(cor).epsilon(1e-12));
  const auto at_opt = weighted_variances(ind, cv);
  CHECK(at_opt.value[1] == doctest::Approx(1.0 - cor * cor).epsilon(1e-12));
  // Unit coefficients fail to reduce the variance below 1/2 correlation.
  const auto at_unit = weighted_variances(ind, unit_coefficients(2));
  CHECK(at_unit.value[1] >= ind.variance[1]);
}

TEST_CASE("estimator error formula") {
  WeightedDifferenceVariances wv;
  wv.value = {1.0, 0.25};
  CHECK(estimator_error(wv, {200, 50}) == doctest::Approx(0.1).epsilon(1e-12));
  wv.value = {0.0, 0.0};
  CHECK(estimator_error(wv, {3, 7}) == doctest::Approx(0.0));
  wv.value = {1.0};
  CHECK(estimator_error(wv, {100}) == doctest::Approx(0.1));
}

TEST_CASE("coupled expectation") {
  SUBCASE("single level is the plain mean") {
    PairSamples l0;
    l0.fine = {1, 2, 3};
    CHECK(of_mlmc_expectation({l0}, unit_coefficients(1)) == doctest::Approx(2.0));
  }
  SUBCASE("telescoping by hand") {
    PairSamples l0, l1;
    l0.fine = {4, 5, 6};  // mean 5
    l1.level = 1;
    l1.fine = {2.0, 3.0};
    l1.coarse = {1.5, 2.5};  // difference mean 0.5
    CHECK(of_mlmc_expectation({l0, l1}, unit_coefficients(2)) ==
          doctest::Approx(5.5));
  }
  SUBCASE("constant fields are exact for any coefficients with alpha_L = 1") {
    const double c = 3.25;
    PairSamples l0, l1, l2;
    l0.fine = {c, c};
    l1.level = 1;
    l1.fine = {c, c, c};
    l1.coarse = {c, c, c};
    l2.level = 2;
    l2.fine = {c};
    l2.coarse = {c};
    RandomStream rng(77ULL);
    for (int trial = 0; trial < 20; ++trial) {
      CoefficientVector cv;
      cv.alpha = {rng.normal(), rng.normal(), 1.0};
      CHECK(of_mlmc_expectation({l0, l1, l2}, cv) ==
            doctest::Approx(c).epsilon(1e-14));
    }
  }
  SUBCASE("empty level raises") {
    PairSamples l0, l1;
    l0.fine = {1.0};
    l1.level = 1;
    CHECK_THROWS_AS(of_mlmc_expectation({l0, l1}, unit_coefficients(2)),
                    EstimatorError);
  }
}

TEST_CASE("single-level MC cost estimate reports both forms") {
  const auto r = mc_cost_estimate(2.0, 0.01, 1.0);
  CHECK(r.samples_as_published == 200);
  CHECK(r.samples_variance_consistent == 40000);
  CHECK(r.work_as_published == doctest::Approx(200.0));
  CHECK(r.work_variance_consistent == doctest::Approx(40000.0));

  CHECK(mc_cost_estimate(0.0, 0.1, 1.0).samples_as_published == 1);
  CHECK(mc_cost_estimate(0.5, 0.5, 2.0).samples_as_published == 1);
  CHECK_THROWS_AS(mc_cost_estimate(1.0, 0.0, 1.0), ArgumentError);
}
