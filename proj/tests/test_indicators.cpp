#include <doctest.h>

#include <ofmlmc/indicators.hpp>

using namespace ofmlmc;

namespace {

PairSamples level0(std::vector<double> values) {
  PairSamples ps;
  ps.level = 0;
  ps.fine = std::move(values);
  return ps;
}

PairSamples pairs(int level, std::vector<double> fine, std::vector<double> coarse) {
  PairSamples ps;
  ps.level = level;
  ps.fine = std::move(fine);
  ps.coarse = std::move(coarse);
  return ps;
}

}  // namespace

TEST_CASE("hand-computed moments for coupled pairs") {
  // Pairs (2,1), (4,3), (6,5): differences are constant 1, covariance is 4.
  const auto ind = estimate_indicators(
      {level0({1, 3, 5}), pairs(1, {2, 4, 6}, {1, 3, 5})});
  CHECK(ind.diff_variance[1] == doctest::Approx(0.0));
  CHECK(ind.cross_cov[1] == doctest::Approx(4.0));
  CHECK(ind.variance[1] == doctest::Approx(4.0));  // fine side of level 1
  CHECK(ind.samples[0] == 3);
  CHECK(ind.samples[1] == 3);
  CHECK_FALSE(ind.cross_cov_inferred[1]);
}

TEST_CASE("constant samples give zero variances") {
  const auto ind = estimate_indicators(
      {level0({2, 2, 2, 2}), pairs(1, {2, 2, 2}, {2, 2, 2})});
  CHECK(ind.variance[0] == doctest::Approx(0.0));
  CHECK(ind.variance[1] == doctest::Approx(0.0));
  CHECK(ind.cross_cov[1] == doctest::Approx(0.0));
  CHECK(ind.diff_variance[0] == doctest::Approx(0.0));
  CHECK(ind.diff_variance[1] == doctest::Approx(0.0));
}

TEST_CASE("single sample on the finest level is flagged inferred-required") {
  const auto ind = estimate_indicators(
      {level0({1, 2, 3, 4}), pairs(1, {1.5, 2.5, 3.5}, {1, 2, 3}),
       pairs(2, {2.0}, {1.9})});
  CHECK(ind.cross_cov_inferred[2]);
  CHECK(ind.variance_inferred[2]);
  CHECK(ind.diff_variance_inferred[2]);
  CHECK_FALSE(ind.cross_cov_inferred[1]);
  CHECK(ind.samples[2] == 1);
}

TEST_CASE("zero valid samples at a level raises an indicator error") {
  std::vector<PairSamples> levels = {level0({1, 2}), pairs(1, {}, {})};
  try {
    estimate_indicators(levels);
    FAIL("expected IndicatorError");
  } catch (const IndicatorError& e) {
    CHECK(e.level == 1);
  }
}

TEST_CASE("level variance pools fine side with the next level's coarse side") {
  // Level 0 values {0,2} and coarse side of level 1 {4,6}: pooled variance of
  // {0,2,4,6} is 20/3.
  const auto ind =
      estimate_indicators({level0({0, 2}), pairs(1, {4.5, 6.5}, {4, 6})});
  CHECK(ind.variance[0] == doctest::Approx(20.0 / 3.0));
}

TEST_CASE("measured work averages fine and coarse evaluations per level") {
  PairSamples l0 = level0({1, 2, 3});
  l0.fine_work = {1.0, 1.2, 0.8};
  PairSamples l1 = pairs(1, {1, 2}, {1, 2});
  l1.fine_work = {4.0, 4.4};
  l1.coarse_work = {1.0, 1.0};
  const auto ind = estimate_indicators({l0, l1});
  CHECK(ind.work[0] == doctest::Approx(1.0));  // {1,1.2,0.8,1,1}
  CHECK(ind.work[1] == doctest::Approx(4.2));
  CHECK(ind.pair_cost(1) == doctest::Approx(5.2));
}

TEST_CASE("inferred variances fill from the nearest measured level") {
  auto ind = estimate_indicators(
      {level0({1, 2, 3}), pairs(1, {1, 2, 3}, {0, 1, 2}), pairs(2, {1.5}, {1.4})});
  REQUIRE(ind.variance_inferred[2]);
  fill_inferred_variances(ind);
  CHECK(ind.variance[2] == doctest::Approx(ind.variance[1]));
}

TEST_CASE("cross covariances are clamped into the Cauchy-Schwarz bound") {
  LevelIndicators ind;
  ind.num_levels = 2;
  ind.variance = {1.0, 1.0};
  ind.cross_cov = {0.0, 1.7};
  const int clamped = clamp_cauchy_schwarz(ind);
  CHECK(clamped == 1);
  CHECK(ind.cross_cov[1] == doctest::Approx(1.0));
}
