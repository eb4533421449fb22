#include <doctest.h>

#include <ofmlmc/levels.hpp>

using namespace ofmlmc;

TEST_CASE("work_model evaluates base * 2^(rate*level)") {
  CHECK(work_model(0, 1.0, 4.0) == doctest::Approx(1.0));
  CHECK(work_model(3, 1.0, 4.0) == doctest::Approx(4096.0));  // 2^12
  CHECK(work_model(2, 2.0, 1.0) == doctest::Approx(8.0));
  CHECK_THROWS_AS(work_model(-1, 1.0, 4.0), ArgumentError);
  CHECK_THROWS_AS(work_model(0, 0.0, 4.0), ArgumentError);
}

TEST_CASE("warmup allocation for the 2^(4l) hierarchy") {
  const auto h = LevelHierarchy::geometric(4, 1.0, 4.0);
  const auto m = warmup_allocation(h);
  REQUIRE(m.size() == 4);
  CHECK(m[0] == 512);
  CHECK(m[1] == 64);
  CHECK(m[2] == 8);
  CHECK(m[3] == 1);
}

TEST_CASE("warmup allocation single level") {
  const auto h = LevelHierarchy::geometric(1, 7.0, 4.0);
  const auto m = warmup_allocation(h);
  REQUIRE(m.size() == 1);
  CHECK(m[0] == 1);
}

TEST_CASE("warmup allocation hand-evaluated r=2 case") {
  const auto h = LevelHierarchy::geometric(3, 1.0, 2.0);  // W = 1, 4, 16
  const auto m = warmup_allocation(h);
  REQUIRE(m.size() == 3);
  CHECK(m[0] == 4);
  CHECK(m[1] == 2);
  CHECK(m[2] == 1);
}

TEST_CASE("warmup allocation properties across hierarchies") {
  for (double rate : {1.5, 2.0, 3.0, 4.0}) {
    for (int levels = 1; levels <= 6; ++levels) {
      const auto h = LevelHierarchy::geometric(levels, 1.0, rate);
      const auto m = warmup_allocation(h);
      CHECK(m.back() == 1);  // one warm-up sample on the finest level
      for (std::size_t l = 1; l < m.size(); ++l) CHECK(m[l] <= m[l - 1]);
    }
  }
  // Cost bound for the default r = 4 hierarchy, pair costs for l >= 1.
  const auto h = LevelHierarchy::geometric(4, 1.0, 4.0);
  const auto m = warmup_allocation(h);
  double cost = 0.0;
  for (int l = 0; l < h.num_levels(); ++l)
    cost += static_cast<double>(m[l]) * h.pair_cost(l);
  CHECK(cost <= 2.5 * h.work_per_sample.back());
}

TEST_CASE("hierarchy validation") {
  LevelHierarchy h;
  h.work_per_sample = {1.0, 1.0};
  CHECK_THROWS_AS(h.validate(), ArgumentError);
  h.work_per_sample = {1.0, 4.0};
  CHECK_NOTHROW(h.validate());
  CHECK(h.pair_cost(0) == doctest::Approx(1.0));
  CHECK(h.pair_cost(1) == doctest::Approx(5.0));
}
