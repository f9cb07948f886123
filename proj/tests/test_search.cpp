#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "discordnet/search.hpp"

using namespace discordnet;

namespace {

SearchSpec box(std::size_t d, double lo, double hi) {
  SearchSpec s;
  s.dimension = d;
  s.lower.assign(d, lo);
  s.upper.assign(d, hi);
  return s;
}

}  // namespace

TEST(Search, FindsQuadraticMinimum) {
  auto s = box(3, -2, 2);
  s.grid_points = 7;
  const auto r = optimize(
      [](const std::vector<double>& x) {
        return std::pow(x[0] - 0.3, 2) + 2 * std::pow(x[1] + 0.7, 2) + 0.5 * std::pow(x[2] - 1.1, 2);
      },
      s);
  EXPECT_NEAR(r.argopt[0], 0.3, 1e-3);
  EXPECT_NEAR(r.argopt[1], -0.7, 1e-3);
  EXPECT_NEAR(r.argopt[2], 1.1, 1e-3);
  EXPECT_LT(r.value, 1e-8);
  EXPECT_TRUE(r.converged);
}

TEST(Search, MaximizeFindsGlobalPeakAmongLocalOnes) {
  auto s = box(1, 0, 10);
  s.maximize = true;
  s.grid_points = 41;
  const auto r = optimize([](const std::vector<double>& x) { return std::sin(x[0]) + 0.1 * x[0]; }, s);
  EXPECT_NEAR(r.argopt[0], 2 * std::numbers::pi + std::acos(-0.1), 1e-3);
}

TEST(Search, TieGroupsForceEqualCoordinates) {
  auto s = box(2, -1, 1);
  s.tie_groups = {{0, 1}};
  const auto r = optimize([](const std::vector<double>& x) { return std::pow(x[0] - 0.5, 2) + std::pow(x[1] + 0.5, 2); }, s);
  EXPECT_DOUBLE_EQ(r.argopt[0], r.argopt[1]);
  EXPECT_NEAR(r.argopt[0], 0.0, 1e-3);
}

TEST(Search, DeterministicAcrossRuns) {
  auto s = box(4, 0, 1);
  s.max_grid = 0;
  s.random_samples = 200;
  auto f = [](const std::vector<double>& x) { return std::cos(7 * x[0]) * std::sin(5 * x[1]) + x[2] * x[3]; };
  const auto a = optimize(f, s), b = optimize(f, s);
  EXPECT_EQ(a.argopt, b.argopt);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(Search, ThreadCountDoesNotChangeResult) {
  auto s = box(2, -3, 3);
  s.grid_points = 15;
  auto f = [](const std::vector<double>& x) { return std::sin(3 * x[0]) + std::cos(2 * x[1]) + 0.1 * x[0] * x[1]; };
  const auto one = optimize(f, s);
  s.threads = 4;
  const auto four = optimize(f, s);
  EXPECT_EQ(one.argopt, four.argopt);
  EXPECT_EQ(one.value, four.value);
}

TEST(Search, ExtraStartsOnlyMeansPureNelderMead) {
  auto s = box(2, -5, 5);
  s.max_grid = 0;
  s.random_samples = 0;
  s.multistarts = 0;
  s.extra_starts = {{1.0, 1.0}};
  const auto r = optimize([](const std::vector<double>& x) { return x[0] * x[0] + x[1] * x[1]; }, s);
  EXPECT_NEAR(r.value, 0.0, 1e-10);
}

TEST(Search, InvalidSpecsRejected) {
  auto f = [](const std::vector<double>&) { return 0.0; };
  SearchSpec s;
  EXPECT_THROW(optimize(f, s), ConfigError);
  s = box(2, 0, 1);
  s.upper = {1};
  EXPECT_THROW(optimize(f, s), ConfigError);
  s = box(1, 1, 0);
  EXPECT_THROW(optimize(f, s), ConfigError);
  s = box(1, 0, 1);
  s.grid_points = 1;
  EXPECT_THROW(optimize(f, s), ConfigError);
}

TEST(Search, UniformAverageOfLinearFunctionIsCenterValue) {
  auto f = [](const std::vector<double>& x) { return 2 * x[0] - x[1] + 3; };
  EXPECT_NEAR(uniform_average(f, {0.5, 0.2}, 0.4, 21, {0, 1}), f({0.5, 0.2}), 1e-12);
  auto q = [](const std::vector<double>& x) { return x[0] * x[0]; };
  // mean of t^2 over 3 points {-1, 0, 1}
  EXPECT_NEAR(uniform_average(q, {0.0}, 2.0, 3, {0}), 2.0 / 3, 1e-12);
}

TEST(Search, SweepKeepsOrderAndParameter) {
  SweepSpec sw;
  sw.experiment = "sq";
  sw.parameter = "x";
  sw.values = {3, 1, 2};
  sw.threads = 2;
  sw.evaluate = [](double x) {
    SweepRecord r;
    r.values = {{"y", x * x}};
    return r;
  };
  const auto rows = run_sweep(sw);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].param("x"), 3);
  EXPECT_EQ(rows[1].value("y"), 1);
  EXPECT_EQ(rows[2].experiment, "sq");
  sw.values.clear();
  EXPECT_THROW(run_sweep(sw), ConfigError);
}

TEST(Search, ParallelMapPropagatesExceptions) {
  EXPECT_THROW(parallel_map(8, [](std::size_t i) -> int {
    if (i == 5) throw std::runtime_error("boom");
    return 0;
  }, 3), std::runtime_error);
}

TEST(Search, RangesHelpers) {
  const auto r = step_range(0.0, 0.1, 0.005);
  EXPECT_EQ(r.size(), 21u);
  EXPECT_NEAR(r.back(), 0.1, 1e-15);
  const auto l = linspace(0, 1, 5);
  EXPECT_EQ(l[2], 0.5);
  EXPECT_THROW(step_range(0, 1, 0), std::invalid_argument);
}
