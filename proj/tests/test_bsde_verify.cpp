#include "fkmd/bsde.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace fkmd;

namespace {
const Domain kUnit = Domain::interval(0.0, 1.0);

Problem laplace(MeasureData mu, Nonlinearity f = Nonlinearity::zero()) {
  return Problem{DivergenceForm::laplacian(1, 1.0), kUnit, std::move(f), std::move(mu)};
}

SolutionField parabola(const Grid& g) {
  return SolutionField::from_function(g, kUnit, [](const Vec& x) { return 0.5 * x[0] * (1.0 - x[0]); });
}
}  // namespace

TEST(Martingale, ZeroEverything) {
  const Grid g = Grid::over(kUnit, 11);
  const auto rep = martingale_residual(SolutionField(g, kUnit), laplace(MeasureData::zero()), scalar_vec(0.5), SimConfig{1e-3, 50.0, 1, 200});
  EXPECT_EQ(rep.max_drift, 0.0);
  EXPECT_TRUE(rep.pass);
  for (double m : rep.ensemble_means) EXPECT_EQ(m, 0.0);
}

TEST(Martingale, ExactSolutionPassesCorruptedFails) {
  const Grid g = Grid::over(kUnit, 201);
  const auto pb = laplace(MeasureData::with_density(1.0));
  const SimConfig sim{1e-3, 50.0, 2, 20000};
  const auto good = martingale_residual(parabola(g), pb, scalar_vec(0.5), sim);
  EXPECT_TRUE(good.pass);
  EXPECT_EQ(good.checkpoint_times.size(), 8u);
  EXPECT_NEAR(good.initial_value, 0.125, 1e-12);
  const auto bumped = SolutionField::from_function(g, kUnit, [](const Vec& x) {
    return 0.5 * x[0] * (1.0 - x[0]) + 0.1 * std::max(0.0, 1.0 - std::abs(x[0] - 0.5) / 0.25);
  });
  EXPECT_FALSE(martingale_residual(bumped, pb, scalar_vec(0.5), sim).pass);
}

TEST(Martingale, CheckpointsSnapToSteps) {
  const Grid g = Grid::over(kUnit, 21);
  const auto rep = martingale_residual(parabola(g), laplace(MeasureData::with_density(1.0)), scalar_vec(0.5),
                                       SimConfig{1e-2, 50.0, 3, 100}, {0.0149, 0.05, 0.051});
  ASSERT_EQ(rep.checkpoint_times.size(), 2u);
  EXPECT_NEAR(rep.checkpoint_times[0], 0.01, 1e-15);
  EXPECT_NEAR(rep.checkpoint_times[1], 0.05, 1e-15);
}

TEST(Horizon, ZeroDataStaysZero) {
  PicardConfig pc;
  pc.paths_per_node = 100;
  const auto rep = horizon_truncation(laplace(MeasureData::zero()), Grid::over(kUnit, 3), scalar_vec(0.5), {0.1, 0.2},
                                      SimConfig{1e-3, 50.0, 4, 100}, pc);
  for (const auto& row : rep.rows) EXPECT_EQ(row.value, 0.0);
}

TEST(Horizon, LebesgueIncreasesTowardOneEighth) {
  PicardConfig pc;
  pc.paths_per_node = 10000;
  const auto rep = horizon_truncation(laplace(MeasureData::with_density(1.0)), Grid::over(kUnit, 3), scalar_vec(0.5),
                                      {0.05, 0.1, 0.2, 0.4, 0.8}, SimConfig{1e-3, 50.0, 5, 10000}, pc);
  ASSERT_EQ(rep.rows.size(), 5u);
  for (std::size_t i = 1; i < rep.rows.size(); ++i) EXPECT_GT(rep.rows[i].value, rep.rows[i - 1].value);
  EXPECT_NEAR(rep.rows.back().value, 0.125, 3.0 * rep.rows.back().std_error + 1e-3);
  EXPECT_TRUE(rep.stabilized);
}

TEST(Horizon, OrnsteinUhlenbeckExponentialLaw) {
  const OrnsteinUhlenbeck op{Mat::Constant(1, 1, -1.0), Mat::Identity(1, 1), 1.0};
  const Problem pb{op, Domain::full_space(1), Nonlinearity::zero(), MeasureData::with_density(1.0)};
  PicardConfig pc;
  pc.paths_per_node = 10000;
  const auto rep = horizon_truncation(pb, Grid(scalar_vec(-1.0), scalar_vec(1.0), 3), scalar_vec(0.0), {0.5, 1.0, 2.0},
                                      SimConfig{1e-2, 50.0, 6, 10000}, pc);
  for (const auto& row : rep.rows) EXPECT_NEAR(row.value, 1.0 - std::exp(-row.horizon), 3.0 * row.std_error);
}

TEST(DriverBound, LinearDriver) {
  const Grid g = Grid::over(kUnit, 101);
  const Nonlinearity minus_y{[](const Vec&, double y) { return -y; }, true, false};
  const auto pb = laplace(MeasureData::with_density(1.0), minus_y);
  const auto u = SolutionField::from_function(g, kUnit, [](const Vec& x) { return 0.1 * std::sin(3.14159265358979 * x[0]); });
  const auto rep = driver_l1_bound_check(u, pb, scalar_vec(0.5), SimConfig{1e-3, 50.0, 7, 5000});
  EXPECT_TRUE(rep.pass());
  EXPECT_LT(rep.lhs, rep.rhs);
  EXPECT_NEAR(rep.rhs, 0.125, 1e-9);
}
