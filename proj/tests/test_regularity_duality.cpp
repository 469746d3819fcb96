#include "fkmd/regularity.hpp"
#include "fkmd/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace fkmd;

namespace {
constexpr double kPi = std::numbers::pi;
const Domain kUnit = Domain::interval(0.0, 1.0);
const DivergenceForm kLap = DivergenceForm::laplacian(1, 1.0);

SolutionField green_half(const Grid& g) {
  return SolutionField::from_function(g, kUnit, [](const Vec& x) { return std::min(x[0], 0.5) * (1.0 - std::max(x[0], 0.5)); });
}

SolutionField parabola(const Grid& g) {
  return SolutionField::from_function(g, kUnit, [](const Vec& x) { return 0.5 * x[0] * (1.0 - x[0]); });
}

KernelSpec unit_kernel() { return *kernel_for(kLap, kUnit); }
}  // namespace

TEST(Energy, DiracSharpAtMaxAndCappedBelow) {
  const Grid g = Grid::over(kUnit, 1001);
  const auto rep = energy_estimate_check(green_half(g), kLap, Nonlinearity::zero(), MeasureData::dirac(scalar_vec(0.5)), {0.125, 0.25});
  EXPECT_TRUE(rep.pass);
  EXPECT_NEAR(rep.energies[1], 0.25, 1e-3);
  EXPECT_NEAR(rep.bounds[1], 0.25, 1e-12);
  // Capped tent: |u'| = 1/2 on [0, 1/4] and [3/4, 1], energy 1/8, sharp again.
  EXPECT_NEAR(rep.energies[0], 0.125, 1e-3);
  EXPECT_NEAR(rep.bounds[0], 0.125, 1e-12);
}

TEST(Energy, MonotoneInCapAndIdempotentAboveMax) {
  const Grid g = Grid::over(kUnit, 501);
  const auto u = parabola(g);
  const auto rep = energy_estimate_check(u, kLap, Nonlinearity::zero(), MeasureData::with_density(1.0), {0.02, 0.05, 0.1, 0.125, 0.5});
  for (std::size_t i = 1; i < rep.energies.size(); ++i) EXPECT_GE(rep.energies[i], rep.energies[i - 1]);
  EXPECT_EQ(rep.energies[3], dirichlet_energy(kLap, u));
  EXPECT_EQ(rep.energies[4], dirichlet_energy(kLap, u));
}

TEST(Energy, ZeroFieldAndOuRejected) {
  const Grid g = Grid::over(kUnit, 51);
  const auto rep = energy_estimate_check(SolutionField(g, kUnit), kLap, Nonlinearity::zero(), MeasureData::with_density(1.0), {0.1, 1.0});
  for (double e : rep.energies) EXPECT_EQ(e, 0.0);
  EXPECT_TRUE(rep.pass);
  const OrnsteinUhlenbeck ou{Mat::Constant(1, 1, -1.0), Mat::Identity(1, 1), 1.0};
  const Grid full(scalar_vec(-1.0), scalar_vec(1.0), 11);
  EXPECT_THROW(energy_estimate_check(SolutionField(full, Domain::full_space(1)), ou, Nonlinearity::zero(), MeasureData::zero(), {1.0}), Error);
}

TEST(L1Estimate, Examples) {
  const Grid g = Grid::over(kUnit, 201);
  const auto zero_f = l1_estimate_check(parabola(g), Nonlinearity::zero(), MeasureData::with_density(1.0), kLap);
  EXPECT_EQ(zero_f.l1_f_u, 0.0);
  EXPECT_TRUE(zero_f.pass);

  const auto mu = MeasureData::with_density(ScalarField([](const Vec& x) {
    const double s = std::sin(kPi * x[0]);
    return kPi * kPi * s + s * s * s;
  }));
  const Nonlinearity cube{[](const Vec&, double y) { return -y * y * y; }, true, false};
  const auto sine = SolutionField::from_function(g, kUnit, [](const Vec& x) { return std::sin(kPi * x[0]); });
  const auto man = l1_estimate_check(sine, cube, mu, kLap);
  EXPECT_NEAR(man.l1_f_u, 4.0 / (3.0 * kPi), 1e-4);
  EXPECT_NEAR(man.bound, 2.0 * kPi + 4.0 / (3.0 * kPi), 1e-6);
  EXPECT_TRUE(man.pass);

  const Nonlinearity minus_y{[](const Vec&, double y) { return -y; }, true, false};
  const auto lin = l1_estimate_check(green_half(g), minus_y, MeasureData::dirac(scalar_vec(0.5)), kLap);
  EXPECT_NEAR(lin.l1_f_u, 0.125, 1e-4);
  EXPECT_LE(lin.l1_f_u, 1.0);
}

TEST(Duality, LebesgueBothSidesOneTwelfth) {
  const Grid g = Grid::over(kUnit, 10001);
  const auto rep = duality_check(parabola(g), Nonlinearity::zero(), MeasureData::with_density(1.0), unit_kernel(), default_test_measures());
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_EQ(rep.rows[0].nu_id, "lebesgue");
  EXPECT_NEAR(rep.rows[0].lhs, 1.0 / 12.0, 1e-8);
  EXPECT_NEAR(rep.rows[0].rhs, 1.0 / 12.0, 1e-10);
  for (const auto& row : rep.rows) EXPECT_LE(row.residual, 1e-6);
  EXPECT_TRUE(rep.pass);
}

TEST(Duality, DiracAndAsymmetricDensity) {
  const Grid g = Grid::over(kUnit, 10001);
  const auto rep = duality_check(green_half(g), Nonlinearity::zero(), MeasureData::dirac(scalar_vec(0.5)), unit_kernel(),
                                 default_test_measures(), {}, 1e-6);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.rows[1].nu_id, "density_2x");
  // int 2x G(x, 1/2) dx = 1/8.
  EXPECT_NEAR(rep.rows[1].rhs, 0.125, 1e-10);
}

TEST(Duality, ZeroEverything) {
  const Grid g = Grid::over(kUnit, 101);
  const auto rep = duality_check(SolutionField(g, kUnit), Nonlinearity::zero(), MeasureData::zero(), unit_kernel(), default_test_measures());
  for (const auto& row : rep.rows) {
    EXPECT_EQ(row.lhs, 0.0);
    EXPECT_EQ(row.rhs, 0.0);
  }
  EXPECT_TRUE(rep.pass);
}

TEST(Duality, WrongFieldFails) {
  const Grid g = Grid::over(kUnit, 1001);
  const auto off = parabola(g).map([](double v) { return 1.2 * v; });
  EXPECT_FALSE(duality_check(off, Nonlinearity::zero(), MeasureData::with_density(1.0), unit_kernel(), default_test_measures()).pass);
}

TEST(WeakSolution, LinearAndManufactured) {
  const Grid g = Grid::over(kUnit, 1000);
  const auto sine = SolutionField::from_function(g, kUnit, [](const Vec& x) { return std::sin(kPi * x[0]); });
  const auto bubble = SolutionField::from_function(g, kUnit, [](const Vec& x) { return x[0] * (1.0 - x[0]); });
  const auto lin = weak_solution_check(parabola(g), Nonlinearity::zero(), MeasureData::with_density(1.0), kLap,
                                       {sine, SolutionField(g, kUnit)});
  EXPECT_TRUE(lin.pass);
  EXPECT_NEAR(lin.rows[0].lhs, 2.0 / kPi, 1e-4);
  EXPECT_EQ(lin.rows[1].lhs, 0.0);
  EXPECT_EQ(lin.rows[1].rhs, 0.0);

  const auto mu = MeasureData::with_density(ScalarField([](const Vec& x) {
    const double s = std::sin(kPi * x[0]);
    return kPi * kPi * s + s * s * s;
  }));
  const Nonlinearity cube{[](const Vec&, double y) { return -y * y * y; }, true, false};
  EXPECT_TRUE(weak_solution_check(sine, cube, mu, kLap, {bubble}).pass);
}

TEST(WeakSolution, RejectsBoundaryValues) {
  const Grid g = Grid::over(kUnit, 101);
  // A wider domain keeps the grid's edge nodes active, so they can be nonzero.
  const auto bad = SolutionField::from_function(g, Domain::interval(-1.0, 2.0), [](const Vec&) { return 1.0; });
  EXPECT_THROW(weak_solution_check(parabola(g), Nonlinearity::zero(), MeasureData::with_density(1.0), kLap, {bad}), Error);
}
