#include "fkmd/kernels.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace fkmd;

namespace {
const Domain kUnit = Domain::interval(0.0, 1.0);
const IntervalLaplacian kUnitKernel{0.0, 1.0, 1.0};
KernelSpec unit_kernel() { return *kernel_for(DivergenceForm::laplacian(1, 1.0), kUnit); }
}  // namespace

TEST(GreenInterval, Values) {
  EXPECT_NEAR(green_interval(kUnitKernel, 0.25, 0.5), 0.125, 1e-15);
  EXPECT_NEAR(green_interval(kUnitKernel, 0.5, 0.5), 0.25, 1e-15);
  EXPECT_NEAR(green_interval({0.0, 1.0, 0.5}, 0.25, 0.5), 0.25, 1e-15);
  EXPECT_THROW(green_interval(kUnitKernel, 0.0, 0.5), Error);
}

TEST(GreenInterval, Symmetric) {
  for (double x = 0.05; x < 1.0; x += 0.1)
    for (double y = 0.05; y < 1.0; y += 0.15) EXPECT_EQ(green_interval(kUnitKernel, x, y), green_interval(kUnitKernel, y, x));
}

TEST(PotentialRmu, Examples) {
  const auto k = unit_kernel();
  EXPECT_NEAR(potential_Rmu(k, MeasureData::dirac(scalar_vec(0.5)), scalar_vec(0.25)), 0.125, 1e-15);
  EXPECT_EQ(potential_Rmu(k, MeasureData::zero(), scalar_vec(0.3)), 0.0);
  EXPECT_NEAR(potential_Rmu(k, MeasureData::with_density(1.0), scalar_vec(0.5)), 0.125, 1e-12);
  EXPECT_NEAR(potential_Rmu(k, MeasureData::with_density(1.0), scalar_vec(0.3)), 0.105, 1e-12);
}

// Mollified atoms converge to the atomic potential at first order.
TEST(PotentialRmu, MollificationBiasIsFirstOrder) {
  const auto k = unit_kernel();
  const auto mu = MeasureData::dirac(scalar_vec(0.5));
  const double exact = 0.25;
  const double b1 = potential_Rmu(k, mollify(mu, 0.04, kUnit), scalar_vec(0.5)) - exact;
  const double b2 = potential_Rmu(k, mollify(mu, 0.02, kUnit), scalar_vec(0.5)) - exact;
  EXPECT_NEAR(b1, -0.04 / 6.0, 1e-10);
  EXPECT_NEAR(b1 / b2, 2.0, 1e-6);
  // Away from the atom the hat is integrated exactly by the linear kernel.
  EXPECT_NEAR(potential_Rmu(k, mollify(mu, 0.04, kUnit), scalar_vec(0.25)), 0.125, 1e-12);
}

TEST(Copotential, SymmetricKernelMatchesPotential) {
  const auto k = unit_kernel();
  for (double x : {0.1, 0.5, 0.8}) {
    const double co = copotential(k, [](const Vec&) { return 1.0; }, scalar_vec(x));
    EXPECT_NEAR(co, potential_Rmu(k, MeasureData::with_density(1.0), scalar_vec(x)), 1e-13);
    EXPECT_LE(co, 0.125 + 1e-13);
  }
}

TEST(Copotential, DriftKernelIsNotSelfAdjoint) {
  auto op = DivergenceForm::laplacian(1, 1.0);
  op.b = scalar_vec(3.0);
  const auto fd = std::make_shared<const DiscreteKernel>(DiscreteKernel::build(op, 0.0, 1.0, 401));
  const KernelSpec k{fd};
  const auto one = [](const Vec&) { return 1.0; };
  const double forward = potential_Rmu(k, MeasureData::with_density(1.0), scalar_vec(0.3));
  const double co = copotential(k, one, scalar_vec(0.3));
  EXPECT_GT(std::abs(forward - co), 1e-3);
  // The adjoint swaps the arguments back.
  EXPECT_NEAR(copotential(adjoint(k), one, scalar_vec(0.3)), forward, 1e-9);
}

TEST(DiscreteKernel, MatchesClosedForm) {
  const auto fd = DiscreteKernel::build(DivergenceForm::laplacian(1, 1.0), 0.0, 1.0, 201);
  EXPECT_NEAR(fd(0.25, 0.5), 0.125, 1e-12);
  EXPECT_NEAR(fd(0.5, 0.5), 0.25, 1e-12);
}

TEST(StableExitMoment, Examples) {
  EXPECT_NEAR(stable_exit_moment(1.0, 1.0, 1, scalar_vec(0.0)), 1.0, 1e-14);
  EXPECT_NEAR(stable_exit_moment(1.0, 1.0, 1, scalar_vec(0.6)), 0.8, 1e-14);
  EXPECT_NEAR(stable_exit_moment(2.0, 1.0, 1, scalar_vec(0.0)), 0.5, 1e-14);
  EXPECT_NEAR(stable_exit_moment(1.999999, 1.0, 1, scalar_vec(0.0)), 0.5, 1e-5);
  EXPECT_THROW(stable_exit_moment(1.0, 1.0, 1, scalar_vec(1.0)), Error);
}

TEST(KernelFor, Availability) {
  EXPECT_TRUE(kernel_for(DivergenceForm::laplacian(1, 2.0), kUnit).has_value());
  auto drift = DivergenceForm::laplacian(1, 1.0);
  drift.b = scalar_vec(1.0);
  EXPECT_FALSE(kernel_for(drift, kUnit).has_value());
  FractionalLaplacian frac;
  EXPECT_TRUE(kernel_for(frac, Domain::interval(-1.0, 1.0)).has_value());
  EXPECT_THROW(copotential(*kernel_for(frac, Domain::interval(-1.0, 1.0)), [](const Vec&) { return 1.0; }, scalar_vec(0.0)), Error);
}
