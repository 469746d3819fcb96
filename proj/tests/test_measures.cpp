#include "fkmd/measures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace fkmd;

namespace {
constexpr double kPi = std::numbers::pi;
const Domain kUnit = Domain::interval(0.0, 1.0);

MeasureData two_atoms() {
  MeasureData mu = MeasureData::dirac(scalar_vec(0.5), 1.0);
  mu.atoms.push_back({scalar_vec(0.75), -2.0});
  return mu;
}
}  // namespace

TEST(TotalVariation, Atoms) { EXPECT_NEAR(total_variation(two_atoms(), kUnit), 3.0, 1e-15); }

TEST(TotalVariation, UnitDensity) { EXPECT_NEAR(total_variation(MeasureData::with_density(1.0), kUnit), 1.0, 1e-12); }

// int pi^2 sin + sin^3 = 2 pi + 4 / (3 pi).
TEST(TotalVariation, ManufacturedDensity) {
  const auto mu = MeasureData::with_density(ScalarField([](const Vec& x) {
    const double s = std::sin(kPi * x[0]);
    return kPi * kPi * s + s * s * s;
  }));
  EXPECT_NEAR(total_variation(mu, kUnit), 2.0 * kPi + 4.0 / (3.0 * kPi), 1e-8);
}

TEST(Truncate, Examples) {
  EXPECT_EQ(truncate(2.0, 3.0), 2.0);
  EXPECT_EQ(truncate(2.0, -5.0), -2.0);
  EXPECT_EQ(truncate(2.0, 1.0), 1.0);
}

TEST(Truncate, IdempotentAndLipschitz) {
  for (double y = -4.0; y <= 4.0; y += 0.37) {
    EXPECT_EQ(truncate(1.5, truncate(1.5, y)), truncate(1.5, y));
    EXPECT_LE(std::abs(truncate(1.5, y) - truncate(1.5, y + 0.1)), 0.1 + 1e-15);
  }
}

TEST(Mollify, SingleAtomKeepsMass) {
  const auto m = mollify(MeasureData::dirac(scalar_vec(0.5)), 0.1, kUnit);
  EXPECT_TRUE(m.atoms.empty());
  ASSERT_EQ(m.bumps.size(), 1u);
  EXPECT_NEAR(m.density_at(scalar_vec(0.5)), 10.0, 1e-12);
  EXPECT_EQ(m.density_at(scalar_vec(0.65)), 0.0);
  EXPECT_NEAR(total_variation(m, kUnit), 1.0, 1e-12);
}

TEST(Mollify, EmptyStaysEmpty) { EXPECT_TRUE(mollify(MeasureData::zero(), 0.1, kUnit).empty()); }

TEST(Mollify, SignedAtomsKeepTotalVariation) {
  const auto m = mollify(two_atoms(), 0.05, kUnit);
  EXPECT_EQ(m.bumps.size(), 2u);
  EXPECT_NEAR(total_variation(m, kUnit), 3.0, 1e-12);
  for (double eps : {0.12, 0.1, 0.01}) EXPECT_NEAR(total_variation(mollify(two_atoms(), eps, kUnit), kUnit), 3.0, 1e-12);
}

TEST(CheckMonotone, Examples) {
  EXPECT_TRUE(check_monotone({[](const Vec&, double y) { return -y * y * y; }, true, false}, kUnit, 200));
  EXPECT_FALSE(check_monotone({[](const Vec&, double y) { return y; }, true, false}, kUnit, 200));
  EXPECT_TRUE(check_monotone({[](const Vec& x, double y) { return -y + std::sin(x[0]); }, true, false}, kUnit, 200));
}

TEST(ClassR, Lebesgue) {
  const auto rep = is_class_R(MeasureData::with_density(1.0), DivergenceForm::laplacian(1, 1.0), kUnit,
                              {scalar_vec(0.25), scalar_vec(0.5)});
  EXPECT_TRUE(rep.in_class);
  EXPECT_TRUE(rep.exact_kernel);
  EXPECT_NEAR(rep.values[1], 0.125, 1e-10);
  EXPECT_NEAR(rep.values[0], 0.09375, 1e-10);
}

TEST(ClassR, ZeroMeasure) {
  const auto rep = is_class_R(MeasureData::zero(), DivergenceForm::laplacian(1, 1.0), kUnit, {scalar_vec(0.5)});
  EXPECT_TRUE(rep.in_class);
  EXPECT_EQ(rep.values[0], 0.0);
}

// Density 1/dist(x, boundary): infinite total variation, finite potential.
TEST(ClassR, InfiniteTotalVariationStillInClass) {
  const auto mu = MeasureData::with_density(ScalarField([](const Vec& x) { return 1.0 / std::min(x[0], 1.0 - x[0]); }));
  const auto rep = is_class_R(mu, DivergenceForm::laplacian(1, 1.0), kUnit, {scalar_vec(0.25), scalar_vec(0.5)});
  EXPECT_FALSE(rep.tv_finite);
  EXPECT_TRUE(std::isinf(rep.total_variation));
  EXPECT_TRUE(rep.in_class);
  // R mu(1/2) = 2 int_0^{1/2} y (1/2) / y dy = 1/2.
  EXPECT_NEAR(rep.values[1], 0.5, 1e-3);
}
