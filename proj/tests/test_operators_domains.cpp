#include "fkmd/expression.hpp"
#include "fkmd/operators.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace fkmd;

namespace {
constexpr double kPi = std::numbers::pi;
const Domain kUnit = Domain::interval(0.0, 1.0);
}  // namespace

TEST(Domain, ContainsAndDistance) {
  EXPECT_TRUE(kUnit.contains(scalar_vec(0.5)));
  EXPECT_FALSE(kUnit.contains(scalar_vec(0.0)));
  EXPECT_TRUE(kUnit.contains_closed(scalar_vec(1.0)));
  EXPECT_NEAR(kUnit.distance_to_boundary(scalar_vec(0.2)), 0.2, 1e-15);
  EXPECT_NEAR(kUnit.distance_to_boundary(scalar_vec(0.9)), 0.1, 1e-15);

  const Domain ball = Domain::ball(Vec::Zero(2), 1.0);
  Vec p(2);
  p << 0.6, 0.0;
  EXPECT_EQ(ball.dim(), 2);
  EXPECT_NEAR(ball.distance_to_boundary(p), 0.4, 1e-15);

  const Domain full = Domain::full_space(1);
  EXPECT_FALSE(full.bounded());
  EXPECT_THROW(full.bounding_box(), Error);
}

TEST(Grid, PointsAndInterpolation) {
  const Grid g = Grid::over(kUnit, 11);
  EXPECT_EQ(g.size(), 11u);
  EXPECT_NEAR(g.point(3)[0], 0.3, 1e-15);
  const auto u = SolutionField::from_function(g, kUnit, [](const Vec& x) { return 2.0 * x[0]; });
  EXPECT_NEAR(u(scalar_vec(0.35)), 0.7, 1e-12);
  EXPECT_FALSE(u.node_active(0));
  EXPECT_TRUE(u.node_active(5));
}

TEST(Expression, ParsesArithmeticAndFunctions) {
  const auto e = Expression::parse("pi^2*sin(pi*x) + sin(pi*x)^3", 1);
  EXPECT_NEAR(e(scalar_vec(0.5)), kPi * kPi + 1.0, 1e-12);
  const auto f = Expression::parse("-y^3 + x1*x2", 2, true);
  Vec x(2);
  x << 2.0, 3.0;
  EXPECT_NEAR(f(x, 2.0), -2.0, 1e-14);
  EXPECT_TRUE(Expression::parse("2*3-1", 1).is_constant());
  EXPECT_EQ(Expression::parse("2*3-1", 1).constant_value(), 5.0);
}

TEST(Expression, RejectsBadInput) {
  EXPECT_THROW(Expression::parse("y", 1), Error);
  EXPECT_THROW(Expression::parse("x3", 2), Error);
  EXPECT_THROW(Expression::parse("sin(x", 1), Error);
  EXPECT_THROW(Expression::parse("foo(x)", 1), Error);
  EXPECT_THROW(Expression::parse("1 2", 1), Error);
}

TEST(Validate, IdentityIsEllipticWithUnitConstant) {
  const auto rep = validate(DivergenceForm::laplacian(1, 1.0), kUnit);
  EXPECT_TRUE(rep.ok) << rep.summary();
  ASSERT_TRUE(rep.ellipticity_lambda.has_value());
  EXPECT_NEAR(*rep.ellipticity_lambda, 1.0, 1e-12);
}

TEST(Validate, NegativeEigenvalueIsNotElliptic) {
  auto op = DivergenceForm::laplacian(2, 1.0);
  Mat a = Mat::Identity(2, 2);
  a(1, 1) = -1.0;
  op.a = a;
  const auto rep = validate(op, Domain::box(Vec::Zero(2), Vec::Ones(2)));
  EXPECT_FALSE(rep.ok);
  EXPECT_TRUE(rep.has("divergence.ellipticity"));
  EXPECT_NE(rep.summary().find("not elliptic"), std::string::npos);
}

TEST(Validate, FractionalDrift) {
  FractionalLaplacian op;
  op.dim = 2;
  op.alpha = 1.5;
  op.drift = VectorField([](const Vec& x) {
    Vec b(2);
    b << x[1], -x[0];
    return b;
  });
  const Domain ball = Domain::ball(Vec::Zero(2), 1.0);
  EXPECT_TRUE(validate(op, ball).ok) << validate(op, ball).summary();

  op.alpha = 1.0;
  EXPECT_TRUE(validate(op, ball).has("fractional.alpha-drift"));

  op.alpha = 1.5;
  op.drift = VectorField([](const Vec& x) { return Vec(x); });
  EXPECT_TRUE(validate(op, ball).has("fractional.divergence-free"));
}

TEST(Validate, FullSpaceRecurrenceAndOuStability) {
  FractionalLaplacian op;
  op.alpha = 1.5;
  EXPECT_TRUE(validate(op, Domain::full_space(1)).has("fractional.transience"));

  OrnsteinUhlenbeck ou{Mat::Constant(1, 1, 1.0), Mat::Identity(1, 1), 1.0};
  EXPECT_TRUE(validate(ou, Domain::full_space(1)).has("ou.stability"));
  ou.A(0, 0) = -1.0;
  EXPECT_TRUE(validate(ou, Domain::full_space(1)).ok);
}

TEST(DirichletEnergy, ZeroField) {
  const Grid g = Grid::over(kUnit, 101);
  const SolutionField u(g, kUnit);
  EXPECT_EQ(dirichlet_energy(DivergenceForm::laplacian(1, 1.0), u), 0.0);
}

TEST(DirichletEnergy, Parabola) {
  const Grid g = Grid::over(kUnit, 1000);
  const auto u = SolutionField::from_function(g, kUnit, [](const Vec& x) { return 0.5 * x[0] * (1.0 - x[0]); });
  EXPECT_NEAR(dirichlet_energy(DivergenceForm::laplacian(1, 1.0), u), 1.0 / 12.0, 1e-4);
}

TEST(DirichletEnergy, GreenFunction) {
  const Grid g = Grid::over(kUnit, 1001);
  const auto u = SolutionField::from_function(g, kUnit, [](const Vec& x) { return std::min(x[0], 0.5) * (1.0 - std::max(x[0], 0.5)); });
  EXPECT_NEAR(dirichlet_energy(DivergenceForm::laplacian(1, 1.0), u), 0.25, 1e-3);
}

TEST(GeneratorApply, Quadratic) {
  const Grid g = Grid::over(kUnit, 101);
  const auto u = SolutionField::from_function(g, kUnit, [](const Vec& x) { return x[0] * x[0]; });
  EXPECT_NEAR(generator_apply(DivergenceForm::laplacian(1, 1.0), u, 50), 2.0, 1e-8);
}

TEST(GeneratorApply, Sine) {
  const Grid g = Grid::over(kUnit, 1001);
  const auto u = SolutionField::from_function(g, kUnit, [](const Vec& x) { return std::sin(kPi * x[0]); });
  EXPECT_NEAR(generator_apply(DivergenceForm::laplacian(1, 1.0), u, 500), -kPi * kPi, 1e-3);
}

TEST(GeneratorApply, OrnsteinUhlenbeckLinear) {
  const Domain full = Domain::full_space(1);
  const Grid g(scalar_vec(-1.0), scalar_vec(1.0), 21);
  const auto u = SolutionField::from_function(g, full, [](const Vec& x) { return x[0]; });
  const OrnsteinUhlenbeck ou{Mat::Constant(1, 1, -1.0), Mat::Identity(1, 1), 1.0};
  // Node 13 sits at x = 0.3; L x = -x.
  EXPECT_NEAR(g.point(13)[0], 0.3, 1e-12);
  EXPECT_NEAR(generator_apply(ou, u, 13), -0.3, 1e-9);
}
