#include "fkmd/process.hpp"
#include "fkmd/rng.hpp"
#include "fkmd/stable.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace fkmd;

namespace {
const Domain kUnit = Domain::interval(0.0, 1.0);

// Philox4x32-10 known-answer vectors from the Random123 distribution.
void expect_block(Philox4x32::Block ctr, Philox4x32::Key key, Philox4x32::Block want) {
  EXPECT_EQ(Philox4x32::apply(ctr, key), want);
}
}  // namespace

TEST(Philox, KnownAnswers) {
  expect_block({0, 0, 0, 0}, {0, 0}, {0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  expect_block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff},
               {0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  expect_block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0},
               {0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST(StreamRng, ReproducibleAndIndependent) {
  StreamRng a(7, 3), b(7, 3), c(7, 4);
  std::vector<std::uint64_t> va, vb, vc;
  for (int i = 0; i < 10; ++i) va.push_back(a.next_u64()), vb.push_back(b.next_u64()), vc.push_back(c.next_u64());
  EXPECT_EQ(va, vb);
  EXPECT_NE(va, vc);
}

TEST(StreamRng, NormalMoments) {
  StreamRng r(11, 0);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

// alpha = 2 reduces to N(0, 2); alpha = 1 is Cauchy with P(|X| < 1) = 1/2.
TEST(Stable, Limits) {
  StreamRng r(5, 1);
  const int n = 200000;
  double s2 = 0;
  for (int i = 0; i < n; ++i) s2 += std::pow(symmetric_stable(2.0, r), 2);
  EXPECT_NEAR(s2 / n, 2.0, 0.03);
  int inside = 0;
  for (int i = 0; i < n; ++i) inside += std::abs(symmetric_stable(1.0, r)) < 1.0;
  EXPECT_NEAR(static_cast<double>(inside) / n, 0.5, 0.005);
}

TEST(AdditiveFunctional, UnitDensityGivesLifetime) {
  const SimConfig cfg{1e-3, 50.0, 3, 1};
  const auto path = sample_path(DivergenceForm::laplacian(1, 1.0), kUnit, scalar_vec(0.5), cfg, 0);
  EXPECT_EQ(path.exit_kind, ExitKind::boundary_exit);
  EXPECT_NEAR(additive_functional(path, MeasureData::with_density(1.0)), path.lifetime, 1e-12);
  EXPECT_EQ(additive_functional(path, MeasureData::zero()), 0.0);
  EXPECT_THROW(additive_functional(path, MeasureData::dirac(scalar_vec(0.5))), Error);
}

// E_{1/4} A^mu = G(1/4, 1/2) = 0.25 for generator Laplacian / 2.
TEST(AdditiveFunctional, RevuzIdentityForMollifiedAtom) {
  const auto spec = DivergenceForm::laplacian(1, 0.5);
  const auto mu = mollify(MeasureData::dirac(scalar_vec(0.5)), 0.02, kUnit);
  const SimConfig cfg{1e-3, 50.0, 17, 20000};
  std::vector<double> v(cfg.paths);
  for (std::size_t p = 0; p < cfg.paths; ++p) v[p] = additive_functional(sample_path(spec, kUnit, scalar_vec(0.25), cfg, p), mu);
  const auto s = summarize(v);
  EXPECT_NEAR(s.mean, 0.25, std::max(3.0 * s.std_error, 0.01));
}

TEST(MeanExitTime, BrownianInterval) {
  const auto est = mean_exit_time(DivergenceForm::laplacian(1, 1.0), kUnit, scalar_vec(0.5), SimConfig{1e-3, 50.0, 2, 20000});
  EXPECT_NEAR(est.estimate, 0.125, 3.0 * est.std_error + 1e-3);
  EXPECT_EQ(est.censored_fraction, 0.0);
}

TEST(MeanExitTime, CauchyProcess) {
  FractionalLaplacian op;
  op.alpha = 1.0;
  const auto est = mean_exit_time(op, Domain::interval(-1.0, 1.0), scalar_vec(0.0), SimConfig{1e-3, 100.0, 9, 20000});
  EXPECT_NEAR(est.estimate, 1.0, 3.0 * est.std_error);
}

TEST(MeanExitTime, OrnsteinUhlenbeckKilling) {
  const OrnsteinUhlenbeck op{Mat::Constant(1, 1, -1.0), Mat::Identity(1, 1), 2.0};
  const auto est = mean_exit_time(op, Domain::full_space(1), scalar_vec(0.0), SimConfig{1e-2, 50.0, 4, 20000});
  EXPECT_NEAR(est.estimate, 0.5, 3.0 * est.std_error);
}

TEST(MeanExitTime, ShortHorizonIsReported) {
  try {
    mean_exit_time(DivergenceForm::laplacian(1, 1.0), kUnit, scalar_vec(0.5), SimConfig{1e-3, 0.01, 2, 1000});
    FAIL() << "expected horizon_too_small";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::horizon_too_small);
  }
}

TEST(PathModel, DeterministicPerIndex) {
  const SimConfig cfg{1e-3, 50.0, 21, 1};
  const auto a = sample_path(DivergenceForm::laplacian(1, 1.0), kUnit, scalar_vec(0.3), cfg, 5);
  const auto b = sample_path(DivergenceForm::laplacian(1, 1.0), kUnit, scalar_vec(0.3), cfg, 5);
  EXPECT_EQ(a.lifetime, b.lifetime);
  EXPECT_EQ(a.states.size(), b.states.size());
  EXPECT_THROW(sample_path(DivergenceForm::laplacian(1, 1.0), kUnit, scalar_vec(1.5), cfg, 0), Error);
}
