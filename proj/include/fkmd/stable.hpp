#pragma once

#include "fkmd/linalg.hpp"
#include "fkmd/rng.hpp"

#include <cmath>
#include <numbers>

namespace fkmd {

// Symmetric alpha-stable variate with characteristic function exp(-|xi|^alpha),
// alpha in (0, 2], by the Chambers-Mallows-Stuck transform. alpha = 1 is the
// standard Cauchy law, alpha = 2 is N(0, 2).
inline double symmetric_stable(double alpha, StreamRng& rng) {
  const double v = std::numbers::pi * (rng.uniform_open() - 0.5);
  if (alpha == 1.0) return std::tan(v);
  const double w = rng.exponential();
  return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
         std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
}

// Positive beta-stable variate, beta in (0, 1), with Laplace transform
// E exp(-s A) = exp(-s^beta) (Kanter's representation).
inline double positive_stable(double beta, StreamRng& rng) {
  const double u = std::numbers::pi * rng.uniform_open();
  const double w = rng.exponential();
  return std::sin(beta * u) / std::pow(std::sin(u), 1.0 / beta) *
         std::pow(std::sin((1.0 - beta) * u) / w, (1.0 - beta) / beta);
}

// Isotropic stable vector with E exp(i<xi, S>) = exp(-|xi|^alpha). In d > 1 it is
// a Gaussian subordinated by a positive (alpha/2)-stable time.
inline void isotropic_stable(double alpha, StreamRng& rng, Vec& out) {
  const auto d = out.size();
  if (d == 1) {
    out[0] = symmetric_stable(alpha, rng);
    return;
  }
  const double time = alpha >= 2.0 ? 1.0 : positive_stable(0.5 * alpha, rng);
  const double s = std::sqrt(2.0 * time);
  for (Eigen::Index i = 0; i < d; ++i) out[i] = s * rng.normal();
}

}  // namespace fkmd
