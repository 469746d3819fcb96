#pragma once

#include "fkmd/domain.hpp"
#include "fkmd/error.hpp"
#include "fkmd/linalg.hpp"
#include "fkmd/operators.hpp"
#include "fkmd/quadrature.hpp"
#include "fkmd/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace fkmd {

struct Atom {
  Vec point;
  double weight;
};

/// Mollified atom: weight * hat(x - center) / mass, where hat is the product of
/// one-dimensional triangular kernels of half-width h (unit integral on R^d)
/// and mass is the part of it inside the domain.
struct Bump {
  Vec center;
  double half_width;
  double weight;
  double mass = 1.0;

  [[nodiscard]] double operator()(const Vec& x) const {
    double v = 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double t = 1.0 - std::abs(x[i] - center[i]) / half_width;
      if (t <= 0.0) return 0.0;
      v *= t / half_width;
    }
    return weight * v / mass;
  }
};

/// Signed measure mu = density * m + sum of atoms. The density is taken
/// relative to the operator's reference measure m (Lebesgue, or the invariant
/// Gaussian for the Ornstein-Uhlenbeck operator).
struct MeasureData {
  std::optional<ScalarField> density;
  std::vector<Atom> atoms;
  std::vector<Bump> bumps;

  static MeasureData zero() { return {}; }

  static MeasureData with_density(ScalarField rho) {
    MeasureData m;
    m.density = std::move(rho);
    return m;
  }

  static MeasureData dirac(Vec point, double weight = 1.0) {
    MeasureData m;
    m.atoms.push_back({std::move(point), weight});
    return m;
  }

  [[nodiscard]] bool has_density() const { return (density && !is_zero(*density)) || !bumps.empty(); }
  [[nodiscard]] bool empty() const { return !has_density() && atoms.empty(); }

  /// Density part (including mollified atoms) at x.
  [[nodiscard]] double density_at(const Vec& x) const {
    double s = density ? (*density)(x) : 0.0;
    for (const auto& b : bumps) s += b(x);
    return s;
  }

  /// Kinks of the density along each axis, for panel splitting.
  [[nodiscard]] std::vector<std::vector<double>> breakpoints(int dim) const {
    std::vector<std::vector<double>> bp(static_cast<std::size_t>(dim));
    for (const auto& b : bumps)
      for (int i = 0; i < dim; ++i) {
        auto& axis = bp[static_cast<std::size_t>(i)];
        axis.push_back(b.center[i] - b.half_width);
        axis.push_back(b.center[i]);
        axis.push_back(b.center[i] + b.half_width);
      }
    return bp;
  }

  [[nodiscard]] MeasureData scaled(double s) const {
    MeasureData m = *this;
    if (density) {
      if (density->is_constant()) m.density = ScalarField(s * density->constant());
      else m.density = ScalarField([f = *density, s](const Vec& x) { return s * f(x); });
    }
    for (auto& a : m.atoms) a.weight *= s;
    for (auto& b : m.bumps) b.weight *= s;
    return m;
  }

  /// |mu|: absolute density and weights.
  [[nodiscard]] MeasureData absolute() const {
    MeasureData m;
    if (has_density()) {
      m.density = ScalarField([self = *this](const Vec& x) { return std::abs(self.density_at(x)); });
    }
    for (const auto& a : atoms) m.atoms.push_back({a.point, std::abs(a.weight)});
    return m;
  }

  friend MeasureData operator+(const MeasureData& p, const MeasureData& q) {
    MeasureData m;
    if (p.density && q.density) {
      if (p.density->is_constant() && q.density->is_constant())
        m.density = ScalarField(p.density->constant() + q.density->constant());
      else
        m.density = ScalarField([f = *p.density, g = *q.density](const Vec& x) { return f(x) + g(x); });
    } else if (p.density) {
      m.density = p.density;
    } else if (q.density) {
      m.density = q.density;
    }
    m.atoms = p.atoms;
    m.atoms.insert(m.atoms.end(), q.atoms.begin(), q.atoms.end());
    m.bumps = p.bumps;
    m.bumps.insert(m.bumps.end(), q.bumps.begin(), q.bumps.end());
    return m;
  }
};

/// Reference measure m of the operator: Lebesgue, or N(0, covariance).
struct ReferenceMeasure {
  std::optional<Mat> gaussian_covariance;

  [[nodiscard]] bool is_lebesgue() const { return !gaussian_covariance.has_value(); }
};

/// Invariant covariance S of the Ornstein-Uhlenbeck process: A S + S A^T + Q = 0
/// (S = -A^{-1}/2 when Q = I and A is symmetric).
inline Mat ou_invariant_covariance(const OrnsteinUhlenbeck& op) {
  const auto d = op.A.rows();
  const Eigen::MatrixXd A = op.A;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(d * d, d * d);
  // vec(A S + S A^T) = (I (x) A + A (x) I) vec(S), column-major vec.
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      K.block(i * d, j * d, d, d) += I(i, j) * A;
      K.block(i * d, j * d, d, d) += A(i, j) * I;
    }
  const Eigen::MatrixXd Q = op.Q;
  const Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(Q.data(), d * d);
  const Eigen::VectorXd s = K.fullPivLu().solve(-q);
  Eigen::MatrixXd S = Eigen::Map<const Eigen::MatrixXd>(s.data(), d, d);
  return Mat(0.5 * (S + S.transpose()));
}

inline ReferenceMeasure reference_measure(const OperatorSpec& spec) {
  if (const auto* ou = std::get_if<OrnsteinUhlenbeck>(&spec)) return {ou_invariant_covariance(*ou)};
  return {};
}

namespace detail {

// int_D g dm with grid refinement until the relative change is <= rel_tol.
template <typename G>
double integrate_over(G&& g, const Domain& domain, const ReferenceMeasure& ref,
                      const std::vector<std::vector<double>>& breakpoints, double rel_tol, const std::string& what) {
  const int d = domain.dim();
  if (!ref.is_lebesgue()) {
    auto masked = [&](const Vec& x) { return domain.contains(x) ? g(x) : 0.0; };
    const int max_order = d == 1 ? 256 : (d == 2 ? 64 : 16);
    return quad::refine([&](int order) { return quad::gaussian_expectation(masked, *ref.gaussian_covariance, order); },
                        rel_tol, 8, max_order, what);
  }
  require(domain.bounded(), "Lebesgue integrals over the full space are not supported");
  if (const auto* iv = std::get_if<Interval>(&domain.shape())) {
    const auto& bp = breakpoints.empty() ? std::vector<double>{} : breakpoints[0];
    return quad::refine([&](int panels) { return quad::integrate([&](double x) { return g(scalar_vec(x)); }, iv->a, iv->b, panels, bp); },
                        rel_tol, 16, 1 << 16, what);
  }
  const auto [lo, hi] = domain.bounding_box();
  auto masked = [&](const Vec& x) { return domain.contains(x) ? g(x) : 0.0; };
  const int max_panels = d == 2 ? 256 : (d == 3 ? 32 : 12);
  return quad::refine([&](int panels) { return quad::integrate_box(masked, lo, hi, panels, breakpoints); }, rel_tol, 4,
                      max_panels, what);
}

}  // namespace detail

/// ||mu||_TV = int |density| dm + sum |w|.
inline double total_variation(const MeasureData& mu, const Domain& domain, const ReferenceMeasure& ref = {}) {
  double tv = 0.0;
  for (const auto& a : mu.atoms) tv += std::abs(a.weight);
  if (!mu.has_density()) return tv;
  return tv + detail::integrate_over([&](const Vec& x) { return std::abs(mu.density_at(x)); }, domain, ref,
                                     mu.breakpoints(domain.dim()), 1e-3, "TV quadrature failed");
}

/// Truncation T_c(y) = (-c) v y ^ c.
inline double truncate(double c, double y) {
  require(c >= 0.0, "truncation level must be nonnegative");
  return std::max(-c, std::min(y, c));
}

namespace detail {

// Mass of the unit-integral triangular kernel on [c - h, c + h] inside [lo, hi].
inline double hat_mass_1d(double c, double h, double lo, double hi) {
  auto cdf = [&](double x) {
    const double t = (x - c) / h;
    if (t <= -1.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t <= 0.0 ? 0.5 * (1.0 + t) * (1.0 + t) : 1.0 - 0.5 * (1.0 - t) * (1.0 - t);
  };
  return cdf(hi) - cdf(lo);
}

}  // namespace detail

/// Replaces every atom by a triangular bump of half-width eps and the same
/// weight. Bumps reaching outside the domain are clipped and renormalised, so
/// the mass and total variation are preserved.
inline MeasureData mollify(const MeasureData& mu, double eps, const Domain& domain) {
  require(eps > 0.0, "mollification width must be positive");
  MeasureData out;
  out.density = mu.density;
  out.bumps = mu.bumps;
  for (const auto& a : mu.atoms) {
    require(domain.contains_closed(a.point), "atom lies outside the closed domain");
    Bump b{a.point, eps, a.weight, 1.0};
    if (const auto* iv = std::get_if<Interval>(&domain.shape())) {
      b.mass = detail::hat_mass_1d(a.point[0], eps, iv->a, iv->b);
    } else if (const auto* bx = std::get_if<Box>(&domain.shape())) {
      for (Eigen::Index i = 0; i < a.point.size(); ++i) b.mass *= detail::hat_mass_1d(a.point[i], eps, bx->lo[i], bx->hi[i]);
    } else if (domain.bounded()) {
      Bump unit{a.point, eps, 1.0, 1.0};
      MeasureData single;
      single.bumps.push_back(unit);
      const Vec lo = a.point.array() - eps;
      const Vec hi = a.point.array() + eps;
      b.mass = quad::integrate_box([&](const Vec& x) { return domain.contains(x) ? unit(x) : 0.0; }, lo, hi, 32,
                                   single.breakpoints(static_cast<int>(a.point.size())));
    }
    require(b.mass > 0.0, "mollified atom has no mass inside the domain");
    out.bumps.push_back(std::move(b));
  }
  return out;
}

/// Nonlinearity f(x, y).
struct Nonlinearity {
  std::function<double(const Vec&, double)> f;
  bool declared_monotone = true;
  bool identically_zero = false;

  static Nonlinearity zero() { return {[](const Vec&, double) { return 0.0; }, true, true}; }

  double operator()(const Vec& x, double y) const { return f(x, y); }
};

/// Statistical check of (f(x,y1) - f(x,y2))(y1 - y2) <= 0 at n_samples
/// pseudo-random triples, y in [-100, 100]. A pass is evidence, not proof.
inline bool check_monotone(const Nonlinearity& f, const Domain& domain, int n_samples) {
  require(n_samples >= 100, "check_monotone needs at least 100 samples");
  if (f.identically_zero) return true;
  const auto pts = detail::sample_points(domain, n_samples, 0xa2);
  StreamRng rng(0xa2a2, 7);
  for (int k = 0; k < n_samples; ++k) {
    const Vec& x = pts[static_cast<std::size_t>(k) % pts.size()];
    const double y1 = -100.0 + 200.0 * rng.uniform();
    const double y2 = -100.0 + 200.0 * rng.uniform();
    if ((f(x, y1) - f(x, y2)) * (y1 - y2) > 1e-12) return false;
  }
  return true;
}

}  // namespace fkmd
