#pragma once

#include "fkmd/domain.hpp"
#include "fkmd/error.hpp"
#include "fkmd/field.hpp"
#include "fkmd/linalg.hpp"
#include "fkmd/rng.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace fkmd {

/// Lu = div(a grad u) - <b, grad u> + div(d u) - c u on a bounded domain.
/// The associated process has diffusion matrix 2 * sym(a): a = s * I gives the
/// generator s * Laplacian, so a = I/2 is the classical (1/2) Laplacian.
struct DivergenceForm {
  int dim = 1;
  MatrixField a;
  VectorField b;
  VectorField d;
  ScalarField c;

  static DivergenceForm laplacian(int dim, double s = 1.0) {
    DivergenceForm op;
    op.dim = dim;
    op.a = Mat(s * Mat::Identity(dim, dim));
    op.b = Vec(Vec::Zero(dim));
    op.d = Vec(Vec::Zero(dim));
    op.c = 0.0;
    return op;
  }

  /// Symmetric part of a; the generator's second-order coefficient.
  [[nodiscard]] Mat generator_diffusion_matrix(const Vec& x) const {
    const Mat m = a(x);
    return 0.5 * (m + m.transpose());
  }

  [[nodiscard]] Mat antisymmetric_part(const Vec& x) const {
    const Mat m = a(x);
    return 0.5 * (m - m.transpose());
  }
};

/// Lu = -scale * (-Laplacian)^{alpha/2} u - <drift, grad u>, killed on leaving
/// the domain.
struct FractionalLaplacian {
  int dim = 1;
  double alpha = 1.0;
  double scale = 1.0;
  std::optional<VectorField> drift;
};

/// Lu = (1/2) tr(Q D^2 u) + <A x, grad u>; the solver treats -Lu + lambda u.
struct OrnsteinUhlenbeck {
  Mat A;
  Mat Q;
  double lambda = 1.0;
};

using OperatorSpec = std::variant<DivergenceForm, FractionalLaplacian, OrnsteinUhlenbeck>;

inline int operator_dim(const OperatorSpec& spec) {
  return std::visit(
      [](const auto& op) -> int {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, OrnsteinUhlenbeck>) return static_cast<int>(op.A.rows());
        else return op.dim;
      },
      spec);
}

/// c_{d,alpha} = alpha 2^{alpha-1} Gamma((d+alpha)/2) / (pi^{d/2} Gamma(1-alpha/2)),
/// the constant of the singular-integral form of (-Laplacian)^{alpha/2}.
inline double fractional_constant(int d, double alpha) {
  return alpha * std::pow(2.0, alpha - 1.0) * std::tgamma(0.5 * (d + alpha)) /
         (std::pow(std::numbers::pi, 0.5 * d) * std::tgamma(1.0 - 0.5 * alpha));
}

/// Surface area of the unit sphere in R^d.
inline double unit_sphere_area(int d) { return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d); }

/// Returns s when the operator is s * Laplacian with no lower-order terms.
inline std::optional<double> isotropic_laplacian_scale(const DivergenceForm& op) {
  if (!op.a.is_constant() || !is_zero(op.b) || !is_zero(op.d) || !is_zero(op.c)) return std::nullopt;
  const Mat& a = op.a.constant();
  const double s = a(0, 0);
  if (s <= 0.0 || !a.isApprox(s * Mat::Identity(a.rows(), a.cols()), 0.0)) return std::nullopt;
  return s;
}

namespace detail {

inline double fd_step(const Vec& x) { return 1e-5 * std::max(1.0, x.cwiseAbs().maxCoeff()); }

inline double divergence(const VectorField& v, const Vec& x) {
  if (v.is_constant()) return 0.0;
  const double h = fd_step(x);
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x;
    Vec xm = x;
    xp[i] += h;
    xm[i] -= h;
    s += (v(xp)[i] - v(xm)[i]) / (2.0 * h);
  }
  return s;
}

// beta_j = sum_i d a_ij / d x_i.
inline Vec column_divergence(const MatrixField& a, const Vec& x) {
  Vec out = Vec::Zero(x.size());
  if (a.is_constant()) return out;
  const double h = fd_step(x);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x;
    Vec xm = x;
    xp[i] += h;
    xm[i] -= h;
    const Mat ap = a(xp);
    const Mat am = a(xm);
    for (Eigen::Index j = 0; j < x.size(); ++j) out[j] += (ap(i, j) - am(i, j)) / (2.0 * h);
  }
  return out;
}

// Deterministic sample points inside the domain (or in [-5, 5]^d for the full
// space) and unit directions for the structural checks.
inline std::vector<Vec> sample_points(const Domain& domain, int count, std::uint64_t seed = 0x5eed) {
  const int d = domain.dim();
  Vec lo = Vec::Constant(d, -5.0);
  Vec hi = Vec::Constant(d, 5.0);
  if (domain.bounded()) std::tie(lo, hi) = domain.bounding_box();
  StreamRng rng(seed, 0);
  std::vector<Vec> pts;
  for (int tries = 0; static_cast<int>(pts.size()) < count && tries < 1000 * count; ++tries) {
    Vec x(d);
    for (int i = 0; i < d; ++i) x[i] = lo[i] + (hi[i] - lo[i]) * rng.uniform_open();
    if (domain.contains(x)) pts.push_back(x);
  }
  return pts;
}

inline std::vector<Vec> sample_directions(int d, int count, std::uint64_t seed = 0xd1e) {
  std::vector<Vec> dirs;
  for (int i = 0; i < d && static_cast<int>(dirs.size()) < count; ++i) {
    Vec e = Vec::Zero(d);
    e[i] = 1.0;
    dirs.push_back(e);
  }
  StreamRng rng(seed, 1);
  while (static_cast<int>(dirs.size()) < count && d > 1) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = rng.normal();
    dirs.push_back(v / v.norm());
  }
  return dirs;
}

}  // namespace detail

struct Violation {
  std::string rule_id;
  std::string message;
};

struct ValidationReport {
  bool ok = true;
  std::vector<Violation> violations;
  std::optional<double> ellipticity_lambda;
  std::optional<double> antisymmetric_bound;
  std::optional<double> stability_margin;

  void add(std::string rule, std::string msg) {
    violations.push_back({std::move(rule), std::move(msg)});
    ok = false;
  }

  [[nodiscard]] bool has(const std::string& rule) const {
    for (const auto& v : violations)
      if (v.rule_id == rule) return true;
    return false;
  }

  [[nodiscard]] std::string summary() const {
    std::string s;
    for (const auto& v : violations) s += (s.empty() ? "" : "; ") + v.rule_id + ": " + v.message;
    return s;
  }
};

struct ValidateOptions {
  int points = 64;
  int directions = 16;
};

/// Structural checks on (L, D). Never throws; every finding lands in the report.
inline ValidationReport validate(const OperatorSpec& spec, const Domain& domain, const ValidateOptions& opt = {}) {
  ValidationReport rep;
  const int d = operator_dim(spec);
  if (d != domain.dim()) {
    rep.add("dimension", "operator dimension " + std::to_string(d) + " differs from domain dimension " +
                             std::to_string(domain.dim()));
    return rep;
  }
  const auto pts = detail::sample_points(domain, opt.points);
  const auto dirs = detail::sample_directions(d, opt.directions);

  if (const auto* op = std::get_if<DivergenceForm>(&spec)) {
    if (!domain.bounded()) rep.add("divergence.bounded-domain", "divergence-form operators need a bounded domain");
    double lambda = std::numeric_limits<double>::infinity();
    double anti = 0.0;
    double killing_min = std::numeric_limits<double>::infinity();
    bool finite = true;
    for (const auto& x : pts) {
      const Mat sym = op->generator_diffusion_matrix(x);
      const Mat asym = op->antisymmetric_part(x);
      if (sym.rows() != d || sym.cols() != d) {
        rep.add("divergence.shape", "coefficient a must be " + std::to_string(d) + "x" + std::to_string(d));
        return rep;
      }
      finite = finite && sym.allFinite() && asym.allFinite();
      for (const auto& xi : dirs) lambda = std::min(lambda, xi.dot(sym * xi));
      anti = std::max(anti, asym.cwiseAbs().maxCoeff());
      const double c = op->c(x);
      killing_min = std::min({killing_min, c - detail::divergence(op->b, x), c - detail::divergence(op->d, x)});
    }
    if (!finite || !std::isfinite(anti)) rep.add("divergence.bounded-coefficients", "coefficient a is not finite on the domain");
    rep.ellipticity_lambda = lambda;
    rep.antisymmetric_bound = anti;
    if (!(lambda > 0.0))
      rep.add("divergence.ellipticity", "not elliptic: min <sym(a) xi, xi> = " + std::to_string(lambda) + " <= 0");
    if (killing_min < -1e-9)
      rep.add("divergence.killing-sign", "c - div b or c - div d is negative (" + std::to_string(killing_min) + ")");
  } else if (const auto* op = std::get_if<FractionalLaplacian>(&spec)) {
    if (!(op->alpha > 0.0 && op->alpha <= 2.0)) rep.add("fractional.alpha-range", "alpha must lie in (0, 2]");
    if (!(op->scale > 0.0)) rep.add("fractional.scale", "scale must be positive");
    if (!domain.bounded() && !(op->alpha < d))
      rep.add("fractional.transience", "process on the full space is recurrent unless alpha < d");
    if (op->drift) {
      if (!(op->alpha > 1.0)) rep.add("fractional.alpha-drift", "a drift requires alpha in (1, 2]");
      double div_max = 0.0;
      bool finite = true;
      for (const auto& x : pts) {
        const Vec b = (*op->drift)(x);
        finite = finite && b.size() == d && b.allFinite();
        div_max = std::max(div_max, std::abs(detail::divergence(*op->drift, x)));
      }
      if (!finite) rep.add("fractional.drift-bounded", "drift must be a finite R^d-valued field");
      if (div_max > 1e-6) rep.add("fractional.divergence-free", "drift must be divergence-free (max |div b| = " + std::to_string(div_max) + ")");
    }
  } else if (const auto* op = std::get_if<OrnsteinUhlenbeck>(&spec)) {
    if (op->A.rows() != op->A.cols() || op->Q.rows() != op->A.rows() || op->Q.cols() != op->A.rows()) {
      rep.add("ou.shape", "A and Q must be square matrices of the same size");
      return rep;
    }
    const Eigen::MatrixXd A = op->A;
    Eigen::EigenSolver<Eigen::MatrixXd> es(A);
    const double max_re = es.eigenvalues().real().maxCoeff();
    rep.stability_margin = -max_re;
    if (!(max_re < 0.0)) rep.add("ou.stability", "A must have spectrum in the open left half-plane");
    const Eigen::MatrixXd Q = op->Q;
    if (!Q.isApprox(Q.transpose(), 1e-12)) {
      rep.add("ou.covariance", "Q must be symmetric");
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qs(Q);
      if (!(qs.eigenvalues().minCoeff() > 0.0)) rep.add("ou.covariance", "Q must be positive definite");
    }
    if (!(op->lambda > 0.0)) rep.add("ou.lambda", "the solver requires lambda > 0");
  }
  return rep;
}

namespace detail {

inline void require_energy_grid(const SolutionField& u) {
  require(u.domain().bounded(), "discrete energy needs a bounded domain");
  require(u.grid().nodes_per_axis() - 2 >= 3, "grid too coarse: fewer than 3 interior nodes per axis");
}

// Cell-centred data for the staggered-grid forms: gradient (averaged edge
// differences) and mean value of u over each cell.
template <typename Visit>
void for_each_cell(const SolutionField& u, const SolutionField* v, Visit&& visit) {
  const Grid& g = u.grid();
  const int d = g.dim();
  const int n = g.nodes_per_axis();
  const Vec& h = g.spacing();
  Grid::MultiIndex cell{};
  std::size_t cells = 1;
  for (int a = 0; a < d; ++a) cells *= static_cast<std::size_t>(n - 1);
  const double corners = static_cast<double>(1 << d);
  for (std::size_t ci = 0; ci < cells; ++ci) {
    std::size_t rest = ci;
    Vec centre(d);
    for (int a = 0; a < d; ++a) {
      cell[static_cast<std::size_t>(a)] = static_cast<int>(rest % static_cast<std::size_t>(n - 1));
      rest /= static_cast<std::size_t>(n - 1);
      centre[a] = g.lo()[a] + h[a] * (cell[static_cast<std::size_t>(a)] + 0.5);
    }
    Vec gu = Vec::Zero(d);
    Vec gv = Vec::Zero(d);
    double mu = 0.0;
    double mv = 0.0;
    for (int corner = 0; corner < (1 << d); ++corner) {
      Grid::MultiIndex mi = cell;
      for (int a = 0; a < d; ++a) mi[static_cast<std::size_t>(a)] += (corner >> a) & 1;
      const std::size_t flat = g.flat_index(mi);
      const double uval = u[flat];
      const double vval = v ? (*v)[flat] : uval;
      mu += uval;
      mv += vval;
      for (int a = 0; a < d; ++a) {
        const double sign = ((corner >> a) & 1) ? 1.0 : -1.0;
        gu[a] += sign * uval;
        gv[a] += sign * vval;
      }
    }
    for (int a = 0; a < d; ++a) {
      gu[a] /= (corners / 2.0) * h[a];
      gv[a] /= (corners / 2.0) * h[a];
    }
    visit(centre, gu, gv, mu / corners, mv / corners, g.cell_volume());
  }
}

inline std::vector<std::size_t> active_nodes(const SolutionField& u) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (u.node_active(i)) idx.push_back(i);
  return idx;
}

// int over the complement of the discretised domain of |x - y|^{-d-alpha} dy.
// On an interval the discretised domain is the union of the active node cells,
// [a + h/2, b - h/2], and the integral is exact.
inline std::vector<double> exterior_weights(const SolutionField& u, const std::vector<std::size_t>& active, double alpha) {
  const Grid& g = u.grid();
  const int d = g.dim();
  std::vector<double> kappa(active.size());
  if (d == 1) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (auto i : active) {
      lo = std::min(lo, g.point(i)[0]);
      hi = std::max(hi, g.point(i)[0]);
    }
    const double h = g.spacing()[0];
    lo -= 0.5 * h;
    hi += 0.5 * h;
    for (std::size_t k = 0; k < active.size(); ++k) {
      const double x = g.point(active[k])[0];
      kappa[k] = (std::pow(x - lo, -alpha) + std::pow(hi - x, -alpha)) / alpha;
    }
    return kappa;
  }
  // Self cell replaced by the ball of equal volume; everything outside it that
  // is not an active cell counts as exterior.
  const double vol = g.cell_volume();
  const double rho = std::pow(vol * std::tgamma(0.5 * d + 1.0) / std::pow(std::numbers::pi, 0.5 * d), 1.0 / d);
  const double outside_ball = unit_sphere_area(d) * std::pow(rho, -alpha) / alpha;
  for (std::size_t k = 0; k < active.size(); ++k) {
    const Vec xk = g.point(active[k]);
    double inside = 0.0;
    for (std::size_t j = 0; j < active.size(); ++j) {
      if (j == k) continue;
      inside += vol * std::pow((xk - g.point(active[j])).norm(), -d - alpha);
    }
    kappa[k] = std::max(0.0, outside_ball - inside);
  }
  return kappa;
}

}  // namespace detail

/// Discrete quadratic form E(u, u) on the field's grid.
/// DivergenceForm: sum over cells of <sym(a) grad u, grad u> + c u^2, with
/// cell-centred differences. FractionalLaplacian: the singular double sum over
/// distinct active nodes plus the exterior (killing) term; u = 0 off the domain.
inline double dirichlet_energy(const OperatorSpec& spec, const SolutionField& u) {
  detail::require_energy_grid(u);
  require(operator_dim(spec) == u.grid().dim(), "operator and field dimensions differ");
  if (const auto* op = std::get_if<DivergenceForm>(&spec)) {
    double e = 0.0;
    detail::for_each_cell(u, nullptr, [&](const Vec& xc, const Vec& gu, const Vec&, double mu, double, double vol) {
      e += (gu.dot(op->generator_diffusion_matrix(xc) * gu) + op->c(xc) * mu * mu) * vol;
    });
    return e;
  }
  if (const auto* op = std::get_if<FractionalLaplacian>(&spec)) {
    const Grid& g = u.grid();
    const int d = g.dim();
    const double alpha = op->alpha;
    const double vol = g.cell_volume();
    const auto active = detail::active_nodes(u);
    const auto kappa = detail::exterior_weights(u, active, alpha);
    std::vector<Vec> x;
    x.reserve(active.size());
    for (auto i : active) x.push_back(g.point(i));
    double pair_sum = 0.0;
    double ext = 0.0;
    for (std::size_t i = 0; i < active.size(); ++i) {
      const double ui = u[active[i]];
      for (std::size_t j = i + 1; j < active.size(); ++j) {
        const double du = ui - u[active[j]];
        pair_sum += du * du * std::pow((x[i] - x[j]).norm(), -d - alpha);
      }
      ext += ui * ui * kappa[i];
    }
    const double c = fractional_constant(d, alpha);
    // Unordered pairs counted once, i.e. (c/2) times the ordered double sum.
    return op->scale * c * (pair_sum * vol * vol + ext * vol);
  }
  throw Error(ErrorCode::invalid_argument, "no discrete energy for the Ornstein-Uhlenbeck operator");
}

/// Discrete bilinear form E(u, v) = int <a grad u, grad v>
/// + <b, grad u> v + <d, grad v> u + c u v, on a shared grid.
inline double energy_bilinear(const DivergenceForm& op, const SolutionField& u, const SolutionField& v) {
  detail::require_energy_grid(u);
  require(u.grid().size() == v.grid().size() && u.grid().nodes_per_axis() == v.grid().nodes_per_axis(),
          "bilinear form needs both fields on the same grid");
  double e = 0.0;
  detail::for_each_cell(u, &v, [&](const Vec& xc, const Vec& gu, const Vec& gv, double mu, double mv, double vol) {
    e += (gv.dot(op.a(xc) * gu) + op.b(xc).dot(gu) * mv + op.d(xc).dot(gv) * mu + op.c(xc) * mu * mv) * vol;
  });
  return e;
}

/// Finite-difference value of Lu at an interior grid node; for smooth
/// manufactured test fields only.
inline double generator_apply(const OperatorSpec& spec, const SolutionField& u, std::size_t node) {
  const Grid& g = u.grid();
  const int d = g.dim();
  const int n = g.nodes_per_axis();
  require(operator_dim(spec) == d, "operator and field dimensions differ");
  require(node < g.size(), "node index out of range");
  const auto mi = g.multi_index(node);
  for (int a = 0; a < d; ++a) {
    const int k = mi[static_cast<std::size_t>(a)];
    require(k > 0 && k < n - 1, "generator_apply needs an interior grid node, got a boundary node");
  }
  const Vec x = g.point(node);
  const Vec& h = g.spacing();
  auto at = [&](int axis1, int off1, int axis2 = 0, int off2 = 0) {
    std::size_t f = node;
    f = static_cast<std::size_t>(static_cast<long long>(f) + off1 * static_cast<long long>(g.stride(axis1)));
    f = static_cast<std::size_t>(static_cast<long long>(f) + off2 * static_cast<long long>(g.stride(axis2)));
    return u[f];
  };
  auto shifted = [&](int axis, double dx) {
    Vec y = x;
    y[axis] += dx;
    return y;
  };
  Vec grad(d);
  for (int i = 0; i < d; ++i) grad[i] = (at(i, 1) - at(i, -1)) / (2.0 * h[i]);

  if (const auto* op = std::get_if<DivergenceForm>(&spec)) {
    double lu = 0.0;
    for (int i = 0; i < d; ++i) {
      const double ap = op->a(shifted(i, 0.5 * h[i]))(i, i);
      const double am = op->a(shifted(i, -0.5 * h[i]))(i, i);
      lu += (ap * (at(i, 1) - u[node]) - am * (u[node] - at(i, -1))) / (h[i] * h[i]);
      for (int j = 0; j < d; ++j) {
        if (j == i) continue;
        // d/dx_i (a_ij du/dx_j) with central differences on both levels.
        const double djp = (at(i, 1, j, 1) - at(i, 1, j, -1)) / (2.0 * h[j]);
        const double djm = (at(i, -1, j, 1) - at(i, -1, j, -1)) / (2.0 * h[j]);
        lu += (op->a(shifted(i, h[i]))(i, j) * djp - op->a(shifted(i, -h[i]))(i, j) * djm) / (2.0 * h[i]);
      }
      const double dp = op->d(shifted(i, h[i]))[i] * at(i, 1);
      const double dm = op->d(shifted(i, -h[i]))[i] * at(i, -1);
      lu += (dp - dm) / (2.0 * h[i]);
    }
    lu -= op->b(x).dot(grad);
    lu -= op->c(x) * u[node];
    return lu;
  }
  if (const auto* op = std::get_if<OrnsteinUhlenbeck>(&spec)) {
    double lu = 0.0;
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        double dij = 0.0;
        if (i == j) {
          dij = (at(i, 1) - 2.0 * u[node] + at(i, -1)) / (h[i] * h[i]);
        } else {
          dij = (at(i, 1, j, 1) - at(i, 1, j, -1) - at(i, -1, j, 1) + at(i, -1, j, -1)) / (4.0 * h[i] * h[j]);
        }
        lu += 0.5 * op->Q(i, j) * dij;
      }
    }
    lu += (op->A * x).dot(grad);
    return lu;
  }
  const auto& op = std::get<FractionalLaplacian>(spec);
  const double alpha = op.alpha;
  const double vol = g.cell_volume();
  const auto active = detail::active_nodes(u);
  const auto kappa = detail::exterior_weights(u, active, alpha);
  double sum = 0.0;
  double self_kappa = 0.0;
  for (std::size_t j = 0; j < active.size(); ++j) {
    if (active[j] == node) {
      self_kappa = kappa[j];
      continue;
    }
    sum += (u[node] - u[active[j]]) * std::pow((x - g.point(active[j])).norm(), -d - alpha) * vol;
  }
  sum += u[node] * self_kappa;
  // Principal value over the self cell (ball of equal volume), second order.
  double lap = 0.0;
  for (int i = 0; i < d; ++i) lap += (at(i, 1) - 2.0 * u[node] + at(i, -1)) / (h[i] * h[i]);
  const double rho = d == 1 ? 0.5 * h[0]
                            : std::pow(vol * std::tgamma(0.5 * d + 1.0) / std::pow(std::numbers::pi, 0.5 * d), 1.0 / d);
  sum -= lap / (2.0 * d) * unit_sphere_area(d) * std::pow(rho, 2.0 - alpha) / (2.0 - alpha);
  double lu = -op.scale * fractional_constant(d, alpha) * sum;
  if (op.drift) lu -= (*op.drift)(x).dot(grad);
  return lu;
}

}  // namespace fkmd
