#pragma once

#include "fkmd/domain.hpp"
#include "fkmd/error.hpp"
#include "fkmd/linalg.hpp"
#include "fkmd/measure_data.hpp"
#include "fkmd/operators.hpp"
#include "fkmd/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

namespace fkmd {

/// Green function of -s u'' on (a, b) with zero boundary values.
struct IntervalLaplacian {
  double a;
  double b;
  double diffusion_scale = 1.0;
};

/// Expected exit time E_x tau of the ball for the process generated by
/// -scale (-Laplacian)^{alpha/2}. Carries R1 only, not a pointwise kernel.
struct StableExitMoment {
  double alpha;
  double radius;
  int dim = 1;
  double scale = 1.0;
  Vec center = scalar_vec(0.0);
};

/// Dense finite-difference inverse of a one-dimensional divergence-form
/// operator on an interval; an oracle for operators with no closed form.
class DiscreteKernel {
 public:
  static DiscreteKernel build(const DivergenceForm& op, double a, double b, int nodes) {
    require(op.dim == 1, "discrete kernels are one-dimensional");
    require(nodes >= 5, "discrete kernel needs at least 5 nodes");
    DiscreteKernel k;
    k.a_ = a;
    k.b_ = b;
    k.n_ = nodes;
    k.h_ = (b - a) / (nodes - 1);
    const int m = nodes - 2;
    const double h = k.h_;
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
    auto x = [&](int i) { return scalar_vec(a + h * i); };  // i = 0..nodes-1
    for (int r = 0; r < m; ++r) {
      const int i = r + 1;
      const double ap = op.a(scalar_vec(a + h * (i + 0.5)))(0, 0);
      const double am = op.a(scalar_vec(a + h * (i - 0.5)))(0, 0);
      const double bi = op.b(x(i))[0];
      const double ci = op.c(x(i));
      L(r, r) += -(ap + am) / (h * h) - ci;
      if (r + 1 < m) L(r, r + 1) += ap / (h * h) - bi / (2 * h) + op.d(x(i + 1))[0] / (2 * h);
      if (r - 1 >= 0) L(r, r - 1) += am / (h * h) + bi / (2 * h) - op.d(x(i - 1))[0] / (2 * h);
    }
    const Eigen::MatrixXd G = (-L).partialPivLu().inverse() / h;
    k.g_ = Eigen::MatrixXd::Zero(nodes, nodes);
    k.g_.block(1, 1, m, m) = G;
    return k;
  }

  /// Bilinear interpolation of the nodal kernel; zero on the boundary.
  [[nodiscard]] double operator()(double x, double y) const {
    if (x <= a_ || x >= b_ || y <= a_ || y >= b_) return 0.0;
    const double tx = (x - a_) / h_;
    const double ty = (y - a_) / h_;
    const int i = std::min(static_cast<int>(tx), n_ - 2);
    const int j = std::min(static_cast<int>(ty), n_ - 2);
    const double fx = tx - i;
    const double fy = ty - j;
    return (1 - fx) * (1 - fy) * g_(i, j) + fx * (1 - fy) * g_(i + 1, j) + (1 - fx) * fy * g_(i, j + 1) +
           fx * fy * g_(i + 1, j + 1);
  }

  [[nodiscard]] double a() const { return a_; }
  [[nodiscard]] double b() const { return b_; }
  [[nodiscard]] int nodes() const { return n_; }
  [[nodiscard]] const Eigen::MatrixXd& matrix() const { return g_; }

 private:
  double a_ = 0.0;
  double b_ = 1.0;
  double h_ = 1.0;
  int n_ = 0;
  Eigen::MatrixXd g_;
};

struct KernelSpec;

/// Adjoint kernel: G^(x, y) = G(y, x).
struct AdjointOf {
  std::shared_ptr<const KernelSpec> base;
};

struct KernelSpec {
  std::variant<IntervalLaplacian, StableExitMoment, std::shared_ptr<const DiscreteKernel>, AdjointOf> kind;
};

inline KernelSpec adjoint(const KernelSpec& k) { return KernelSpec{AdjointOf{std::make_shared<const KernelSpec>(k)}}; }

/// G(x, y) = (1/s) ((x ^ y) - a)(b - (x v y)) / (b - a) for -s u'' = delta_y.
inline double green_interval(const IntervalLaplacian& k, double x, double y) {
  require(k.diffusion_scale > 0.0, "diffusion scale must be positive");
  require(x > k.a && x < k.b && y > k.a && y < k.b, "green_interval arguments must lie in the open interval");
  return (std::min(x, y) - k.a) * (k.b - std::max(x, y)) / ((k.b - k.a) * k.diffusion_scale);
}

namespace detail {

inline std::optional<std::pair<double, double>> kernel_interval(const KernelSpec& k) {
  return std::visit(
      [](const auto& v) -> std::optional<std::pair<double, double>> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, IntervalLaplacian>) return std::pair{v.a, v.b};
        else if constexpr (std::is_same_v<T, std::shared_ptr<const DiscreteKernel>>) return std::pair{v->a(), v->b()};
        else if constexpr (std::is_same_v<T, AdjointOf>) return kernel_interval(*v.base);
        else return std::nullopt;
      },
      k.kind);
}

// Breakpoints of y -> G(x, y): the diagonal and, for nodal kernels, the grid.
inline std::vector<double> kernel_breakpoints(const KernelSpec& k, double x) {
  std::vector<double> bp{x};
  const KernelSpec* cur = &k;
  while (const auto* adj = std::get_if<AdjointOf>(&cur->kind)) cur = adj->base.get();
  if (const auto* dk = std::get_if<std::shared_ptr<const DiscreteKernel>>(&cur->kind)) {
    const auto& K = **dk;
    const double h = (K.b() - K.a()) / (K.nodes() - 1);
    for (int i = 1; i + 1 < K.nodes(); ++i) bp.push_back(K.a() + h * i);
  }
  return bp;
}

}  // namespace detail

/// Pointwise kernel value G(x, y), zero outside the open interval.
inline double kernel_value(const KernelSpec& k, double x, double y) {
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, IntervalLaplacian>) {
          if (x <= v.a || x >= v.b || y <= v.a || y >= v.b) return 0.0;
          return green_interval(v, x, y);
        } else if constexpr (std::is_same_v<T, std::shared_ptr<const DiscreteKernel>>) {
          return (*v)(x, y);
        } else if constexpr (std::is_same_v<T, AdjointOf>) {
          return kernel_value(*v.base, y, x);
        } else {
          throw Error(ErrorCode::no_kernel, "no pointwise kernel for the stable exit moment; use Monte Carlo path estimator");
        }
      },
      k.kind);
}

/// E_x tau_B for the rotation-invariant alpha-stable process killed on leaving
/// B(0, radius): C_{d,alpha} (radius^2 - |x|^2)^{alpha/2},
/// C_{d,alpha} = Gamma(d/2) / (2^alpha Gamma(1 + alpha/2) Gamma((d + alpha)/2)).
inline double stable_exit_moment(double alpha, double radius, int dim, const Vec& x, double scale = 1.0) {
  require(alpha > 0.0 && alpha <= 2.0, "alpha must lie in (0, 2]");
  require(radius > 0.0 && dim >= 1, "radius must be positive");
  const double r2 = x.squaredNorm();
  require(r2 < radius * radius, "stable_exit_moment needs |x| < radius");
  const double c = std::tgamma(0.5 * dim) /
                   (std::pow(2.0, alpha) * std::tgamma(1.0 + 0.5 * alpha) * std::tgamma(0.5 * (dim + alpha)));
  return c * std::pow(radius * radius - r2, 0.5 * alpha) / scale;
}

/// Quadrature panels used by the kernel integrals.
inline constexpr int kKernelPanels = 256;

/// R mu (x) = int G(x, y) mu(dy).
inline double potential_Rmu(const KernelSpec& k, const MeasureData& mu, const Vec& x) {
  if (const auto* st = std::get_if<StableExitMoment>(&k.kind)) {
    if (mu.empty()) return 0.0;
    if (!mu.atoms.empty() || !mu.bumps.empty() || !mu.density || !mu.density->is_constant())
      throw Error(ErrorCode::no_kernel, "no kernel; use Monte Carlo path estimator");
    return mu.density->constant() * stable_exit_moment(st->alpha, st->radius, st->dim, x - st->center, st->scale);
  }
  const auto iv = detail::kernel_interval(k);
  if (!iv) throw Error(ErrorCode::no_kernel, "no kernel; use Monte Carlo path estimator");
  const double xv = x[0];
  double s = 0.0;
  for (const auto& a : mu.atoms) s += a.weight * kernel_value(k, xv, a.point[0]);
  if (mu.has_density()) {
    auto bp = detail::kernel_breakpoints(k, xv);
    const auto mbp = mu.breakpoints(1);
    bp.insert(bp.end(), mbp[0].begin(), mbp[0].end());
    s += quad::integrate([&](double y) { return kernel_value(k, xv, y) * mu.density_at(scalar_vec(y)); }, iv->first,
                         iv->second, kKernelPanels, bp);
  }
  return s;
}

/// Co-potential G^ phi (x) = int G(y, x) phi(y) dy.
template <typename Phi>
double copotential(const KernelSpec& k, Phi&& phi, const Vec& x) {
  const auto iv = detail::kernel_interval(k);
  if (!iv) throw Error(ErrorCode::no_kernel, "no kernel; use Monte Carlo path estimator");
  const double xv = x[0];
  const auto bp = detail::kernel_breakpoints(adjoint(k), xv);
  return quad::integrate([&](double y) { return kernel_value(k, y, xv) * phi(scalar_vec(y)); }, iv->first, iv->second,
                         kKernelPanels, bp);
}

/// Exact kernel for (L, D) when one exists: s * Laplacian on an interval, or
/// the drift-free fractional Laplacian on a ball (exit moment only).
inline std::optional<KernelSpec> kernel_for(const OperatorSpec& spec, const Domain& domain) {
  if (const auto* op = std::get_if<DivergenceForm>(&spec)) {
    const auto* iv = std::get_if<Interval>(&domain.shape());
    const auto s = isotropic_laplacian_scale(*op);
    if (iv && s) return KernelSpec{IntervalLaplacian{iv->a, iv->b, *s}};
    return std::nullopt;
  }
  if (const auto* op = std::get_if<FractionalLaplacian>(&spec)) {
    if (op->drift) return std::nullopt;
    if (const auto* iv = std::get_if<Interval>(&domain.shape()))
      return KernelSpec{StableExitMoment{op->alpha, 0.5 * (iv->b - iv->a), 1, op->scale, scalar_vec(0.5 * (iv->a + iv->b))}};
    if (const auto* ball = std::get_if<Ball>(&domain.shape()))
      return KernelSpec{StableExitMoment{op->alpha, ball->radius, static_cast<int>(ball->center.size()), op->scale, ball->center}};
  }
  return std::nullopt;
}

/// Whether potential_Rmu can evaluate R mu for this kernel exactly.
inline bool kernel_supports(const KernelSpec& k, const MeasureData& mu) {
  if (std::holds_alternative<StableExitMoment>(k.kind))
    return mu.empty() || (mu.atoms.empty() && mu.bumps.empty() && mu.density && mu.density->is_constant());
  return true;
}

}  // namespace fkmd
