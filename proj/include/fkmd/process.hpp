#pragma once

#include "fkmd/domain.hpp"
#include "fkmd/ensemble.hpp"
#include "fkmd/error.hpp"
#include "fkmd/linalg.hpp"
#include "fkmd/measure_data.hpp"
#include "fkmd/operators.hpp"
#include "fkmd/rng.hpp"
#include "fkmd/stable.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace fkmd {

struct SimConfig {
  double dt = 1e-3;
  double max_horizon = 100.0;
  std::uint64_t seed = 1;
  std::size_t paths = 1000;

  void check() const {
    require(dt > 0.0 && max_horizon > 0.0, "dt and max_horizon must be positive");
    require(dt <= max_horizon, "dt must not exceed max_horizon");
    require(paths >= 1, "paths must be at least 1");
  }
};

enum class ExitKind { boundary_exit, jump_overshoot, killing_clock, horizon_cap };

inline const char* to_string(ExitKind k) {
  switch (k) {
    case ExitKind::boundary_exit: return "boundary-exit";
    case ExitKind::jump_overshoot: return "jump-overshoot";
    case ExitKind::killing_clock: return "killing-clock";
    case ExitKind::horizon_cap: return "horizon-cap";
  }
  return "?";
}

struct PathEnd {
  double lifetime;
  ExitKind kind;

  [[nodiscard]] bool censored() const { return kind == ExitKind::horizon_cap; }
};

/// One trajectory up to its lifetime. states[k] is the position on
/// [times[k], times[k+1]) (times[K+1] := lifetime); all lie in the open domain.
struct PathSample {
  std::vector<double> times;
  std::vector<Vec> states;
  double lifetime = 0.0;
  ExitKind exit_kind = ExitKind::boundary_exit;

  [[nodiscard]] bool censored() const { return exit_kind == ExitKind::horizon_cap; }
};

/// Time-discretised killed process for one operator, domain and step size.
/// run() visits every interval [t_k, t_k + len) of the path with the
/// left-endpoint state; the path is a pure function of (seed, index).
///
/// Divergence form: Euler-Maruyama with diffusion 2 sym(a), drift from the
/// first-order terms, Brownian-bridge crossing test against the nearest face,
/// killing at rate c - div d. Fractional Laplacian: exact stable increments,
/// killed at the first step outside the domain, drift by Lie splitting.
/// Ornstein-Uhlenbeck: exact Gaussian transitions, exponential killing clock.
/// An exit inside step k is dated t_k + dt/2.
class PathModel {
 public:
  PathModel(OperatorSpec spec, Domain domain, double dt) : spec_(std::move(spec)), domain_(std::move(domain)), dt_(dt) {
    require(dt_ > 0.0, "dt must be positive");
    const int d = domain_.dim();
    if (const auto* op = std::get_if<DivergenceForm>(&spec_)) {
      require(domain_.bounded(), "divergence-form processes need a bounded domain");
      const_diffusion_ = op->a.is_constant();
      if (const_diffusion_) {
        var_ = 2.0 * op->generator_diffusion_matrix(Vec::Zero(d));
        sigma_ = Eigen::LLT<Eigen::MatrixXd>(Eigen::MatrixXd(var_)).matrixL().toDenseMatrix();
      }
      const_drift_ = op->a.is_constant() && op->b.is_constant() && op->d.is_constant();
      if (const_drift_) drift_ = drift_at(*op, Vec::Zero(d));
      const_killing_ = op->c.is_constant() && op->d.is_constant();
      if (const_killing_) killing_ = std::max(0.0, op->c.constant());
    } else if (const auto* op = std::get_if<FractionalLaplacian>(&spec_)) {
      require(op->alpha > 0.0 && op->alpha <= 2.0, "alpha must lie in (0, 2]");
      jump_scale_ = std::pow(op->scale * dt_, 1.0 / op->alpha);
    } else {
      const auto& ou = std::get<OrnsteinUhlenbeck>(spec_);
      require(ou.lambda > 0.0, "Ornstein-Uhlenbeck killing rate lambda must be positive");
      // Van Loan: exp([[-A, Q], [0, A^T]] dt) = [[*, F12], [0, F22]],
      // Phi = F22^T = exp(A dt), Q_dt = F22^T F12.
      const Eigen::MatrixXd A = ou.A;
      const Eigen::MatrixXd Q = ou.Q;
      Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * d, 2 * d);
      block.topLeftCorner(d, d) = -A * dt_;
      block.topRightCorner(d, d) = Q * dt_;
      block.bottomRightCorner(d, d) = A.transpose() * dt_;
      const Eigen::MatrixXd E = block.exp();
      const Eigen::MatrixXd phi = E.bottomRightCorner(d, d).transpose();
      Eigen::MatrixXd qdt = phi * E.topRightCorner(d, d);
      qdt = 0.5 * (qdt + qdt.transpose());
      transition_ = phi;
      sigma_ = Eigen::LLT<Eigen::MatrixXd>(qdt).matrixL().toDenseMatrix();
      var_ = qdt;
    }
  }

  [[nodiscard]] const Domain& domain() const { return domain_; }
  [[nodiscard]] const OperatorSpec& spec() const { return spec_; }
  [[nodiscard]] double dt() const { return dt_; }
  [[nodiscard]] const Mat& transition_matrix() const { return transition_; }
  [[nodiscard]] const Mat& step_covariance() const { return var_; }

  template <typename Visit>
  PathEnd run(const Vec& x0, std::uint64_t seed, std::uint64_t index, double horizon, Visit&& visit) const {
    StreamRng rng(seed, index);
    if (const auto* op = std::get_if<DivergenceForm>(&spec_)) return run_diffusion(*op, x0, rng, horizon, visit);
    if (const auto* op = std::get_if<FractionalLaplacian>(&spec_)) return run_stable(*op, x0, rng, horizon, visit);
    return run_ou(std::get<OrnsteinUhlenbeck>(spec_), x0, rng, horizon, visit);
  }

 private:
  static Vec drift_at(const DivergenceForm& op, const Vec& x) {
    return detail::column_divergence(op.a, x) - op.b(x) + op.d(x);
  }

  // Probability that a bridge between two interior points touched the face.
  static double crossing_probability(double d1, double d2, double normal_var, double step) {
    const double arg = 2.0 * d1 * d2 / (normal_var * step);
    return arg > 40.0 ? 0.0 : std::exp(-arg);
  }

  template <typename Visit>
  PathEnd run_diffusion(const DivergenceForm& op, const Vec& x0, StreamRng& rng, double horizon, Visit& visit) const {
    const auto* iv = std::get_if<Interval>(&domain_.shape());
    if (iv && const_diffusion_ && const_drift_ && const_killing_ && killing_ == 0.0)
      return run_diffusion_interval(x0[0], iv->a, iv->b, rng, horizon, visit);

    const int d = domain_.dim();
    Vec x = x0;
    Vec xn(d);
    Vec z(d);
    Mat var = var_;
    Mat sigma = sigma_;
    Vec drift = drift_;
    const double clock = const_killing_ && killing_ > 0.0 ? rng.exponential() / killing_ : std::numeric_limits<double>::infinity();
    const double end = std::min(clock, horizon);
    for (std::uint64_t k = 0;; ++k) {
      const double t = static_cast<double>(k) * dt_;
      if (t + dt_ >= end) {
        // Final partial step: the clock or the horizon ends the path first
        // unless the position leaves the domain inside it.
        const double step = end - t;
        if (step > 0.0 && !advance(op, x, xn, z, var, sigma, drift, step, rng)) {
          visit(x, t, 0.5 * step);
          return {t + 0.5 * step, ExitKind::boundary_exit};
        }
        if (step > 0.0) visit(x, t, step);
        return {end, clock <= horizon ? ExitKind::killing_clock : ExitKind::horizon_cap};
      }
      if (!const_killing_) {
        const double rate = std::max(0.0, op.c(x) - detail::divergence(op.d, x));
        if (rate > 0.0) {
          const double p = -std::expm1(-rate * dt_);
          if (rng.uniform() < p) {
            const double tau = -std::log1p(-rng.uniform() * p) / rate;
            visit(x, t, tau);
            return {t + tau, ExitKind::killing_clock};
          }
        }
      }
      if (!advance(op, x, xn, z, var, sigma, drift, dt_, rng)) {
        visit(x, t, 0.5 * dt_);
        return {t + 0.5 * dt_, ExitKind::boundary_exit};
      }
      visit(x, t, dt_);
      x = xn;
    }
  }

  // One Euler step x -> xn; false if the step (or its bridge) left the domain.
  bool advance(const DivergenceForm& op, const Vec& x, Vec& xn, Vec& z, Mat& var, Mat& sigma, Vec& drift, double step,
               StreamRng& rng) const {
    const int d = domain_.dim();
    if (!const_diffusion_) {
      var = 2.0 * op.generator_diffusion_matrix(x);
      sigma = Eigen::LLT<Eigen::MatrixXd>(Eigen::MatrixXd(var)).matrixL().toDenseMatrix();
    }
    if (!const_drift_) drift = drift_at(op, x);
    for (int i = 0; i < d; ++i) z[i] = rng.normal();
    xn = x + drift * step + sigma * z * std::sqrt(step);
    if (!domain_.contains(xn)) return false;
    const Face face = domain_.nearest_face(xn);
    const double p = crossing_probability(face.distance(x), face.distance(xn), face.normal.dot(var * face.normal), step);
    return !(p > 0.0 && rng.uniform() < p);
  }

  // Constant-coefficient diffusion on an interval: scalar loop.
  template <typename Visit>
  PathEnd run_diffusion_interval(double x, double a, double b, StreamRng& rng, double horizon, Visit& visit) const {
    const double var = var_(0, 0);
    const double sd = std::sqrt(var * dt_);
    const double mu = drift_[0] * dt_;
    Vec xv(1);
    for (std::uint64_t k = 0;; ++k) {
      const double t = static_cast<double>(k) * dt_;
      double step = dt_;
      if (t + dt_ >= horizon) step = horizon - t;
      const double xn = step == dt_ ? x + mu + sd * rng.normal() : x + drift_[0] * step + std::sqrt(var * step) * rng.normal();
      xv[0] = x;
      bool exited = xn <= a || xn >= b;
      if (!exited) {
        const bool lower = xn - a < b - xn;
        const double d1 = lower ? x - a : b - x;
        const double d2 = lower ? xn - a : b - xn;
        const double p = crossing_probability(d1, d2, var, step);
        exited = p > 0.0 && rng.uniform() < p;
      }
      if (exited) {
        visit(xv, t, 0.5 * step);
        return {t + 0.5 * step, ExitKind::boundary_exit};
      }
      visit(xv, t, step);
      if (step < dt_) return {horizon, ExitKind::horizon_cap};
      x = xn;
    }
  }

  template <typename Visit>
  PathEnd run_stable(const FractionalLaplacian& op, const Vec& x0, StreamRng& rng, double horizon, Visit& visit) const {
    const int d = domain_.dim();
    Vec x = x0;
    Vec xn(d);
    Vec s(d);
    for (std::uint64_t k = 0;; ++k) {
      const double t = static_cast<double>(k) * dt_;
      double step = dt_;
      if (t + dt_ >= horizon) step = horizon - t;
      xn = x;
      if (op.drift) xn -= 0.5 * step * (*op.drift)(xn);
      isotropic_stable(op.alpha, rng, s);
      xn += (step == dt_ ? jump_scale_ : std::pow(op.scale * step, 1.0 / op.alpha)) * s;
      if (op.drift) xn -= 0.5 * step * (*op.drift)(xn);
      if (domain_.bounded() && !domain_.contains(xn)) {
        visit(x, t, 0.5 * step);
        return {t + 0.5 * step, ExitKind::jump_overshoot};
      }
      visit(x, t, step);
      if (step < dt_) return {horizon, ExitKind::horizon_cap};
      x = xn;
    }
  }

  template <typename Visit>
  PathEnd run_ou(const OrnsteinUhlenbeck& op, const Vec& x0, StreamRng& rng, double horizon, Visit& visit) const {
    const int d = domain_.dim();
    const double clock = rng.exponential() / op.lambda;
    const double end = std::min(clock, horizon);
    Vec x = x0;
    Vec xn(d);
    Vec z(d);
    for (std::uint64_t k = 0;; ++k) {
      const double t = static_cast<double>(k) * dt_;
      if (t + dt_ >= end) {
        visit(x, t, end - t);
        return {end, clock <= horizon ? ExitKind::killing_clock : ExitKind::horizon_cap};
      }
      for (int i = 0; i < d; ++i) z[i] = rng.normal();
      xn = transition_ * x + sigma_ * z;
      if (domain_.bounded() && !domain_.contains(xn)) {
        visit(x, t, 0.5 * dt_);
        return {t + 0.5 * dt_, ExitKind::boundary_exit};
      }
      visit(x, t, dt_);
      x = xn;
    }
  }

  OperatorSpec spec_;
  Domain domain_;
  double dt_;
  bool const_diffusion_ = false;
  bool const_drift_ = false;
  bool const_killing_ = false;
  double killing_ = 0.0;
  double jump_scale_ = 1.0;
  Mat var_;
  Mat sigma_;
  Mat transition_;
  Vec drift_;
};

namespace detail {

inline void require_valid(const OperatorSpec& spec, const Domain& domain) {
  const auto rep = validate(spec, domain);
  require(rep.ok, "operator/domain failed validation: " + rep.summary());
}

inline void require_start(const Domain& domain, const Vec& x0) {
  require(x0.size() == domain.dim(), "starting point has the wrong dimension");
  require(domain.contains(x0), "starting point must lie in the open domain");
}

}  // namespace detail

/// Samples path `path_index` of the killed process from x0.
inline PathSample sample_path(const OperatorSpec& spec, const Domain& domain, const Vec& x0, const SimConfig& cfg,
                              std::uint64_t path_index) {
  cfg.check();
  detail::require_valid(spec, domain);
  detail::require_start(domain, x0);
  const PathModel model(spec, domain, cfg.dt);
  PathSample path;
  const PathEnd end = model.run(x0, cfg.seed, path_index, cfg.max_horizon, [&](const Vec& x, double t, double) {
    path.times.push_back(t);
    path.states.push_back(x);
  });
  path.lifetime = end.lifetime;
  path.exit_kind = end.kind;
  return path;
}

/// A^mu_zeta = sum_k density(X_{t_k}) (t_{k+1} ^ zeta - t_k). mu must be
/// atom-free; mollify atoms first.
inline double additive_functional(const PathSample& path, const MeasureData& mu) {
  require(mu.atoms.empty(), "additive_functional needs an atom-free measure; mollify the atoms first");
  if (!mu.has_density()) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < path.states.size(); ++k) {
    const double next = k + 1 < path.times.size() ? path.times[k + 1] : path.lifetime;
    s += mu.density_at(path.states[k]) * (next - path.times[k]);
  }
  return s;
}

struct ExitTimeEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  double censored_fraction = 0.0;
};

/// Mean lifetime over the uncensored paths of the ensemble.
inline ExitTimeEstimate mean_exit_time(const OperatorSpec& spec, const Domain& domain, const Vec& x0, const SimConfig& cfg,
                                       int threads = 1) {
  cfg.check();
  detail::require_valid(spec, domain);
  detail::require_start(domain, x0);
  const PathModel model(spec, domain, cfg.dt);
  std::vector<double> life(cfg.paths);
  std::vector<char> censored(cfg.paths, 0);
  parallel_for(cfg.paths, threads, [&](std::size_t p) {
    const PathEnd end = model.run(x0, cfg.seed, p, cfg.max_horizon, [](const Vec&, double, double) {});
    life[p] = end.lifetime;
    censored[p] = end.censored() ? 1 : 0;
  });
  std::vector<double> kept;
  kept.reserve(cfg.paths);
  for (std::size_t p = 0; p < cfg.paths; ++p)
    if (!censored[p]) kept.push_back(life[p]);
  ExitTimeEstimate out;
  out.censored_fraction = 1.0 - static_cast<double>(kept.size()) / static_cast<double>(cfg.paths);
  if (out.censored_fraction >= 1e-3)
    throw Error(ErrorCode::horizon_too_small,
                "horizon too small: censored fraction " + std::to_string(out.censored_fraction) + " >= 1e-3");
  const auto ms = summarize(kept);
  out.estimate = ms.mean;
  out.std_error = ms.std_error;
  return out;
}

}  // namespace fkmd
