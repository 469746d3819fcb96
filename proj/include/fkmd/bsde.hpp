#pragma once

#include "fkmd/ensemble.hpp"
#include "fkmd/field.hpp"
#include "fkmd/kernels.hpp"
#include "fkmd/process.hpp"
#include "fkmd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace fkmd {

struct MartingaleReport {
  std::vector<double> checkpoint_times;
  std::vector<double> ensemble_means;
  std::vector<double> std_error;
  double initial_value = 0.0;  // Z_0 = u(x0)
  double max_drift = 0.0;
  bool pass = true;
  // Integrability diagnostics, no threshold attached.
  double sup_u_moment_q = 0.5;
  double sup_u_moment = 0.0;  // E sup_t |u(X_t)|^q
  double sup_z_median = 0.0;
  double sup_z_q99 = 0.0;
  double sup_z_max = 0.0;
};

struct VerifyConfig {
  int threads = 1;
  double epsilon = 0.0;  // atom mollification; 0 means 2 sqrt(dt)
  int checkpoint_count = 8;
};

namespace detail {

inline MeasureData pathwise_measure(const MeasureData& mu, const Domain& domain, double eps, double dt) {
  if (mu.atoms.empty()) return mu;
  return mollify(mu, eps > 0.0 ? eps : 2.0 * std::sqrt(dt), domain);
}

inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  const auto k = static_cast<std::size_t>(std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

}  // namespace detail

/// Ensemble means of Z_t = u(X_t) 1{t < zeta} + int_0^{t ^ zeta} f(X, u(X)) ds
/// + A^mu_{t ^ zeta}. For the true solution E Z_t = u(x0) at every t. Without
/// explicit checkpoints a first pass picks 8 geometric times up to the 95th
/// percentile of zeta. Checkpoints are rounded to multiples of dt.
inline MartingaleReport martingale_residual(const SolutionField& u, const Problem& pb, const Vec& x0, const SimConfig& sim,
                                            std::vector<double> checkpoints = {}, const VerifyConfig& vc = {}) {
  sim.check();
  detail::require_valid(pb.op, pb.domain);
  detail::require_start(pb.domain, x0);
  const PathModel model(pb.op, pb.domain, sim.dt);
  const MeasureData rho = detail::pathwise_measure(pb.mu, pb.domain, vc.epsilon, sim.dt);
  const bool use_rho = rho.has_density();
  const bool use_f = !pb.f.identically_zero;
  const std::size_t P = sim.paths;
  MartingaleReport rep;
  if (checkpoints.empty()) {
    std::vector<double> life(P);
    parallel_for(P, vc.threads, [&](std::size_t p) {
      life[p] = model.run(x0, sim.seed, p, sim.max_horizon, [](const Vec&, double, double) {}).lifetime;
    });
    const double q95 = detail::quantile(life, 0.95);
    const int K = std::max(1, vc.checkpoint_count);
    for (int k = 0; k < K; ++k)
      checkpoints.push_back(K == 1 ? q95 : q95 * std::pow(64.0, -static_cast<double>(K - 1 - k) / (K - 1)));
  }
  require(std::is_sorted(checkpoints.begin(), checkpoints.end()) && checkpoints.front() > 0.0,
          "checkpoints must be positive and increasing");
  // Snap to the step grid so Z is read at simulated states, not between them.
  for (double& c : checkpoints) c = static_cast<double>(std::max<long long>(1, std::llround(c / sim.dt))) * sim.dt;
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  const std::size_t K = checkpoints.size();
  std::vector<double> z(P * K);
  std::vector<double> sup_z(P);
  std::vector<double> sup_u(P);
  const double q = rep.sup_u_moment_q;
  parallel_for(P, vc.threads, [&](std::size_t p) {
    double acc = 0.0;
    std::size_t k = 0;
    double sz = std::abs(u(x0));
    double su = std::abs(u(x0));
    double* zp = &z[p * K];
    model.run(x0, sim.seed, p, sim.max_horizon, [&](const Vec& y, double t, double len) {
      double rate = 0.0;
      const double uy = u(y);
      if (use_f) rate += pb.f(y, uy);
      if (use_rho) rate += rho.density_at(y);
      while (k < K && checkpoints[k] < t + len - 1e-7 * sim.dt) {
        zp[k] = uy + acc + rate * (checkpoints[k] - t);
        ++k;
      }
      sz = std::max(sz, std::abs(uy + acc));
      su = std::max(su, std::abs(uy));
      acc += rate * len;
    });
    for (; k < K; ++k) zp[k] = acc;
    sup_z[p] = std::max(sz, std::abs(acc));
    sup_u[p] = std::pow(su, q);
  });
  rep.checkpoint_times = checkpoints;
  rep.initial_value = u(x0);
  std::vector<double> col(P);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t p = 0; p < P; ++p) col[p] = z[p * K + k];
    const auto ms = summarize(col);
    rep.ensemble_means.push_back(ms.mean);
    rep.std_error.push_back(ms.std_error);
    const double drift = std::abs(ms.mean - rep.initial_value);
    rep.max_drift = std::max(rep.max_drift, drift);
    if (drift > 3.0 * ms.std_error + 1e-12) rep.pass = false;
  }
  rep.sup_u_moment = summarize(sup_u).mean;
  rep.sup_z_median = detail::quantile(sup_z, 0.5);
  rep.sup_z_q99 = detail::quantile(sup_z, 0.99);
  rep.sup_z_max = *std::max_element(sup_z.begin(), sup_z.end());
  return rep;
}

struct HorizonRow {
  double horizon;
  double value;
  double std_error;
};

struct HorizonReport {
  std::vector<HorizonRow> rows;
  bool stabilized = false;  // last two rungs within 3 combined stderr
};

/// Picard solves with paths capped at each horizon n (censored mass counts as
/// zero, the zero terminal condition). With common random numbers the rungs
/// share paths, so for a nonnegative integrand the values are monotone.
inline HorizonReport horizon_truncation(const Problem& pb, const Grid& grid, const Vec& x0, const std::vector<double>& horizons,
                                        const SimConfig& sim, PicardConfig pc) {
  require(!horizons.empty(), "horizon ladder is empty");
  for (std::size_t i = 0; i + 1 < horizons.size(); ++i)
    require(horizons[i] < horizons[i + 1], "horizons must be strictly increasing");
  detail::require_start(pb.domain, x0);
  pc.censoring_is_error = false;
  pc.measure_mode = MeasureMode::pathwise;
  HorizonReport rep;
  for (double n : horizons) {
    SimConfig s = sim;
    s.max_horizon = n;
    s.dt = std::min(sim.dt, n);
    const auto res = picard_solve(pb, grid, s, pc);
    const SolutionField se(grid, pb.domain, res.report.std_error);
    rep.rows.push_back({n, res.u(x0), se(x0)});
  }
  if (rep.rows.size() >= 2) {
    const auto& a = rep.rows[rep.rows.size() - 2];
    const auto& b = rep.rows.back();
    rep.stabilized = std::abs(b.value - a.value) <= 3.0 * std::hypot(a.std_error, b.std_error) + 1e-12;
  } else {
    rep.stabilized = true;
  }
  return rep;
}

struct DriverBoundReport {
  double lhs = 0.0;  // E int |f(X, u(X))| dt
  double rhs = 0.0;  // E[int |f(X,0)| dt + int d|A^mu|]
  double std_error = 0.0;  // of lhs - rhs (pathwise part)
  double rhs_std_error = 0.0;
  double u_x0 = 0.0;
  bool driver_pass = true;
  bool majorant_pass = true;  // |u(x0)| <= rhs + 3 stderr
  [[nodiscard]] bool pass() const { return driver_pass && majorant_pass; }
};

/// Both sides of the driver L1 inequality at x0 on one ensemble, and the
/// t = 0 majorant |u(x0)| <= E_x0[int |f(X,0)| dt + d|A^mu|]. The |mu| term
/// comes from the exact kernel when one exists.
inline DriverBoundReport driver_l1_bound_check(const SolutionField& u, const Problem& pb, const Vec& x0, const SimConfig& sim,
                                               const VerifyConfig& vc = {}) {
  sim.check();
  detail::require_valid(pb.op, pb.domain);
  detail::require_start(pb.domain, x0);
  const PathModel model(pb.op, pb.domain, sim.dt);
  const MeasureData abs_mu = pb.mu.absolute();
  const auto kernel = kernel_for(pb.op, pb.domain);
  const bool exact = kernel && kernel_supports(*kernel, abs_mu);
  const MeasureData rho = exact ? MeasureData::zero() : detail::pathwise_measure(abs_mu, pb.domain, vc.epsilon, sim.dt);
  const bool use_rho = rho.has_density();
  const std::size_t P = sim.paths;
  std::vector<double> l(P), r(P), d(P);
  parallel_for(P, vc.threads, [&](std::size_t p) {
    double lv = 0.0;
    double rv = 0.0;
    model.run(x0, sim.seed, p, sim.max_horizon, [&](const Vec& y, double, double len) {
      lv += std::abs(pb.f(y, u(y))) * len;
      rv += std::abs(pb.f(y, 0.0)) * len;
      if (use_rho) rv += rho.density_at(y) * len;
    });
    l[p] = lv;
    r[p] = rv;
    d[p] = lv - rv;
  });
  DriverBoundReport rep;
  const double kernel_part = exact && !abs_mu.empty() ? potential_Rmu(*kernel, abs_mu, x0) : 0.0;
  rep.lhs = summarize(l).mean;
  const auto rs = summarize(r);
  rep.rhs = rs.mean + kernel_part;
  rep.rhs_std_error = rs.std_error;
  rep.std_error = summarize(d).std_error;
  rep.u_x0 = u(x0);
  rep.driver_pass = rep.lhs - rep.rhs <= 3.0 * rep.std_error + 1e-12;
  rep.majorant_pass = std::abs(rep.u_x0) <= rep.rhs + 3.0 * rep.rhs_std_error + 1e-12;
  return rep;
}

}  // namespace fkmd
