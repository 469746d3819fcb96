#pragma once

#include "fkmd/ensemble.hpp"
#include "fkmd/error.hpp"
#include "fkmd/field.hpp"
#include "fkmd/kernels.hpp"
#include "fkmd/measure_data.hpp"
#include "fkmd/operators.hpp"
#include "fkmd/process.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fkmd {

enum class MeasureMode { automatic, kernel, pathwise };

inline const char* to_string(MeasureMode m) {
  switch (m) {
    case MeasureMode::automatic: return "auto";
    case MeasureMode::kernel: return "kernel";
    case MeasureMode::pathwise: return "pathwise";
  }
  return "?";
}

struct PicardConfig {
  double tolerance = 1e-4;
  int max_iterations = 100;
  double damping = 0.5;
  std::size_t paths_per_node = 1000;
  bool crn = true;
  MeasureMode measure_mode = MeasureMode::automatic;
  // Iterate on the occupation kernel of the path ensemble (bounded domains
  // with crn only) and finish with one pathwise sweep.
  bool accelerate = true;
  int occupation_refine = 4;
  int threads = 1;
  double epsilon = 0.0;  // atom mollification half-width; 0 means 2 sqrt(dt)
  bool keep_iterates = false;
  // Horizon-truncated solves treat censored mass as zero instead of failing.
  bool censoring_is_error = true;

  void check() const {
    require(tolerance > 0.0, "picard tolerance must be positive");
    require(damping > 0.0 && damping <= 1.0, "damping must lie in (0, 1]");
    require(max_iterations >= 1, "max_iterations must be at least 1");
    require(paths_per_node >= 2, "paths_per_node must be at least 2");
    require(occupation_refine >= 1, "occupation_refine must be at least 1");
    require(epsilon >= 0.0, "epsilon must be nonnegative");
  }
};

struct Problem {
  OperatorSpec op;
  Domain domain;
  Nonlinearity f;
  MeasureData mu;
};

/// Picard stopped at max_iterations; carries the residual history.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, std::vector<double> residuals)
      : Error(ErrorCode::no_convergence, what), residuals_(std::move(residuals)) {}
  [[nodiscard]] const std::vector<double>& residuals() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

struct SolveReport {
  int iterations = 0;
  std::vector<double> sup_residuals;
  std::vector<double> std_error;  // per grid node
  double l1_f_u = 0.0;
  double l1_f0 = 0.0;
  double tv_mu = 0.0;
  double y_max = 0.0;
  double censored_fraction = 0.0;
  double final_residual = 0.0;  // sup |pathwise map(u*) - u*| after acceleration
  MeasureMode measure_mode = MeasureMode::pathwise;
  bool accelerated = false;
  double epsilon = 0.0;
  std::vector<std::string> warnings;
  std::vector<std::vector<double>> iterates;
};

struct SolveResult {
  SolutionField u;
  SolveReport report;
};

struct MapResult {
  SolutionField field;
  std::vector<double> std_error;
  double censored_fraction = 0.0;
};

namespace detail {

inline void require_monotone(const Nonlinearity& f, const Domain& domain) {
  if (f.identically_zero) return;
  if (!check_monotone(f, domain, 1000))
    throw Error(ErrorCode::not_monotone,
                "nonlinearity is not nonincreasing in y: assumption (A2) (f(x,y1)-f(x,y2))(y1-y2) <= 0 is violated");
}

inline std::vector<std::vector<double>> grid_breakpoints(const Grid& g) {
  std::vector<std::vector<double>> bp(static_cast<std::size_t>(g.dim()));
  for (int a = 0; a < g.dim(); ++a)
    for (int i = 0; i < g.nodes_per_axis(); ++i) bp[static_cast<std::size_t>(a)].push_back(g.lo()[a] + i * g.spacing()[a]);
  return bp;
}

/// int |g| dm over the domain with a grid-sum fallback when quadrature fails.
template <typename G>
double l1_norm(G&& g, const Domain& domain, const ReferenceMeasure& ref, const Grid& grid, std::vector<std::string>& warnings,
               const std::string& what) {
  auto absg = [&](const Vec& x) { return std::abs(g(x)); };
  try {
    return integrate_over(absg, domain, ref, grid_breakpoints(grid), 1e-3, what);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::quadrature_failed) throw;
    warnings.push_back(what + ": quadrature did not settle, using the grid sum");
    double s = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Vec x = grid.point(i);
      if (domain.contains(x)) s += absg(x);
    }
    return s * grid.cell_volume();
  }
}

inline std::uint64_t sweep_seed(std::uint64_t seed, int iteration, bool crn) {
  if (crn) return seed;
  return seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(iteration + 1));
}

/// Everything the Monte Carlo map needs, prepared once per solve.
class Engine {
 public:
  Engine(const Problem& pb, Grid grid, const SimConfig& sim, const PicardConfig& pc)
      : pb_(pb), grid_(std::move(grid)), sim_(sim), pc_(pc), model_(pb.op, pb.domain, sim.dt) {
    require(grid_.dim() == pb.domain.dim(), "grid and domain dimensions differ");
    const SolutionField probe(grid_, pb_.domain);
    for (std::size_t i = 0; i < grid_.size(); ++i)
      if (probe.node_active(i)) active_.push_back(i);
    require(!active_.empty(), "grid has no node inside the open domain");

    epsilon_ = pc_.epsilon > 0.0 ? pc_.epsilon : 2.0 * std::sqrt(sim_.dt);
    const auto kernel = kernel_for(pb_.op, pb_.domain);
    const bool exact = kernel && kernel_supports(*kernel, pb_.mu) && kernel_supports(*kernel, pb_.mu.absolute());
    if (pc_.measure_mode == MeasureMode::kernel && !exact)
      throw Error(ErrorCode::no_kernel, "no kernel; use Monte Carlo path estimator");
    mode_ = (pc_.measure_mode == MeasureMode::pathwise || !exact) ? MeasureMode::pathwise : MeasureMode::kernel;
    if (pb_.mu.empty()) mode_ = exact ? MeasureMode::kernel : MeasureMode::pathwise;
    if (mode_ == MeasureMode::kernel) {
      kernel_ = *kernel;
      kernel_term_.assign(grid_.size(), 0.0);
      kernel_abs_.assign(grid_.size(), 0.0);
      const MeasureData abs_mu = pb_.mu.absolute();
      for (std::size_t i : active_) {
        const Vec x = grid_.point(i);
        kernel_term_[i] = potential_Rmu(*kernel_, pb_.mu, x);
        kernel_abs_[i] = potential_Rmu(*kernel_, abs_mu, x);
      }
    } else {
      smooth_ = pb_.mu.atoms.empty() ? pb_.mu : mollify(pb_.mu, epsilon_, pb_.domain);
      pathwise_measure_ = smooth_.has_density();
    }
  }

  [[nodiscard]] MeasureMode mode() const { return mode_; }
  [[nodiscard]] double epsilon() const { return epsilon_; }
  [[nodiscard]] const Grid& grid() const { return grid_; }
  [[nodiscard]] const std::vector<std::size_t>& active() const { return active_; }
  [[nodiscard]] bool pathwise_measure() const { return pathwise_measure_; }
  [[nodiscard]] double kernel_term(std::size_t i) const { return mode_ == MeasureMode::kernel ? kernel_term_[i] : 0.0; }
  [[nodiscard]] double kernel_abs(std::size_t i) const { return mode_ == MeasureMode::kernel ? kernel_abs_[i] : 0.0; }

  struct Sweep {
    std::vector<double> mean;
    std::vector<double> std_error;
    std::vector<double> majorant;  // E int |f(X,0)| + d|A^mu|, when requested
    double censored_fraction = 0.0;
  };

  /// One pathwise application of the map to u, clipped at y_max.
  Sweep pathwise(const SolutionField& u, double y_max, bool want_majorant, std::uint64_t seed) const {
    Sweep s;
    s.mean.assign(grid_.size(), 0.0);
    s.std_error.assign(grid_.size(), 0.0);
    if (want_majorant) s.majorant.assign(grid_.size(), 0.0);
    std::vector<std::size_t> censored(active_.size(), 0);
    const bool use_f = !pb_.f.identically_zero;
    const std::size_t P = pc_.paths_per_node;
    parallel_blocks(active_.size(), pc_.threads, [&](std::size_t a) {
      const std::size_t node = active_[a];
      const Vec x0 = grid_.point(node);
      std::vector<double> vals(P);
      std::vector<double> majs(want_majorant ? P : 0);
      for (std::size_t p = 0; p < P; ++p) {
        double acc = 0.0;
        double maj = 0.0;
        double g_first = 0.0;
        double g_last = 0.0;
        double m_first = 0.0;
        double m_last = 0.0;
        const PathEnd end = model_.run(x0, seed, node * P + p, sim_.max_horizon, [&](const Vec& y, double t, double len) {
          double g = 0.0;
          double m = 0.0;
          if (use_f) {
            g += pb_.f(y, truncate(y_max, u(y)));
            if (want_majorant) m += std::abs(pb_.f(y, 0.0));
          }
          if (pathwise_measure_) {
            const double rho = smooth_.density_at(y);
            g += rho;
            if (want_majorant) m += std::abs(rho);
          }
          if (t == 0.0) {
            g_first = g;
            m_first = m;
          }
          g_last = g;
          m_last = m;
          acc += g * len;
          maj += m * len;
        });
        vals[p] = acc + end_correction(g_first, g_last);
        if (want_majorant) majs[p] = maj + end_correction(m_first, m_last);
        if (end.censored()) ++censored[a];
      }
      const auto ms = summarize(vals);
      s.mean[node] = ms.mean + kernel_term(node);
      s.std_error[node] = ms.std_error;
      if (want_majorant) s.majorant[node] = summarize(majs).mean + kernel_abs(node);
    });
    s.censored_fraction = censored_fraction(censored);
    return s;
  }

  /// Occupation kernel K_ij = E int w_j(X_t) dt on a refined lattice, with the
  /// pathwise measure term and its absolute counterpart.
  struct Occupation {
    Grid fine;
    std::vector<std::vector<double>> rows;  // per active node
    std::vector<double> measure;
    std::vector<double> measure_abs;
    double censored_fraction = 0.0;
  };

  Occupation occupation(std::uint64_t seed) const {
    const Grid fine = grid_.refined((grid_.nodes_per_axis() - 1) * pc_.occupation_refine + 1);
    Occupation occ{fine, std::vector<std::vector<double>>(active_.size()), std::vector<double>(active_.size(), 0.0),
                   std::vector<double>(active_.size(), 0.0), 0.0};
    std::vector<std::size_t> censored(active_.size(), 0);
    const std::size_t P = pc_.paths_per_node;
    const bool one_d = fine.dim() == 1;
    const double lo = fine.lo()[0];
    const double inv_h = 1.0 / fine.spacing()[0];
    const int n = fine.nodes_per_axis();
    parallel_blocks(active_.size(), pc_.threads, [&](std::size_t a) {
      const std::size_t node = active_[a];
      const Vec x0 = grid_.point(node);
      std::vector<double> hist(fine.size(), 0.0);
      std::vector<double> meas(pathwise_measure_ ? P : 0);
      std::vector<double> meas_abs(pathwise_measure_ ? P : 0);
      for (std::size_t p = 0; p < P; ++p) {
        double m = 0.0;
        double m_abs = 0.0;
        double rho_first = 0.0;
        double rho_last = 0.0;
        Vec y_last = x0;
        auto deposit = [&](const Vec& y, double len) {
          if (one_d) {
            const double t = std::clamp((y[0] - lo) * inv_h, 0.0, static_cast<double>(n - 1));
            const int i = std::min(static_cast<int>(t), n - 2);
            const double fr = t - i;
            hist[static_cast<std::size_t>(i)] += (1.0 - fr) * len;
            hist[static_cast<std::size_t>(i + 1)] += fr * len;
          } else {
            fine.for_each_weight(y, [&](std::size_t j, double w) { hist[j] += w * len; });
          }
        };
        const PathEnd end = model_.run(x0, seed, node * P + p, sim_.max_horizon, [&](const Vec& y, double t, double len) {
          deposit(y, len);
          y_last = y;
          if (pathwise_measure_) {
            const double rho = smooth_.density_at(y);
            if (t == 0.0) rho_first = rho;
            rho_last = rho;
            m += rho * len;
            m_abs += std::abs(rho) * len;
          }
        });
        deposit(x0, -0.5 * sim_.dt);
        deposit(y_last, 0.5 * sim_.dt);
        if (pathwise_measure_) {
          meas[p] = m + end_correction(rho_first, rho_last);
          meas_abs[p] = m_abs + end_correction(std::abs(rho_first), std::abs(rho_last));
        }
        if (end.censored()) ++censored[a];
      }
      for (double& h : hist) h /= static_cast<double>(P);
      occ.rows[a] = std::move(hist);
      occ.measure[a] = (pathwise_measure_ ? summarize(meas).mean : 0.0) + kernel_term(node);
      occ.measure_abs[a] = (pathwise_measure_ ? summarize(meas_abs).mean : 0.0) + kernel_abs(node);
    });
    occ.censored_fraction = censored_fraction(censored);
    return occ;
  }

  void check_censoring(double fraction, std::vector<std::string>& warnings) const {
    if (fraction < 1e-3) return;
    std::ostringstream msg;
    msg << "horizon too small: censored path fraction " << fraction << " >= 1e-3 at max_horizon " << sim_.max_horizon;
    if (pc_.censoring_is_error) throw Error(ErrorCode::horizon_too_small, msg.str());
    warnings.push_back(msg.str());
  }

 private:
  // Trapezoid end terms: the left-endpoint sum over whole steps carries the
  // O(dt) bias dt/2 (g(x_0) - g(x_last)), which matters when g peaks at the
  // start, e.g. a mollified atom at a grid node. Exact for constant g.
  double end_correction(double g_first, double g_last) const { return 0.5 * sim_.dt * (g_last - g_first); }

  double censored_fraction(const std::vector<std::size_t>& censored) const {
    std::size_t c = 0;
    for (auto v : censored) c += v;
    return static_cast<double>(c) / static_cast<double>(active_.size() * pc_.paths_per_node);
  }

  const Problem& pb_;
  Grid grid_;
  SimConfig sim_;
  PicardConfig pc_;
  PathModel model_;
  std::vector<std::size_t> active_;
  MeasureMode mode_ = MeasureMode::pathwise;
  std::optional<KernelSpec> kernel_;
  std::vector<double> kernel_term_;
  std::vector<double> kernel_abs_;
  MeasureData smooth_;
  bool pathwise_measure_ = false;
  double epsilon_ = 0.0;
};

inline std::string residual_history(const std::vector<double>& r) {
  std::ostringstream os;
  os << "Picard did not converge in " << r.size() << " iterations; sup residuals:";
  for (double v : r) os << ' ' << v;
  return os.str();
}

}  // namespace detail

/// One pathwise application of the Feynman-Kac map to u_k. The measure term
/// uses the exact kernel when available, else mollified paths.
inline MapResult feynman_kac_map(const Problem& pb, const SolutionField& u_k, const SimConfig& sim, const PicardConfig& pc) {
  sim.check();
  pc.check();
  detail::require_valid(pb.op, pb.domain);
  detail::require_monotone(pb.f, pb.domain);
  detail::Engine engine(pb, u_k.grid(), sim, pc);
  const double inf = std::numeric_limits<double>::infinity();
  auto sweep = engine.pathwise(u_k, inf, false, sim.seed);
  std::vector<std::string> warnings;
  engine.check_censoring(sweep.censored_fraction, warnings);
  return {SolutionField(u_k.grid(), pb.domain, sweep.mean), sweep.std_error, sweep.censored_fraction};
}

/// Damped Picard iteration u_{k+1} = (1 - theta) u_k + theta Phi(u_k) from
/// u_0 = 0. With crn every sweep reuses the same paths, so Phi is a fixed
/// deterministic map. f is evaluated at y clipped to 4 times the largest
/// nodal majorant E_x[int |f(X,0)| dt + d|A^mu|].
inline SolveResult picard_solve(const Problem& pb, const Grid& grid, const SimConfig& sim, const PicardConfig& pc) {
  sim.check();
  pc.check();
  detail::require_valid(pb.op, pb.domain);
  detail::require_monotone(pb.f, pb.domain);
  detail::Engine engine(pb, grid, sim, pc);
  SolveReport rep;
  rep.measure_mode = engine.mode();
  rep.epsilon = engine.epsilon();
  if (engine.mode() == MeasureMode::pathwise && !pb.mu.atoms.empty())
    rep.warnings.push_back("atoms mollified with half-width " + std::to_string(engine.epsilon()));
  SolutionField u(grid, pb.domain);
  const double inf = std::numeric_limits<double>::infinity();

  auto finish = [&](SolutionField field) {
    const auto ref = reference_measure(pb.op);
    rep.l1_f_u = detail::l1_norm([&](const Vec& x) { return pb.f(x, field(x)); }, pb.domain, ref, grid, rep.warnings,
                                 "L1 quadrature of f_u");
    rep.l1_f0 = detail::l1_norm([&](const Vec& x) { return pb.f(x, 0.0); }, pb.domain, ref, grid, rep.warnings,
                                "L1 quadrature of f(.,0)");
    try {
      rep.tv_mu = total_variation(pb.mu, pb.domain, ref);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::quadrature_failed) throw;
      rep.tv_mu = inf;
      rep.warnings.emplace_back("total variation of mu diverges");
    }
    return SolveResult{std::move(field), std::move(rep)};
  };

  if (pb.f.identically_zero) {
    // Phi does not depend on u: the fixed point is Phi(0).
    if (engine.mode() == MeasureMode::kernel && !engine.pathwise_measure()) {
      for (std::size_t i : engine.active()) u.set(i, engine.kernel_term(i));
      rep.std_error.assign(grid.size(), 0.0);
    } else {
      auto s = engine.pathwise(u, inf, false, sim.seed);
      engine.check_censoring(s.censored_fraction, rep.warnings);
      rep.censored_fraction = s.censored_fraction;
      for (std::size_t i : engine.active()) u.set(i, s.mean[i]);
      rep.std_error = std::move(s.std_error);
    }
    rep.iterations = 1;
    rep.sup_residuals.push_back(u.sup_norm());
    if (pc.keep_iterates) rep.iterates.push_back(u.values());
    return finish(std::move(u));
  }

  const double theta = pc.damping;
  auto damped_step = [&](const std::vector<double>& phi) {
    double r = 0.0;
    for (std::size_t i : engine.active()) {
      const double next = (1.0 - theta) * u[i] + theta * phi[i];
      r = std::max(r, std::abs(next - u[i]));
      u.set(i, next);
    }
    rep.sup_residuals.push_back(r);
    ++rep.iterations;
    if (pc.keep_iterates) rep.iterates.push_back(u.values());
    return r < pc.tolerance;
  };

  const bool accelerate = pc.accelerate && pc.crn && pb.domain.bounded();
  rep.accelerated = accelerate;
  if (accelerate) {
    const auto occ = engine.occupation(sim.seed);
    engine.check_censoring(occ.censored_fraction, rep.warnings);
    rep.censored_fraction = occ.censored_fraction;
    const Grid& fine = occ.fine;
    std::vector<Vec> pts(fine.size());
    std::vector<double> g(fine.size());
    for (std::size_t j = 0; j < fine.size(); ++j) pts[j] = fine.point(j);
    auto apply = [&](auto&& integrand) {
      for (std::size_t j = 0; j < fine.size(); ++j) g[j] = integrand(pts[j]);
      std::vector<double> phi(grid.size(), 0.0);
      for (std::size_t a = 0; a < engine.active().size(); ++a) {
        const auto& row = occ.rows[a];
        double s = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) s += row[j] * g[j];
        phi[engine.active()[a]] = s;
      }
      return phi;
    };
    const auto maj = apply([&](const Vec& y) { return std::abs(pb.f(y, 0.0)); });
    double m = 0.0;
    for (std::size_t a = 0; a < engine.active().size(); ++a) m = std::max(m, maj[engine.active()[a]] + occ.measure_abs[a]);
    rep.y_max = 4.0 * m;
    bool converged = false;
    while (!converged && rep.iterations < pc.max_iterations) {
      auto phi = apply([&](const Vec& y) { return pb.f(y, truncate(rep.y_max, u(y))); });
      for (std::size_t a = 0; a < engine.active().size(); ++a) phi[engine.active()[a]] += occ.measure[a];
      converged = damped_step(phi);
    }
    if (!converged) throw NonConvergence(detail::residual_history(rep.sup_residuals), rep.sup_residuals);
    auto s = engine.pathwise(u, rep.y_max, false, sim.seed);
    double r = 0.0;
    for (std::size_t i : engine.active()) r = std::max(r, std::abs(s.mean[i] - u[i]));
    rep.final_residual = r;
    SolutionField out(grid, pb.domain, s.mean);
    rep.std_error = std::move(s.std_error);
    return finish(std::move(out));
  }

  // Plain pathwise Picard; the first sweep at u_0 = 0 also yields the majorant.
  auto first = engine.pathwise(u, inf, true, detail::sweep_seed(sim.seed, 0, pc.crn));
  engine.check_censoring(first.censored_fraction, rep.warnings);
  rep.censored_fraction = first.censored_fraction;
  double m = 0.0;
  for (std::size_t i : engine.active()) m = std::max(m, first.majorant[i]);
  rep.y_max = 4.0 * m;
  rep.std_error = first.std_error;
  bool converged = damped_step(first.mean);
  while (!converged && rep.iterations < pc.max_iterations) {
    auto s = engine.pathwise(u, rep.y_max, false, detail::sweep_seed(sim.seed, rep.iterations, pc.crn));
    rep.std_error = std::move(s.std_error);
    converged = damped_step(s.mean);
  }
  if (!converged) throw NonConvergence(detail::residual_history(rep.sup_residuals), rep.sup_residuals);
  return finish(std::move(u));
}

struct ResidualReport {
  std::vector<double> lhs;  // E int |f(X, u(X))| dt per node
  std::vector<double> rhs;  // E[int |f(X,0)| dt + int d|A^mu|] per node
  std::vector<double> std_error;  // of lhs - rhs
  std::vector<bool> node_pass;
  double l1_f_u = 0.0;
  double l1_f0 = 0.0;
  double tv_mu = 0.0;
  bool nodes_pass = true;
  bool global_pass = true;
  [[nodiscard]] bool pass() const { return nodes_pass && global_pass; }
};

/// Both sides of the nodewise L1 inequality on one ensemble, and the global
/// bound ||f_u||_1 <= ||f(.,0)||_1 + ||mu||_TV.
inline ResidualReport residual_report(const SolutionField& u, const Problem& pb, const SimConfig& sim, const PicardConfig& pc) {
  sim.check();
  pc.check();
  detail::require_valid(pb.op, pb.domain);
  detail::Engine engine(pb, u.grid(), sim, pc);
  const PathModel model(pb.op, pb.domain, sim.dt);
  const MeasureData abs_smooth =
      engine.mode() == MeasureMode::pathwise
          ? (pb.mu.atoms.empty() ? pb.mu : mollify(pb.mu, engine.epsilon(), pb.domain)).absolute()
          : MeasureData::zero();
  const bool use_density = abs_smooth.has_density();
  ResidualReport rep;
  const std::size_t n = u.grid().size();
  rep.lhs.assign(n, 0.0);
  rep.rhs.assign(n, 0.0);
  rep.std_error.assign(n, 0.0);
  rep.node_pass.assign(n, true);
  const std::size_t P = pc.paths_per_node;
  parallel_blocks(engine.active().size(), pc.threads, [&](std::size_t a) {
    const std::size_t node = engine.active()[a];
    const Vec x0 = u.grid().point(node);
    std::vector<double> l(P), r(P), d(P);
    for (std::size_t p = 0; p < P; ++p) {
      double lv = 0.0;
      double rv = 0.0;
      model.run(x0, sim.seed, node * P + p, sim.max_horizon, [&](const Vec& y, double, double len) {
        lv += std::abs(pb.f(y, u(y))) * len;
        rv += std::abs(pb.f(y, 0.0)) * len;
        if (use_density) rv += std::abs(abs_smooth.density_at(y)) * len;
      });
      l[p] = lv;
      r[p] = rv;
      d[p] = lv - rv;
    }
    rep.lhs[node] = summarize(l).mean;
    rep.rhs[node] = summarize(r).mean + engine.kernel_abs(node);
    const auto diff = summarize(d);
    rep.std_error[node] = diff.std_error;
    rep.node_pass[node] = rep.lhs[node] - rep.rhs[node] <= 3.0 * diff.std_error + 1e-12;
  });
  for (std::size_t i : engine.active()) rep.nodes_pass = rep.nodes_pass && rep.node_pass[i];
  std::vector<std::string> warnings;
  const auto ref = reference_measure(pb.op);
  rep.l1_f_u = detail::l1_norm([&](const Vec& x) { return pb.f(x, u(x)); }, pb.domain, ref, u.grid(), warnings, "L1 of f_u");
  rep.l1_f0 = detail::l1_norm([&](const Vec& x) { return pb.f(x, 0.0); }, pb.domain, ref, u.grid(), warnings, "L1 of f(.,0)");
  try {
    rep.tv_mu = total_variation(pb.mu, pb.domain, ref);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::quadrature_failed) throw;
    rep.tv_mu = std::numeric_limits<double>::infinity();
  }
  rep.global_pass = rep.l1_f_u <= (rep.l1_f0 + rep.tv_mu) * (1.0 + 2e-3) + 1e-12;
  return rep;
}

}  // namespace fkmd
