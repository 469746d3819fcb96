// Command-line front end: solve, verify and convergence runs driven by a TOML
// config. Exit codes: 0 success, 1 config or input error, 2 solver failure,
// 3 verification failure.

#include "fkmd/bsde.hpp"
#include "fkmd/config.hpp"
#include "fkmd/io.hpp"
#include "fkmd/regularity.hpp"
#include "fkmd/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace fkmd;

namespace {

enum Exit { kOk = 0, kInputError = 1, kSolverError = 2, kVerifyFailed = 3 };

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<double> dt;
  std::optional<int> grid;
  int threads = 1;
  std::optional<std::string> out;
  bool dump_paths = false;
};

RunConfig load(const Overrides& o) {
  RunConfig cfg = load_config(o.config);
  if (o.seed) cfg.sim.seed = *o.seed;
  if (o.paths) {
    require(*o.paths >= 2, "--paths must be at least 2");
    cfg.sim.paths = *o.paths;
    cfg.picard.paths_per_node = *o.paths;
  }
  if (o.dt) {
    require(*o.dt > 0.0, "--dt must be positive");
    cfg.sim.dt = *o.dt;
  }
  if (o.grid) cfg.grid = cfg.grid.refined(*o.grid);
  cfg.picard.threads = o.threads;
  if (o.out) cfg.output_dir = *o.out;
  cfg.sim.check();
  return cfg;
}

Vec probe_point(const RunConfig& cfg) {
  if (cfg.verify.x0) return *cfg.verify.x0;
  return 0.5 * (cfg.grid.lo() + cfg.grid.hi());
}

json report_json(const SolveReport& r, const RunConfig& cfg) {
  json j;
  j["iterations"] = r.iterations;
  j["sup_residuals"] = r.sup_residuals;
  j["final_residual"] = r.final_residual;
  j["l1_f_u"] = r.l1_f_u;
  j["l1_f0"] = r.l1_f0;
  j["tv_mu"] = r.tv_mu;
  j["y_max"] = r.y_max;
  j["censored_fraction"] = r.censored_fraction;
  j["measure_mode"] = to_string(r.measure_mode);
  j["accelerated"] = r.accelerated;
  j["epsilon"] = r.epsilon;
  j["warnings"] = r.warnings;
  j["seed"] = cfg.sim.seed;
  j["paths_per_node"] = cfg.picard.paths_per_node;
  j["dt"] = cfg.sim.dt;
  j["grid_nodes"] = cfg.grid.nodes_per_axis();
  j["domain"] = cfg.domain.describe();
  j["f"] = cfg.f_source;
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void dump_paths(const RunConfig& cfg) {
  const Vec x0 = probe_point(cfg);
  auto header = io::coordinate_header(cfg.domain.dim());
  header.insert(header.begin(), {"path_index", "t"});
  io::CsvWriter w(fs::path(cfg.output_dir) / "paths.csv", header);
  const std::size_t n = std::min<std::size_t>(cfg.sim.paths, 16);
  for (std::size_t p = 0; p < n; ++p) {
    const auto path = sample_path(cfg.op, cfg.domain, x0, cfg.sim, p);
    for (std::size_t k = 0; k < path.states.size(); ++k) {
      std::vector<double> row{static_cast<double>(p), path.times[k]};
      for (Eigen::Index a = 0; a < path.states[k].size(); ++a) row.push_back(path.states[k][a]);
      w.row(row);
    }
  }
}

SolveResult solve_and_write(const RunConfig& cfg, bool dump) {
  fs::create_directories(cfg.output_dir);
  auto res = picard_solve(make_problem(cfg), cfg.grid, cfg.sim, cfg.picard);
  io::write_solution(fs::path(cfg.output_dir) / "solution.csv", res.u, res.report.std_error);
  auto j = report_json(res.report, cfg);
  j["command"] = "solve";
  write_json(fs::path(cfg.output_dir) / "report.json", j);
  if (dump) dump_paths(cfg);
  return res;
}

int run_solve(const Overrides& o) {
  const RunConfig cfg = load(o);
  const auto res = solve_and_write(cfg, o.dump_paths);
  std::printf("converged in %d iterations; sup|u| = %s; output in %s\n", res.report.iterations, io::num(res.u.sup_norm()).c_str(),
              cfg.output_dir.c_str());
  for (const auto& w : res.report.warnings) std::fprintf(stderr, "fkmd: warning: %s\n", w.c_str());
  return kOk;
}

std::vector<TestMeasure> named_measures(const RunConfig& cfg) {
  const auto [lo, hi] = cfg.domain.bounding_box();
  const auto all = default_test_measures(lo[0], hi[0]);
  std::vector<TestMeasure> out;
  for (const auto& name : cfg.verify.test_measures) {
    auto it = std::find_if(all.begin(), all.end(), [&](const TestMeasure& t) { return t.id == name; });
    require(it != all.end(), "unknown test measure '" + name + "'");
    out.push_back(*it);
  }
  return out;
}

int run_verify(const Overrides& o, std::vector<std::string> checks, bool solve_inline) {
  checks.erase(std::remove(checks.begin(), checks.end(), std::string()), checks.end());
  if (checks.empty()) {
    std::fprintf(stderr, "fkmd: warning: no checks selected; nothing to verify\n");
    return kOk;
  }
  const std::vector<std::string> known{"l1", "energy", "duality", "martingale", "horizon"};
  for (const auto& c : checks) require(std::find(known.begin(), known.end(), c) != known.end(), "unknown check '" + c + "'");

  const RunConfig cfg = load(o);
  fs::create_directories(cfg.output_dir);
  const Problem pb = make_problem(cfg);
  std::vector<double> std_error;
  std::optional<SolutionField> u;
  if (cfg.verify.solution_expr) {
    const auto e = Expression::parse(*cfg.verify.solution_expr, cfg.domain.dim());
    u = SolutionField::from_function(cfg.grid, cfg.domain, [&](const Vec& x) { return e(x); });
  } else if (solve_inline) {
    auto res = solve_and_write(cfg, o.dump_paths);
    std_error = res.report.std_error;
    u = std::move(res.u);
  } else {
    const fs::path p = cfg.verify.solution ? fs::path(*cfg.verify.solution) : fs::path(cfg.output_dir) / "solution.csv";
    if (!fs::exists(p)) throw Error(ErrorCode::invalid_argument, "missing solution artifact " + p.string() + " (run solve first or pass --solve)");
    u = io::read_solution(p, cfg.grid, cfg.domain, &std_error);
  }

  json summary;
  summary["command"] = "verify";
  bool all_pass = true;
  const fs::path out(cfg.output_dir);
  for (const auto& check : checks) {
    bool pass = true;
    if (check == "l1") {
      const auto r = l1_estimate_check(*u, pb.f, pb.mu, pb.op);
      pass = r.pass;
      summary["l1"] = {{"l1_f_u", r.l1_f_u}, {"l1_f0", r.l1_f0}, {"tv_mu", r.tv_mu}, {"bound", r.bound}, {"pass", r.pass}};
    } else if (check == "energy") {
      auto ks = cfg.verify.k_values;
      if (ks.empty()) {
        const double m = u->sup_norm();
        require(m > 0.0, "energy check needs k_values when u vanishes");
        ks = {0.25 * m, 0.5 * m, m};
      }
      const auto r = energy_estimate_check(*u, pb.op, pb.f, pb.mu, ks, cfg.verify.energy_tol);
      io::CsvWriter w(out / "energy.csv", {"k", "energy", "bound", "pass"});
      for (std::size_t i = 0; i < r.k_values.size(); ++i)
        w.row_strings({io::num(r.k_values[i]), io::num(r.energies[i]), io::num(r.bounds[i]), r.row_pass[i] ? "1" : "0"});
      pass = r.pass;
      summary["energy"] = {{"pass", r.pass}, {"pass_alt_bound", r.pass_alt}, {"bounds_alt", r.bounds_alt}, {"tol", r.tol}};
    } else if (check == "duality") {
      const auto kernel = kernel_for(pb.op, pb.domain);
      require(kernel && detail::kernel_interval(*kernel).has_value(), "duality check needs an exact interval kernel");
      const auto r = duality_check(*u, pb.f, pb.mu, *kernel, named_measures(cfg), std_error);
      io::CsvWriter w(out / "duality.csv", {"nu_id", "lhs", "rhs", "residual"});
      for (const auto& row : r.rows) w.row_strings({row.nu_id, io::num(row.lhs), io::num(row.rhs), io::num(row.residual)});
      for (const auto& m : r.warnings) std::fprintf(stderr, "fkmd: warning: %s\n", m.c_str());
      pass = r.pass;
      summary["duality"] = {{"pass", r.pass}};
    } else if (check == "martingale") {
      VerifyConfig vc;
      vc.threads = cfg.picard.threads;
      vc.epsilon = cfg.picard.epsilon;
      const auto r = martingale_residual(*u, pb, probe_point(cfg), cfg.sim, cfg.verify.checkpoints, vc);
      io::CsvWriter w(out / "martingale.csv", {"t", "mean", "stderr"});
      for (std::size_t i = 0; i < r.checkpoint_times.size(); ++i)
        w.row({r.checkpoint_times[i], r.ensemble_means[i], r.std_error[i]});
      pass = r.pass;
      summary["martingale"] = {{"pass", r.pass},
                               {"max_drift", r.max_drift},
                               {"initial_value", r.initial_value},
                               {"sup_u_moment_half", r.sup_u_moment},
                               {"sup_z_q99", r.sup_z_q99}};
    } else if (check == "horizon") {
      require(!cfg.verify.horizons.empty(), "horizon check needs verify.horizons");
      const auto r = horizon_truncation(pb, cfg.grid, probe_point(cfg), cfg.verify.horizons, cfg.sim, cfg.picard);
      io::CsvWriter w(out / "horizon.csv", {"horizon", "estimate", "stderr"});
      for (const auto& row : r.rows) w.row({row.horizon, row.value, row.std_error});
      pass = r.stabilized;
      summary["horizon"] = {{"pass", r.stabilized}};
    }
    std::printf("%-10s %s\n", check.c_str(), pass ? "pass" : "FAIL");
    all_pass = all_pass && pass;
  }
  summary["pass"] = all_pass;
  write_json(out / "verify.json", summary);
  return all_pass ? kOk : kVerifyFailed;
}

int run_convergence(const Overrides& o, const std::string& axis, const std::vector<double>& ladder) {
  const std::vector<std::string> axes{"dt", "paths", "grid", "horizon", "epsilon"};
  require(std::find(axes.begin(), axes.end(), axis) != axes.end(), "unknown axis '" + axis + "'");
  require(ladder.size() >= 2, "ladder needs at least two rungs");
  const bool up = ladder[1] > ladder[0];
  for (std::size_t i = 0; i + 1 < ladder.size(); ++i)
    require(up ? ladder[i + 1] > ladder[i] : ladder[i + 1] < ladder[i], "ladder must be strictly monotone");
  const RunConfig base = load(o);
  fs::create_directories(base.output_dir);
  const Vec x0 = probe_point(base);
  io::CsvWriter w(fs::path(base.output_dir) / "convergence.csv", {"axis_value", "estimate", "stderr"});
  std::vector<std::pair<double, double>> est;
  for (double v : ladder) {
    RunConfig cfg = base;
    if (axis == "dt") {
      cfg.sim.dt = v;
    } else if (axis == "paths") {
      require(v >= 2 && v == std::floor(v), "paths rungs must be integers >= 2");
      cfg.sim.paths = static_cast<std::size_t>(v);
      cfg.picard.paths_per_node = cfg.sim.paths;
    } else if (axis == "grid") {
      require(v >= 2 && v == std::floor(v), "grid rungs must be integers >= 2");
      cfg.grid = cfg.grid.refined(static_cast<int>(v));
    } else if (axis == "horizon") {
      cfg.sim.max_horizon = v;
      cfg.sim.dt = std::min(cfg.sim.dt, v);
      cfg.picard.censoring_is_error = false;
      cfg.picard.measure_mode = MeasureMode::pathwise;
    } else {
      require(v > 0.0, "epsilon rungs must be positive");
      cfg.picard.epsilon = v;
      cfg.picard.measure_mode = MeasureMode::pathwise;
    }
    const auto res = picard_solve(make_problem(cfg), cfg.grid, cfg.sim, cfg.picard);
    const SolutionField se(cfg.grid, cfg.domain, res.report.std_error);
    est.emplace_back(res.u(x0), se(x0));
    w.row({v, est.back().first, est.back().second});
  }
  const auto& a = est[est.size() - 2];
  const auto& b = est.back();
  const bool agree = std::abs(a.first - b.first) <= 3.0 * std::hypot(a.second, b.second) + 1e-12;
  std::printf("final rungs %s: %s vs %s\n", agree ? "agree" : "DISAGREE", io::num(a.first).c_str(), io::num(b.first).c_str());
  return agree ? kOk : kVerifyFailed;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::no_convergence:
    case ErrorCode::horizon_too_small: return kSolverError;
    default: return kInputError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo solver for semilinear equations with measure data"};
  app.require_subcommand(1);
  Overrides o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "TOML run configuration")->required();
    sub->add_option("--seed", o.seed, "RNG seed");
    sub->add_option("--paths", o.paths, "paths per node");
    sub->add_option("--dt", o.dt, "time step");
    sub->add_option("--grid", o.grid, "grid nodes per axis");
    sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output directory");
    sub->add_flag("--dump-paths", o.dump_paths, "write paths.csv for up to 16 paths (debug)");
  };
  auto* solve = app.add_subcommand("solve", "Picard solve; writes solution.csv and report.json");
  add_common(solve);
  auto* verify = app.add_subcommand("verify", "run verification checks on a solution");
  add_common(verify);
  std::vector<std::string> checks;
  bool solve_inline = false;
  verify->add_option("--checks", checks, "comma-separated subset of l1,energy,duality,martingale,horizon")->delimiter(',');
  verify->add_flag("--solve", solve_inline, "solve inline instead of reading solution.csv");
  auto* conv = app.add_subcommand("convergence", "sweep one parameter; writes convergence.csv");
  add_common(conv);
  std::string axis;
  std::vector<double> ladder;
  conv->add_option("--axis", axis, "dt, paths, grid, horizon or epsilon")->required();
  conv->add_option("--ladder", ladder, "comma-separated rung values")->delimiter(',')->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }
  try {
    if (*solve) return run_solve(o);
    if (*verify) return run_verify(o, checks, solve_inline);
    return run_convergence(o, axis, ladder);
  } catch (const Error& e) {
    std::fprintf(stderr, "fkmd: error: %s\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fkmd: error: %s\n", e.what());
    return kInputError;
  }
}
