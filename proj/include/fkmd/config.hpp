#pragma once

#include "fkmd/domain.hpp"
#include "fkmd/error.hpp"
#include "fkmd/expression.hpp"
#include "fkmd/field.hpp"
#include "fkmd/linalg.hpp"
#include "fkmd/measure_data.hpp"
#include "fkmd/operators.hpp"
#include "fkmd/process.hpp"
#include "fkmd/regularity.hpp"
#include "fkmd/solver.hpp"

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fkmd {

/// Raised for malformed or unknown configuration input.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCode::invalid_argument, "config: " + what) {}
};

struct VerifySettings {
  std::optional<Vec> x0;
  std::vector<double> k_values;
  std::vector<double> horizons;
  std::vector<double> checkpoints;
  std::optional<std::string> solution;  // CSV written by solve
  std::optional<std::string> solution_expr;  // analytic u(x)
  std::vector<std::string> test_measures{"lebesgue", "density_2x", "density_sin"};
  double energy_tol = 0.05;
};

struct RunConfig {
  OperatorSpec op;
  Domain domain = Domain::interval(0.0, 1.0);
  Grid grid = Grid(scalar_vec(0.0), scalar_vec(1.0), 2);
  Nonlinearity f = Nonlinearity::zero();
  std::string f_source = "0";
  MeasureData mu;
  SimConfig sim;
  PicardConfig picard;
  VerifySettings verify;
  std::string output_dir = "out";
};

namespace detail {

inline void check_keys(const toml::table& t, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : t) {
    if (!allowed.count(std::string(k.str())))
      throw ConfigError("unknown key '" + std::string(k.str()) + "' in " + where);
  }
}

inline const toml::table& sub_table(const toml::table& root, const std::string& name, bool required) {
  static const toml::table empty;
  const auto* node = root.get(name);
  if (!node) {
    if (required) throw ConfigError("missing table [" + name + "]");
    return empty;
  }
  const auto* t = node->as_table();
  if (!t) throw ConfigError("[" + name + "] must be a table");
  return *t;
}

inline double as_number(const toml::node& n, const std::string& where) {
  if (auto v = n.value<double>()) return *v;
  throw ConfigError(where + " must be a number");
}

inline std::optional<double> number(const toml::table& t, const std::string& key, const std::string& where) {
  const auto* n = t.get(key);
  if (!n) return std::nullopt;
  return as_number(*n, where + "." + key);
}

inline std::optional<std::int64_t> integer(const toml::table& t, const std::string& key, const std::string& where) {
  const auto* n = t.get(key);
  if (!n) return std::nullopt;
  if (auto v = n->value<std::int64_t>(); v && n->is_integer()) return *v;
  throw ConfigError(where + "." + key + " must be an integer");
}

inline std::optional<bool> boolean(const toml::table& t, const std::string& key, const std::string& where) {
  const auto* n = t.get(key);
  if (!n) return std::nullopt;
  if (auto v = n->value<bool>()) return *v;
  throw ConfigError(where + "." + key + " must be a boolean");
}

inline std::optional<std::string> string(const toml::table& t, const std::string& key, const std::string& where) {
  const auto* n = t.get(key);
  if (!n) return std::nullopt;
  if (auto v = n->value<std::string>()) return *v;
  throw ConfigError(where + "." + key + " must be a string");
}

inline std::vector<double> numbers(const toml::node& n, const std::string& where) {
  const auto* arr = n.as_array();
  if (!arr) throw ConfigError(where + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : *arr) out.push_back(as_number(e, where));
  return out;
}

inline std::optional<std::vector<double>> number_list(const toml::table& t, const std::string& key, const std::string& where) {
  const auto* n = t.get(key);
  if (!n) return std::nullopt;
  return numbers(*n, where + "." + key);
}

inline Vec to_vec(const std::vector<double>& v) {
  require(!v.empty() && v.size() <= static_cast<std::size_t>(kMaxDim), "vector length must be 1..4");
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

// A scalar entry: number or expression string in x.
inline ScalarField scalar_entry(const toml::node& n, int dim, const std::string& where) {
  if (auto s = n.value<std::string>(); s && n.is_string()) {
    const auto e = Expression::parse(*s, dim);
    if (e.is_constant()) return e.constant_value();
    return ScalarField([e](const Vec& x) { return e(x); });
  }
  return as_number(n, where);
}

inline VectorField vector_entry(const toml::node& n, int dim, const std::string& where) {
  const auto* arr = n.as_array();
  if (!arr || static_cast<int>(arr->size()) != dim) throw ConfigError(where + " must be an array of length " + std::to_string(dim));
  std::vector<ScalarField> parts;
  bool constant = true;
  for (const auto& e : *arr) {
    parts.push_back(scalar_entry(e, dim, where));
    constant = constant && parts.back().is_constant();
  }
  if (constant) {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = parts[static_cast<std::size_t>(i)].constant();
    return v;
  }
  return VectorField([parts, dim](const Vec& x) {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = parts[static_cast<std::size_t>(i)](x);
    return v;
  });
}

inline MatrixField matrix_entry(const toml::node& n, int dim, const std::string& where) {
  const auto* rows = n.as_array();
  if (!rows || static_cast<int>(rows->size()) != dim) throw ConfigError(where + " must be a " + std::to_string(dim) + "x" + std::to_string(dim) + " array");
  std::vector<ScalarField> parts;
  bool constant = true;
  for (const auto& r : *rows) {
    const auto* row = r.as_array();
    if (!row || static_cast<int>(row->size()) != dim) throw ConfigError(where + " rows must have length " + std::to_string(dim));
    for (const auto& e : *row) {
      parts.push_back(scalar_entry(e, dim, where));
      constant = constant && parts.back().is_constant();
    }
  }
  auto build = [parts, dim](const Vec& x) {
    Mat m(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) m(i, j) = parts[static_cast<std::size_t>(i * dim + j)](x);
    return m;
  };
  if (constant) return build(Vec::Zero(dim));
  return MatrixField(build);
}

inline Mat numeric_matrix(const toml::node& n, int dim, const std::string& where) {
  const auto field = matrix_entry(n, dim, where);
  if (!field.is_constant()) throw ConfigError(where + " must be numeric");
  return field.constant();
}

inline Domain parse_domain(const toml::table& t) {
  check_keys(t, "[domain]", {"kind", "a", "b", "center", "radius", "lo", "hi", "dim"});
  const auto kind = string(t, "kind", "domain").value_or("interval");
  if (kind == "interval") {
    const auto a = number(t, "a", "domain");
    const auto b = number(t, "b", "domain");
    if (!a || !b) throw ConfigError("interval domain needs a and b");
    return Domain::interval(*a, *b);
  }
  if (kind == "ball") {
    const auto c = number_list(t, "center", "domain");
    const auto r = number(t, "radius", "domain");
    if (!c || !r) throw ConfigError("ball domain needs center and radius");
    return Domain::ball(to_vec(*c), *r);
  }
  if (kind == "box") {
    const auto lo = number_list(t, "lo", "domain");
    const auto hi = number_list(t, "hi", "domain");
    if (!lo || !hi) throw ConfigError("box domain needs lo and hi");
    return Domain::box(to_vec(*lo), to_vec(*hi));
  }
  if (kind == "full") {
    const auto d = integer(t, "dim", "domain");
    if (!d) throw ConfigError("full-space domain needs dim");
    return Domain::full_space(static_cast<int>(*d));
  }
  throw ConfigError("unknown domain kind '" + kind + "'");
}

inline OperatorSpec parse_operator(const toml::table& t, int dim) {
  const auto preset = string(t, "preset", "operator");
  if (!preset) throw ConfigError("[operator] needs a preset");
  if (*preset == "divergence") {
    check_keys(t, "[operator]", {"preset", "diffusion_scale", "a", "b", "c", "d"});
    DivergenceForm op = DivergenceForm::laplacian(dim, number(t, "diffusion_scale", "operator").value_or(1.0));
    if (t.get("a")) {
      if (t.get("diffusion_scale")) throw ConfigError("give either diffusion_scale or a, not both");
      op.a = matrix_entry(*t.get("a"), dim, "operator.a");
    }
    if (t.get("b")) op.b = vector_entry(*t.get("b"), dim, "operator.b");
    if (t.get("d")) op.d = vector_entry(*t.get("d"), dim, "operator.d");
    if (t.get("c")) op.c = scalar_entry(*t.get("c"), dim, "operator.c");
    return op;
  }
  if (*preset == "fractional") {
    check_keys(t, "[operator]", {"preset", "alpha", "scale", "drift"});
    FractionalLaplacian op;
    op.dim = dim;
    op.alpha = number(t, "alpha", "operator").value_or(1.0);
    op.scale = number(t, "scale", "operator").value_or(1.0);
    if (t.get("drift")) op.drift = vector_entry(*t.get("drift"), dim, "operator.drift");
    return op;
  }
  if (*preset == "ou") {
    check_keys(t, "[operator]", {"preset", "A", "Q", "lambda"});
    if (!t.get("A") || !t.get("Q")) throw ConfigError("ou preset needs A and Q");
    OrnsteinUhlenbeck op;
    op.A = numeric_matrix(*t.get("A"), dim, "operator.A");
    op.Q = numeric_matrix(*t.get("Q"), dim, "operator.Q");
    op.lambda = number(t, "lambda", "operator").value_or(1.0);
    return op;
  }
  throw ConfigError("unknown operator preset '" + *preset + "'");
}

inline MeasureData parse_measure(const toml::table& t, int dim, PicardConfig& pc) {
  check_keys(t, "[measure]", {"density", "atoms", "epsilon", "mode"});
  MeasureData mu;
  if (const auto* n = t.get("density")) mu.density = scalar_entry(*n, dim, "measure.density");
  if (const auto* n = t.get("atoms")) {
    const auto* arr = n->as_array();
    if (!arr) throw ConfigError("measure.atoms must be an array of [x1..xd, weight]");
    for (const auto& e : *arr) {
      const auto v = numbers(e, "measure.atoms");
      if (static_cast<int>(v.size()) != dim + 1) throw ConfigError("each atom needs " + std::to_string(dim) + " coordinates and a weight");
      mu.atoms.push_back({to_vec(std::vector<double>(v.begin(), v.end() - 1)), v.back()});
    }
  }
  if (auto eps = number(t, "epsilon", "measure")) {
    if (*eps <= 0.0) throw ConfigError("measure.epsilon must be positive");
    pc.epsilon = *eps;
  }
  if (auto mode = string(t, "mode", "measure")) {
    if (*mode == "auto") pc.measure_mode = MeasureMode::automatic;
    else if (*mode == "kernel") pc.measure_mode = MeasureMode::kernel;
    else if (*mode == "pathwise") pc.measure_mode = MeasureMode::pathwise;
    else throw ConfigError("measure.mode must be auto, kernel or pathwise");
  }
  return mu;
}

}  // namespace detail

/// Parses TOML text; any unknown key is an error before work starts.
inline RunConfig parse_config(const std::string& text, const std::string& source = "config") {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    throw ConfigError(std::string(e.description()));
  }
  using namespace detail;
  check_keys(root, "the top level", {"operator", "domain", "grid", "measure", "nonlinearity", "sim", "picard", "verify", "outputs"});
  RunConfig cfg;
  cfg.domain = parse_domain(sub_table(root, "domain", true));
  const int dim = cfg.domain.dim();
  try {
    cfg.op = parse_operator(sub_table(root, "operator", true), dim);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("operator: ") + e.what());
  }

  const auto& g = sub_table(root, "grid", false);
  check_keys(g, "[grid]", {"nodes", "lo", "hi"});
  const int nodes = static_cast<int>(integer(g, "nodes", "grid").value_or(21));
  if (nodes < 2) throw ConfigError("grid.nodes must be at least 2");
  const auto lo = number_list(g, "lo", "grid");
  const auto hi = number_list(g, "hi", "grid");
  if (lo && hi) {
    cfg.grid = Grid(to_vec(*lo), to_vec(*hi), nodes);
  } else if (cfg.domain.bounded()) {
    cfg.grid = Grid::over(cfg.domain, nodes);
  } else {
    throw ConfigError("a full-space domain needs grid.lo and grid.hi");
  }
  if (cfg.grid.dim() != dim) throw ConfigError("grid and domain dimensions differ");

  cfg.mu = parse_measure(sub_table(root, "measure", false), dim, cfg.picard);

  const auto& nl = sub_table(root, "nonlinearity", false);
  check_keys(nl, "[nonlinearity]", {"f", "declared_monotone"});
  if (auto f = string(nl, "f", "nonlinearity")) {
    const auto e = Expression::parse(*f, dim, true);
    cfg.f_source = *f;
    const bool zero = e.is_constant() && e.constant_value() == 0.0;
    cfg.f = Nonlinearity{[e](const Vec& x, double y) { return e(x, y); }, boolean(nl, "declared_monotone", "nonlinearity").value_or(true),
                         zero};
  }

  const auto& s = sub_table(root, "sim", false);
  check_keys(s, "[sim]", {"dt", "paths", "seed", "max_horizon"});
  cfg.sim.dt = number(s, "dt", "sim").value_or(cfg.sim.dt);
  cfg.sim.max_horizon = number(s, "max_horizon", "sim").value_or(cfg.sim.max_horizon);
  if (auto seed = integer(s, "seed", "sim")) cfg.sim.seed = static_cast<std::uint64_t>(*seed);
  if (auto paths = integer(s, "paths", "sim")) {
    if (*paths < 1) throw ConfigError("sim.paths must be at least 1");
    cfg.sim.paths = static_cast<std::size_t>(*paths);
  }
  cfg.picard.paths_per_node = cfg.sim.paths;

  const auto& p = sub_table(root, "picard", false);
  check_keys(p, "[picard]", {"tolerance", "max_iterations", "damping", "crn", "accelerate", "occupation_refine"});
  cfg.picard.tolerance = number(p, "tolerance", "picard").value_or(cfg.picard.tolerance);
  cfg.picard.max_iterations = static_cast<int>(integer(p, "max_iterations", "picard").value_or(cfg.picard.max_iterations));
  cfg.picard.damping = number(p, "damping", "picard").value_or(cfg.picard.damping);
  cfg.picard.crn = boolean(p, "crn", "picard").value_or(cfg.picard.crn);
  cfg.picard.accelerate = boolean(p, "accelerate", "picard").value_or(cfg.picard.accelerate);
  cfg.picard.occupation_refine = static_cast<int>(integer(p, "occupation_refine", "picard").value_or(cfg.picard.occupation_refine));

  const auto& v = sub_table(root, "verify", false);
  check_keys(v, "[verify]", {"x0", "k_values", "horizons", "checkpoints", "solution", "solution_expr", "test_measures", "energy_tol"});
  if (auto x0 = number_list(v, "x0", "verify")) cfg.verify.x0 = to_vec(*x0);
  cfg.verify.k_values = number_list(v, "k_values", "verify").value_or(std::vector<double>{});
  cfg.verify.horizons = number_list(v, "horizons", "verify").value_or(std::vector<double>{});
  cfg.verify.checkpoints = number_list(v, "checkpoints", "verify").value_or(std::vector<double>{});
  cfg.verify.solution = string(v, "solution", "verify");
  cfg.verify.solution_expr = string(v, "solution_expr", "verify");
  if (const auto* n = v.get("test_measures")) {
    const auto* arr = n->as_array();
    if (!arr) throw ConfigError("verify.test_measures must be an array of strings");
    cfg.verify.test_measures.clear();
    for (const auto& e : *arr) {
      auto sv = e.value<std::string>();
      if (!sv) throw ConfigError("verify.test_measures must be an array of strings");
      cfg.verify.test_measures.push_back(*sv);
    }
  }
  cfg.verify.energy_tol = number(v, "energy_tol", "verify").value_or(cfg.verify.energy_tol);

  const auto& o = sub_table(root, "outputs", false);
  check_keys(o, "[outputs]", {"dir"});
  cfg.output_dir = string(o, "dir", "outputs").value_or(cfg.output_dir);

  try {
    cfg.sim.check();
    cfg.picard.check();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

inline Problem make_problem(const RunConfig& cfg) { return Problem{cfg.op, cfg.domain, cfg.f, cfg.mu}; }

}  // namespace fkmd
