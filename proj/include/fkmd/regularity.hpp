#pragma once

#include "fkmd/field.hpp"
#include "fkmd/kernels.hpp"
#include "fkmd/measure_data.hpp"
#include "fkmd/operators.hpp"
#include "fkmd/quadrature.hpp"
#include "fkmd/solver.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace fkmd {

struct EnergyReport {
  std::vector<double> k_values;
  std::vector<double> energies;  // E(T_k u, T_k u), discrete
  std::vector<double> bounds;  // k (||f_u||_1 + ||mu||_TV)
  std::vector<double> bounds_alt;  // k (||f(.,0)||_1 + 2 ||mu||_TV)
  std::vector<bool> row_pass;
  double tol = 0.05;
  double l1_f_u = 0.0;
  double l1_f0 = 0.0;
  double tv_mu = 0.0;
  bool pass = true;  // against `bounds`
  bool pass_alt = true;  // against `bounds_alt`
};

struct L1Report {
  double l1_f_u = 0.0;
  double l1_f0 = 0.0;
  double tv_mu = 0.0;
  double bound = 0.0;
  bool pass = true;
};

namespace detail {

struct NormTriple {
  double l1_f_u;
  double l1_f0;
  double tv;
};

inline NormTriple measured_norms(const SolutionField& u, const Nonlinearity& f, const MeasureData& mu, const OperatorSpec& spec) {
  std::vector<std::string> warnings;
  const auto ref = reference_measure(spec);
  const Domain& domain = u.domain();
  NormTriple n{};
  n.l1_f_u = l1_norm([&](const Vec& x) { return f(x, u(x)); }, domain, ref, u.grid(), warnings, "L1 of f_u");
  n.l1_f0 = l1_norm([&](const Vec& x) { return f(x, 0.0); }, domain, ref, u.grid(), warnings, "L1 of f(.,0)");
  try {
    n.tv = total_variation(mu, domain, ref);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::quadrature_failed) throw;
    n.tv = std::numeric_limits<double>::infinity();
  }
  return n;
}

}  // namespace detail

/// Discrete energy of T_k u against both forms of the truncation bound.
inline EnergyReport energy_estimate_check(const SolutionField& u, const OperatorSpec& spec, const Nonlinearity& f,
                                          const MeasureData& mu, const std::vector<double>& k_values, double tol = 0.05) {
  require(!std::holds_alternative<OrnsteinUhlenbeck>(spec),
          "energy check is not available for the Ornstein-Uhlenbeck operator (no discrete energy)");
  require(u.domain().bounded(), "energy check needs a bounded domain");
  EnergyReport rep;
  rep.tol = tol;
  const auto norms = detail::measured_norms(u, f, mu, spec);
  rep.l1_f_u = norms.l1_f_u;
  rep.l1_f0 = norms.l1_f0;
  rep.tv_mu = norms.tv;
  for (double k : k_values) {
    require(k > 0.0, "truncation levels must be positive");
    const double e = dirichlet_energy(spec, u.map([k](double v) { return truncate(k, v); }));
    const double b = k * (norms.l1_f_u + norms.tv);
    const double b_alt = k * (norms.l1_f0 + 2.0 * norms.tv);
    rep.k_values.push_back(k);
    rep.energies.push_back(e);
    rep.bounds.push_back(b);
    rep.bounds_alt.push_back(b_alt);
    const bool ok = e <= b * (1.0 + tol) + 1e-12;
    rep.row_pass.push_back(ok);
    rep.pass = rep.pass && ok;
    rep.pass_alt = rep.pass_alt && e <= b_alt * (1.0 + tol) + 1e-12;
  }
  return rep;
}

/// ||f_u||_1 <= ||f(.,0)||_1 + ||mu||_TV, with relative quadrature slack.
inline L1Report l1_estimate_check(const SolutionField& u, const Nonlinearity& f, const MeasureData& mu, const OperatorSpec& spec,
                                  double rel_tol = 2e-3) {
  const auto n = detail::measured_norms(u, f, mu, spec);
  L1Report rep{n.l1_f_u, n.l1_f0, n.tv, n.l1_f0 + n.tv, true};
  rep.pass = rep.l1_f_u <= rep.bound * (1.0 + rel_tol) + 1e-12;
  return rep;
}

struct TestMeasure {
  std::string id;
  MeasureData nu;
};

/// {Lebesgue, density 2x, density (pi/2) sin(pi x)} rescaled to (a, b).
inline std::vector<TestMeasure> default_test_measures(double a = 0.0, double b = 1.0) {
  const double L = b - a;
  return {
      {"lebesgue", MeasureData::with_density(ScalarField(1.0))},
      {"density_2x", MeasureData::with_density(ScalarField([a, L](const Vec& x) { return 2.0 * (x[0] - a) / L; }))},
      {"density_sin",
       MeasureData::with_density(ScalarField([a, L](const Vec& x) { return 0.5 * M_PI * std::sin(M_PI * (x[0] - a) / L); }))},
  };
}

struct DualityRow {
  std::string nu_id;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;  // relative
  double stat_tol = 0.0;  // propagated solver stderr, relative
  bool pass = true;
  bool skipped = false;
};

struct DualityReport {
  std::vector<DualityRow> rows;
  std::vector<std::string> warnings;
  bool pass = true;
};

/// <nu, u> against (f_u, U^nu) + <mu, U^nu>, U^nu = copotential of nu.
/// `u_std_error` (per node, may be empty) widens the tolerance by the
/// propagated statistical error of u.
inline DualityReport duality_check(const SolutionField& u, const Nonlinearity& f, const MeasureData& mu, const KernelSpec& kernel,
                                   const std::vector<TestMeasure>& tests, const std::vector<double>& u_std_error = {},
                                   double rel_tol = 1e-2) {
  require(u.grid().dim() == 1, "duality check is implemented on intervals");
  const auto iv = detail::kernel_interval(kernel);
  if (!iv) throw Error(ErrorCode::no_kernel, "no kernel; use Monte Carlo path estimator");
  const double a = iv->first;
  const double b = iv->second;
  const auto nodes = detail::grid_breakpoints(u.grid())[0];
  const std::optional<SolutionField> se =
      u_std_error.empty() ? std::nullopt : std::optional<SolutionField>(SolutionField(u.grid(), u.domain(), u_std_error));
  DualityReport rep;
  for (const auto& t : tests) {
    require(t.nu.atoms.empty(), "test measures must be absolutely continuous");
    DualityRow row;
    row.nu_id = t.id;
    auto nu_bp = t.nu.breakpoints(1)[0];
    auto U = [&](double x) {
      return copotential(kernel, [&](const Vec& y) { return t.nu.density_at(y); }, scalar_vec(x));
    };
    // Admissibility surrogate: the co-potential stays bounded on the grid.
    double sup = 0.0;
    for (double x : nodes)
      if (x > a && x < b) sup = std::max(sup, std::abs(U(x)));
    if (!std::isfinite(sup) || sup > 1e12) {
      row.skipped = true;
      rep.warnings.push_back("test measure " + t.id + " skipped: unbounded co-potential");
      rep.rows.push_back(row);
      continue;
    }
    std::vector<double> bp = nodes;
    bp.insert(bp.end(), nu_bp.begin(), nu_bp.end());
    row.lhs = quad::integrate([&](double x) { return u(scalar_vec(x)) * t.nu.density_at(scalar_vec(x)); }, a, b, kKernelPanels, bp);
    double stat = 0.0;
    if (se)
      stat = quad::integrate([&](double x) { return (*se)(scalar_vec(x)) * std::abs(t.nu.density_at(scalar_vec(x))); }, a, b,
                             kKernelPanels, bp);
    double rhs = 0.0;
    if (!f.identically_zero)
      rhs += quad::integrate([&](double x) { return f(scalar_vec(x), u(scalar_vec(x))) * U(x); }, a, b, kKernelPanels, nodes);
    for (const auto& atom : mu.atoms) rhs += atom.weight * U(atom.point[0]);
    if (mu.has_density()) {
      const auto mbp = mu.breakpoints(1)[0];
      rhs += quad::integrate([&](double x) { return mu.density_at(scalar_vec(x)) * U(x); }, a, b, kKernelPanels, mbp);
    }
    row.rhs = rhs;
    const double scale = std::max({std::abs(row.lhs), std::abs(row.rhs), 1e-300});
    row.residual = (row.lhs == row.rhs) ? 0.0 : std::abs(row.lhs - row.rhs) / scale;
    row.stat_tol = 3.0 * stat / scale;
    row.pass = row.residual <= rel_tol + row.stat_tol;
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

struct WeakRow {
  double lhs = 0.0;  // E(u, v)
  double rhs = 0.0;  // (f_u, v) + <mu, v>
  double residual = 0.0;  // |lhs - rhs| / max(|lhs|, |rhs|, scale)
  bool pass = true;
};

struct WeakReport {
  std::vector<WeakRow> rows;
  bool pass = true;
};

/// Discrete E(u, v) against (f_u, v) + <mu, v> for test fields vanishing on
/// the outer ring of the grid.
inline WeakReport weak_solution_check(const SolutionField& u, const Nonlinearity& f, const MeasureData& mu, const DivergenceForm& op,
                                      const std::vector<SolutionField>& test_fields, double rel_tol = 1e-3) {
  const Grid& g = u.grid();
  WeakReport rep;
  for (const auto& v : test_fields) {
    require(v.grid().size() == g.size() && v.grid().nodes_per_axis() == g.nodes_per_axis(), "test field must share the grid");
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto mi = g.multi_index(i);
      bool ring = false;
      for (int a = 0; a < g.dim(); ++a) {
        const int c = mi[static_cast<std::size_t>(a)];
        ring = ring || c == 0 || c == g.nodes_per_axis() - 1;
      }
      require(!ring || v[i] == 0.0, "test field must vanish on the boundary ring of the grid");
    }
    WeakRow row;
    row.lhs = energy_bilinear(op, u, v);
    std::vector<std::string> warnings;
    const auto bp = detail::grid_breakpoints(g);
    double rhs = 0.0;
    if (!f.identically_zero)
      rhs += detail::integrate_over([&](const Vec& x) { return f(x, u(x)) * v(x); }, u.domain(), {}, bp, 1e-6, "weak form f term");
    for (const auto& atom : mu.atoms) rhs += atom.weight * v(atom.point);
    if (mu.has_density()) {
      auto mbp = mu.breakpoints(g.dim());
      for (std::size_t a = 0; a < mbp.size(); ++a) mbp[a].insert(mbp[a].end(), bp[a].begin(), bp[a].end());
      rhs += detail::integrate_over([&](const Vec& x) { return mu.density_at(x) * v(x); }, u.domain(), {}, mbp, 1e-6,
                                    "weak form measure term");
    }
    row.rhs = rhs;
    const double scale = std::max({std::abs(row.lhs), std::abs(row.rhs), 1e-12});
    row.residual = std::abs(row.lhs - row.rhs) / scale;
    row.pass = row.residual <= rel_tol;
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace fkmd
