#pragma once

#include "fkmd/kernels.hpp"
#include "fkmd/measure_data.hpp"
#include "fkmd/process.hpp"

#include <limits>
#include <string>
#include <vector>

namespace fkmd {

struct ClassRReport {
  std::vector<Vec> probes;
  std::vector<double> values;  // R|mu| at the probes
  std::vector<double> std_errors;  // 0 when an exact kernel was used
  std::vector<bool> finite;
  double total_variation = 0.0;  // +inf when the TV quadrature diverges
  bool tv_finite = true;
  bool exact_kernel = false;
  bool in_class = true;
  std::vector<std::string> notes;
};

/// Evaluates R|mu| at the probes. With an exact kernel the potential is a
/// quadrature; otherwise it is a Monte Carlo mean over mollified paths, run at
/// the configured horizon and at a quarter of it. An estimate that keeps
/// growing with the horizon while paths are still being censored is flagged
/// as divergent.
inline ClassRReport is_class_R(const MeasureData& mu, const OperatorSpec& spec, const Domain& domain,
                               const std::vector<Vec>& probe_points, const SimConfig& sim = {}, int threads = 1) {
  ClassRReport rep;
  rep.probes = probe_points;
  const MeasureData abs_mu = mu.absolute();
  try {
    rep.total_variation = total_variation(abs_mu, domain, reference_measure(spec));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::quadrature_failed) throw;
    rep.total_variation = std::numeric_limits<double>::infinity();
    rep.tv_finite = false;
    rep.notes.emplace_back("total variation diverges");
  }
  const auto kernel = kernel_for(spec, domain);
  rep.exact_kernel = kernel && kernel_supports(*kernel, abs_mu);
  for (const auto& x : probe_points) {
    detail::require_start(domain, x);
    double value = 0.0;
    double se = 0.0;
    bool finite = true;
    if (abs_mu.empty()) {
      // trivially zero
    } else if (rep.exact_kernel) {
      value = potential_Rmu(*kernel, abs_mu, x);
      finite = std::isfinite(value);
    } else {
      const double eps = 2.0 * std::sqrt(sim.dt);
      const MeasureData smooth = abs_mu.atoms.empty() ? abs_mu : mollify(abs_mu, eps, domain);
      auto estimate = [&](double horizon, double& censored) {
        const PathModel model(spec, domain, sim.dt);
        std::vector<double> vals(sim.paths);
        std::vector<char> cens(sim.paths, 0);
        parallel_for(sim.paths, threads, [&](std::size_t p) {
          double a = 0.0;
          const PathEnd end = model.run(x, sim.seed, p, horizon,
                                        [&](const Vec& y, double, double len) { a += smooth.density_at(y) * len; });
          vals[p] = a;
          cens[p] = end.censored() ? 1 : 0;
        });
        std::size_t c = 0;
        for (char v : cens) c += static_cast<std::size_t>(v);
        censored = static_cast<double>(c) / static_cast<double>(sim.paths);
        return summarize(vals);
      };
      double cens_short = 0.0;
      double cens_long = 0.0;
      const auto short_run = estimate(0.25 * sim.max_horizon, cens_short);
      const auto long_run = estimate(sim.max_horizon, cens_long);
      value = long_run.mean;
      se = long_run.std_error;
      const double growth = long_run.mean - short_run.mean;
      finite = std::isfinite(value) &&
               !(cens_long >= 1e-3 && growth > 3.0 * (long_run.std_error + short_run.std_error) && growth > 0.5 * value);
    }
    rep.values.push_back(value);
    rep.std_errors.push_back(se);
    rep.finite.push_back(finite);
    if (!finite) rep.in_class = false;
  }
  if (!rep.tv_finite && rep.in_class) rep.notes.emplace_back("infinite total variation but finite potential");
  return rep;
}

}  // namespace fkmd
