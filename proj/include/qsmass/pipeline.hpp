#pragma once

// End-to-end runs: configuration -> boundary data -> path -> bounds ->
// (optionally) extension, assembled into JSON reports and CSV series.

#include <optional>
#include <string>
#include <vector>

#include "qsmass/bound.hpp"
#include "qsmass/config.hpp"
#include "qsmass/errors.hpp"
#include "qsmass/extension.hpp"
#include "qsmass/io.hpp"
#include "qsmass/metric.hpp"
#include "qsmass/ms_path.hpp"
#include "qsmass/optimize.hpp"
#include "qsmass/uniformization.hpp"

namespace qsmass {

struct ResolvedBoundary {
  GridPtr grid;
  std::optional<BoundaryData> data;
  std::optional<UniformizationSolution> uniformization;  ///< set for K-target input
};

inline ConformalMetric resolve_metric(const RunConfig& cfg, const GridPtr& g,
                                      std::optional<UniformizationSolution>* sol = nullptr) {
  const ScalarField f = cfg.metric_field.build(g);
  if (cfg.metric_kind == RunConfig::MetricKind::Phi) return make_metric(f, cfg.r);
  UniformizationSolution u = solve_conformal_factor(f, cfg.uniformization_tol, cfg.uniformization_max_iter);
  ConformalMetric m = make_metric(u.phi, 1.0);
  if (sol) *sol = std::move(u);
  return m;
}

inline ResolvedBoundary resolve_boundary(const RunConfig& cfg) {
  ResolvedBoundary rb;
  rb.grid = SphereGrid::build(cfg.band_limit);
  ConformalMetric m = resolve_metric(cfg, rb.grid, &rb.uniformization);
  ScalarField H = cfg.h_kind == RunConfig::HKind::Constant ? ScalarField(rb.grid, cfg.h_constant)
                                                          : cfg.h_field.build(rb.grid);
  rb.data.emplace(std::move(m), std::move(H));
  return rb;
}

inline std::vector<ReparamFamily> families_of(const std::string& name) {
  if (name == "all") return {ReparamFamily::OdeSqrt, ReparamFamily::AffineDensity, ReparamFamily::PiecewiseLinear};
  if (name == "ode_sqrt") return {ReparamFamily::OdeSqrt};
  if (name == "affine_density") return {ReparamFamily::AffineDensity};
  if (name == "piecewise_linear") return {ReparamFamily::PiecewiseLinear};
  throw ConfigurationError("unknown reparameterization family '" + name + "'");
}

inline Json rep_params_json(const std::optional<Reparameterization>& rep) {
  Json j = Json::object();
  if (!rep) {
    j["k"] = 0.0;
    return j;
  }
  j["k"] = rep->k;
  j["knots_t"] = rep->knots.t;
  j["values"] = rep->knots.values;
  return j;
}

/// Everything a bound report needs, kept for reuse by the extension.
struct BoundRun {
  ResolvedBoundary boundary;
  PathTable table;
  OptimizedBound best;
  std::optional<double> kappa;
};

inline BoundRun run_bounds(const RunConfig& cfg) {
  BoundRun run;
  run.boundary = resolve_boundary(cfg);
  const BoundaryData& bd = *run.boundary.data;
  run.table = build_path_table(bd.metric, cfg.path_nodes, cfg.gauge_tol);
  run.best = optimize_s(run.table, bd, families_of(cfg.family), cfg.budget);
  try {
    run.kappa = kappa_ratio(bd.metric);
  } catch (const NonPositiveCurvature&) {
    run.kappa.reset();
  }
  return run;
}

inline Json tolerances_json(const RunConfig& cfg, const BoundRun& run) {
  double gauge = 0.0;
  for (double g : run.table.gauge_residual) gauge = std::max(gauge, g);
  Json j = Json::object();
  j["gauge_tol"] = cfg.gauge_tol;
  j["uniformization_tol"] = cfg.uniformization_tol;
  j["step_tol"] = cfg.step_tol;
  j["max_gauge_residual"] = gauge;
  if (run.boundary.uniformization) j["uniformization_residual"] = run.boundary.uniformization->residual_sup;
  return j;
}

inline Json bound_report(const RunConfig& cfg, const BoundRun& run, std::optional<double> extension_mass) {
  const BoundaryData& bd = *run.boundary.data;
  const OptimizedBound& b = run.best;
  Json j = Json::object();
  j["r_gamma"] = bd.metric.r();
  j["area"] = bd.metric.area();
  j["kappa"] = run.kappa ? Json(*run.kappa) : Json(nullptr);
  j["zeta_upper"] = zeta_upper(run.table);
  j["calH"] = calH(bd);
  j["bound_theorem"] = b.theorem;
  j["bound_half_r"] = b.half_r;
  j["bound_best"] = b.value;
  j["best_family"] = b.family;
  j["best_params"] = rep_params_json(b.rep);
  j["extension_mass"] = extension_mass ? Json(*extension_mass) : Json(nullptr);
  j["tolerances"] = tolerances_json(cfg, run);
  return j;
}

inline Json run_bound(const RunConfig& cfg) {
  const BoundRun run = run_bounds(cfg);
  Json j = bound_report(cfg, run, std::nullopt);
  j["config"] = config_to_json(cfg);
  return j;
}

inline Json run_zeta(const RunConfig& cfg) {
  const ResolvedBoundary rb = resolve_boundary(cfg);
  const PathTable tab = build_path_table(rb.data->metric, cfg.path_nodes, cfg.gauge_tol);
  Json j = Json::object();
  j["r_gamma"] = rb.data->metric.r();
  j["zeta_upper"] = zeta_upper(tab);
  j["path_nodes"] = tab.size();
  j["config"] = config_to_json(cfg);
  return j;
}

/// Rep driving the extension: the optimizer's choice, else the theorem's,
/// else s = 1 + t.
inline Reparameterization extension_rep(const BoundRun& run) {
  if (run.best.rep) return *run.best.rep;
  const TheoremBound th = bound_theorem(run.table, *run.boundary.data);
  if (th.rep) return *th.rep;
  return Reparameterization::affine_density(1.0, {0.0, 1.0}, {1.0, 1.0});
}

inline double sample_residual(const ExtensionSample& x) {
  double r = std::numeric_limits<double>::infinity();
  for (int side = 0; side < 2; ++side)
    r = std::min(r, monotonicity_residual(x.s, x.calH, x.dcalH2[side], x.alpha, x.tprime[side], x.beta));
  return r;
}

inline std::string series_to_csv(const ExtensionResult& res) {
  std::string out = "s,calH,minv,maxv,mono_residual\n";
  for (const auto& x : res.samples)
    out += format_double(x.s) + "," + format_double(x.calH) + "," + format_double(x.min_v) + "," +
           format_double(x.max_v) + "," + format_double(sample_residual(x)) + "\n";
  return out;
}

struct ExtendRun {
  Json report;
  ExtensionResult result;
};

inline ExtendRun run_extend(const RunConfig& cfg) {
  const BoundRun run = run_bounds(cfg);
  const Reparameterization rep = extension_rep(run);
  ExtensionConfig ec{*run.boundary.data, rep};
  ec.s_max = cfg.s_max;
  ec.step_tol = cfg.step_tol;
  ec.gauge_tol = cfg.gauge_tol;
  ExtendRun out;
  out.result = evolve(ec);
  const ExtensionResult& res = out.result;

  Json j = bound_report(cfg, run, res.mass);
  j["fit_residual"] = res.fit_residual;
  j["s_max"] = res.s_max;
  j["steps"] = res.steps;
  Json d = Json::object();
  d["b"] = res.b;
  d["extension_family"] = family_name(rep.family);
  d["extension_params"] = rep_params_json(rep);
  d["bound_general"] = bound_general(run.table, rep, *run.boundary.data);
  d["mass_q"] = res.mass_q;
  d["min_v"] = res.min_v;
  d["rejected_steps"] = res.rejected;
  d["monotonicity_worst_residual"] = res.monotonicity.worst_residual;
  d["monotonicity_worst_s"] = res.monotonicity.worst_s;
  d["monotonicity_fd_worst_residual"] = res.monotonicity.fd_worst_residual;
  d["q_max_increase"] = res.monotonicity.q_max_increase;
  j["diagnostics"] = d;
  j["config"] = config_to_json(cfg);
  out.report = std::move(j);
  return out;
}

inline std::string path_table_to_csv(const PathTable& tab) {
  std::string out = "t,c,alpha,beta,gauge_residual\n";
  for (int i = 0; i < tab.size(); ++i)
    out += format_double(tab.t[i]) + "," + format_double(tab.c[i]) + "," + format_double(tab.alpha[i]) + "," +
           format_double(tab.beta[i]) + "," + format_double(tab.gauge_residual[i]) + "\n";
  return out;
}

inline std::string residual_history_csv(const UniformizationSolution& u) {
  std::string out = "iteration,residual\n";
  for (std::size_t i = 0; i < u.residual_history.size(); ++i)
    out += std::to_string(i) + "," + format_double(u.residual_history[i]) + "\n";
  return out;
}

inline Json error_json(const std::string& kind, const std::string& message) {
  Json j = Json::object();
  j["error"] = kind;
  j["message"] = message;
  return j;
}

}  // namespace qsmass
