#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "fhl/cli.hpp"
#include "fhl/coupling.hpp"
#include "fhl/ergodic.hpp"
#include "fhl/fbm.hpp"
#include "fhl/girsanov.hpp"
#include "fhl/harnack.hpp"

namespace fhl::cli {

using Eigen::Index;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json vec(const VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

json estimate(const MeanEstimate& m) { return {{"mean", num(m.mean)}, {"se", num(m.se)}}; }

json terms_json(const BracketTerms& t) {
  return {{"boundary", num(t.boundary)},         {"weight_gap", num(t.weight_gap)},
          {"schedule", num(t.schedule)},         {"sigma_holder", num(t.sigma_holder)},
          {"drift", num(t.drift)},               {"damping", num(t.damping)}};
}

json variant_json(const ConstantsVariant& v) {
  return {{"zeta_sup", num(v.zeta_sup)}, {"terms", terms_json(v.terms)}, {"C", num(v.C)},
          {"C1", num(v.C1)},             {"C2", num(v.C2)},              {"rate", num(v.rate)}};
}

json constants_json(const ConstantsBundle& b, const VectorXd& x, const VectorXd& y) {
  return {{"H", b.H},
          {"K", b.K},
          {"Kbar", b.Kbar},
          {"alpha0", b.alpha0},
          {"theta0", b.theta0},
          {"inv_sigma", b.inv_sigma},
          {"T", b.T},
          {"C0", num(b.C0)},
          {"zeta0", num(b.zeta0)},
          {"prefactor", num(b.prefactor)},
          {"denominator", num(b.denominator)},
          {"kernel_normalization", num(b.kernel_normalization)},
          {"majorant_available", b.majorant_available},
          {"exact", variant_json(b.exact)},
          {"majorant", variant_json(b.majorant)},
          {"headline", b.majorant_available ? "majorant" : "exact"},
          {"cost_rate", num(b.bound(1.0))},
          {"printed_rate", num(b.printed_bound(1.0))},
          {"x", vec(x)},
          {"y", vec(y)},
          {"bound_xy", num(b.bound(x, y))}};
}

json function_json(const TestFunction& f) {
  json j{{"family", f.family_name()}, {"floor", num(f.floor())}, {"ceiling", num(f.ceiling())}};
  if (f.family() == TestFunction::Family::kConstant) j["c"] = num(f.a());
  if (f.family() == TestFunction::Family::kBump) {
    j["a"] = num(f.a());
    j["s"] = num(f.s());
    j["center"] = vec(f.vec());
  }
  if (f.family() == TestFunction::Family::kClippedExp) j["w"] = vec(f.vec());
  return j;
}

json harnack_json(const HarnackReport& r) {
  json j{{"kind", r.kind},
         {"lhs", estimate(r.lhs)},
         {"rhs", estimate(r.rhs)},
         {"bound", num(r.bound)},
         {"margin", num(r.margin)},
         {"ratio", num(r.ratio)},
         {"combined_se", num(r.combined_se)},
         {"verdict", to_string(r.decision)},
         {"n_paths", r.n_paths},
         {"seed_lhs", r.seed_lhs},
         {"seed_rhs", r.seed_rhs}};
  if (r.kind == "power") j["p"] = r.p;
  return j;
}

struct Tally {
  std::size_t pass = 0, fail = 0, inconclusive = 0;

  void add(Verdict v) {
    if (v == Verdict::kPass) ++pass;
    if (v == Verdict::kFail) ++fail;
    if (v == Verdict::kInconclusive) ++inconclusive;
  }
  Verdict overall() const {
    if (fail) return Verdict::kFail;
    if (inconclusive) return Verdict::kInconclusive;
    return Verdict::kPass;
  }
  int exit_code() const {
    if (fail) return kExitFail;
    if (inconclusive) return kExitInconclusive;
    return kExitOk;
  }
  json to_json() const {
    return {{"pass", pass}, {"fail", fail}, {"inconclusive", inconclusive}, {"verdict", to_string(overall())}};
  }
};

Verdict worst(Verdict a, Verdict b) {
  if (a == Verdict::kFail || b == Verdict::kFail) return Verdict::kFail;
  if (a == Verdict::kInconclusive || b == Verdict::kInconclusive) return Verdict::kInconclusive;
  return Verdict::kPass;
}

Verdict from_bool(bool ok) { return ok ? Verdict::kPass : Verdict::kFail; }

std::uint64_t check_seed(const ExperimentConfig& cfg, const char* name) {
  return derive_seed(cfg.run.seed, seed_label(name));
}

json base_report(const ExperimentConfig& cfg, const char* command) {
  json cfg_echo = cfg.source;
  cfg_echo["run"]["seed"] = cfg.run.seed;
  return {{"artifact_version", kArtifactVersion},
          {"command", command},
          {"seed", cfg.run.seed},
          {"config", cfg_echo},
          {"grid", {{"n", cfg.coupling.n},
                    {"refine_levels", cfg.coupling.refine_levels},
                    {"refine_ratio", cfg.coupling.refine_ratio},
                    {"nodes", cfg.grid().size()}}}};
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

template <class F>
void write_artifact(const ExperimentConfig& cfg, json& report, const std::string& name, F&& writer) {
  if (cfg.output.dir.empty() || !cfg.output.csv) return;
  std::filesystem::create_directories(cfg.output.dir);
  std::ofstream out(std::filesystem::path(cfg.output.dir) / name);
  if (!out) throw Error("cannot write " + name);
  writer(out);
  report["artifacts"].push_back(name);
}

CommandResult finish(const ExperimentConfig& cfg, json report, int code) {
  report["exit_code"] = code;
  if (!cfg.output.dir.empty()) {
    std::filesystem::create_directories(cfg.output.dir);
    write_file(std::filesystem::path(cfg.output.dir) / "report.json", dump_report(report));
  }
  return {std::move(report), code};
}

// ---- verify checks ----

json run_energy(const ExperimentConfig& cfg, Verdict& verdict) {
  const ModelSpec& model = cfg.model;
  const TimeGrid grid = cfg.grid();
  const CouplingSchedule schedule(model.drift.K(), cfg.coupling.theta0, model.T);
  const std::size_t n = cfg.run.energy_paths;
  const RngSeed seed{check_seed(cfg, "energy"), 0};
  std::vector<EnergyReport> energy(n, EnergyReport{});
  std::vector<CouplingSummary> summary(n, CouplingSummary{});
  parallel_for(n, [&](std::size_t i) {
    const FbmPath noise = sample_volterra(grid, model.H, model.d, seed.with_stream(i));
    const CouplingTrace trace = solve_coupled(model, cfg.run.x, cfg.run.y, noise, schedule);
    energy[i] = energy_check(trace, cfg.run.tau);
    summary[i] = coupling_report(trace, cfg.run.gap_tol * (cfg.run.x - cfg.run.y).norm(), cfg.run.tau);
  });
  std::size_t violations = 0, failed_couplings = 0;
  double max_slack = -std::numeric_limits<double>::infinity(), max_gap = 0.0, max_norm_ratio = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    violations += energy[i].violations;
    max_slack = std::max(max_slack, energy[i].max_slack);
    max_gap = std::max(max_gap, summary[i].terminal_gap);
    if (summary[i].budget > 0.0) max_norm_ratio = std::max(max_norm_ratio, summary[i].max_normalized / summary[i].budget);
    if (!summary[i].success) ++failed_couplings;
  }
  const double dist = (cfg.run.x - cfg.run.y).norm();
  verdict = from_bool(violations == 0 && failed_couplings == 0);
  return {{"n_traces", n},
          {"tau", cfg.run.tau},
          {"violations", violations},
          {"max_slack", num(n ? max_slack : 0.0)},
          {"terminal_time", num(n ? summary[0].terminal_time : 0.0)},
          {"max_terminal_gap", num(max_gap)},
          {"gap_tolerance", num(cfg.run.gap_tol * dist)},
          {"max_normalized_over_budget", num(max_norm_ratio)},
          {"failed_couplings", failed_couplings},
          {"verdict", to_string(verdict)}};
}

json run_martingale(const ExperimentConfig& cfg, Verdict& verdict) {
  const ModelSpec& model = cfg.model;
  std::vector<double> times;
  for (double f : cfg.run.probe_times) times.push_back(f * model.T);
  const CouplingSchedule schedule(model.drift.K(), cfg.coupling.theta0, model.T);
  const MartingaleReport rep = martingale_diagnostic(model, cfg.run.x, cfg.run.y, schedule, cfg.grid(), times,
                                                     cfg.run.n_paths, {check_seed(cfg, "martingale"), 0});
  json probes = json::array();
  for (std::size_t k = 0; k < rep.times.size(); ++k)
    probes.push_back({{"t", num(rep.times[k])}, {"mean_R", estimate(rep.mean_R[k])}});
  verdict = from_bool(rep.pass);
  return {{"probes", probes}, {"n_paths", cfg.run.n_paths}, {"verdict", to_string(verdict)}};
}

json run_entropy(const ExperimentConfig& cfg, Verdict& verdict) {
  const ModelSpec& model = cfg.model;
  const CouplingSchedule schedule(model.drift.K(), cfg.coupling.theta0, model.T);
  const EntropyReport rep = entropy_diagnostic(model, cfg.run.x, cfg.run.y, schedule, cfg.grid(), cfg.run.n_paths,
                                               {check_seed(cfg, "entropy"), 0});
  verdict = decide(rep.bound - rep.r_log_r.mean, rep.r_log_r.se);
  return {{"r_log_r", estimate(rep.r_log_r)},
          {"bound", num(rep.bound)},
          {"margin", num(rep.margin)},
          {"n_paths", cfg.run.n_paths},
          {"verdict", to_string(verdict)}};
}

json run_per_function(const ExperimentConfig& cfg, const std::string& name, Verdict& verdict) {
  const ModelSpec& model = cfg.model;
  const RunBlock& run = cfg.run;
  json cases = json::array();
  verdict = Verdict::kPass;
  for (std::size_t i = 0; i < run.test_functions.size(); ++i) {
    const TestFunction& f = run.test_functions[i];
    const std::uint64_t seed = derive_seed(check_seed(cfg, name.c_str()), i);
    json c;
    Verdict v = Verdict::kPass;
    if (name == "log-harnack") {
      const HarnackReport r = log_harnack_check(f, run.x, run.y, model, cfg.coupling.theta0, cfg.plain_grid(),
                                                run.n_paths, seed);
      c = harnack_json(r);
      v = r.decision;
    } else if (name == "power-harnack") {
      const HarnackReport r = power_harnack_check(run.p, f, run.x, run.y, model, cfg.coupling.theta0,
                                                  cfg.plain_grid(), run.n_paths, seed);
      c = harnack_json(r);
      v = r.decision;
    } else if (name == "change-of-measure") {
      const ChangeOfMeasureReport r = change_of_measure_check(f, run.x, run.y, model, cfg.coupling.theta0,
                                                              cfg.grid(), run.n_paths, seed);
      v = from_bool(r.pass);
      c = {{"weighted", estimate(r.weighted)},
           {"plain", estimate(r.plain)},
           {"density", estimate(r.density)},
           {"difference", num(r.difference)},
           {"combined_se", num(r.combined_se)},
           {"identity_pass", r.identity_pass},
           {"martingale_pass", r.martingale_pass},
           {"n_paths", r.n_paths},
           {"verdict", to_string(v)}};
    } else {
      const FellerReport r = feller_diagnostic(f, run.x, run.feller_radii, model, cfg.coupling.theta0,
                                               cfg.plain_grid(), run.n_paths, seed);
      v = from_bool(r.monotone && r.within_modulus);
      json pts = json::array();
      for (const auto& p : r.points)
        pts.push_back({{"radius", num(p.radius)},
                       {"sup_difference", num(p.sup_difference)},
                       {"se", num(p.se)},
                       {"modulus", num(p.modulus)}});
      c = {{"points", pts},
           {"monotone", r.monotone},
           {"within_modulus", r.within_modulus},
           {"n_paths", r.n_paths},
           {"verdict", to_string(v)}};
    }
    c["test_function"] = function_json(f);
    cases.push_back(c);
    verdict = worst(verdict, v);
  }
  return {{"cases", cases}, {"verdict", to_string(verdict)}};
}

}  // namespace

std::string dump_report(const json& report) { return report.dump(2) + "\n"; }

CommandResult cmd_constants(const ExperimentConfig& cfg) {
  json report = base_report(cfg, "constants");
  const ConstantsBundle b = constants_bundle(cfg.model, cfg.coupling.theta0, cfg.model.T);
  report["constants"] = constants_json(b, cfg.run.x, cfg.run.y);
  return finish(cfg, std::move(report), kExitOk);
}

CommandResult cmd_verify(const ExperimentConfig& cfg) {
  json report = base_report(cfg, "verify");
  report["constants"] =
      constants_json(constants_bundle(cfg.model, cfg.coupling.theta0, cfg.model.T), cfg.run.x, cfg.run.y);
  Tally tally;
  json checks = json::object();
  for (const std::string& name : cfg.run.checks) {
    Verdict v = Verdict::kPass;
    json out;
    if (name == "energy")
      out = run_energy(cfg, v);
    else if (name == "martingale")
      out = run_martingale(cfg, v);
    else if (name == "entropy")
      out = run_entropy(cfg, v);
    else
      out = run_per_function(cfg, name, v);
    out["seed"] = check_seed(cfg, name.c_str());
    checks[name] = out;
    tally.add(v);
  }
  report["checks"] = checks;
  report["summary"] = tally.to_json();
  return finish(cfg, std::move(report), tally.exit_code());
}

CommandResult cmd_invariant(const ExperimentConfig& cfg) {
  json report = base_report(cfg, "invariant");
  const ModelSpec& model = cfg.model;
  const InvariantBlock& ib = cfg.invariant;
  const TimeGrid grid = cfg.plain_grid();
  Tally tally;

  // Empirical moment constant, the computable stand-in for the (H2) contraction requirement.
  std::vector<VectorXd> xs{VectorXd::Zero(static_cast<Index>(model.d)), ib.x0};
  const MomentReport moments = moment_diagnostic(model, xs, grid, std::min<std::size_t>(cfg.run.n_paths, 2000),
                                                 {check_seed(cfg, "moments"), 0}, cfg.run.route);
  const double proxy = moments.max_ratio * std::exp(2.0 * model.drift.L() * model.T);
  // The requirement is sufficient, not necessary: an unmet proxy leaves the run unsupported, not refuted.
  const Verdict gate = proxy < 1.0 ? Verdict::kPass : Verdict::kInconclusive;
  tally.add(gate);
  report["moments"] = {{"M_hat", num(moments.max_ratio)},
                       {"contraction_proxy", num(proxy)},
                       {"contraction_holds", proxy < 1.0},
                       {"n_paths", moments.n_paths},
                       {"verdict", to_string(gate)}};

  const ChainConfig chain{ib.x0, ib.n_steps, ib.n_chains, {check_seed(cfg, "chain"), 0}};
  const EmpiricalMeasure mu = krylov_bogoliubov(chain, model, grid, cfg.run.route);
  json measure{{"n_samples", mu.size()}, {"mean", vec(mu.mean())}, {"second_moment", num(mu.second_moment())}};
  json var = json::array();
  for (std::size_t i = 0; i < mu.dim(); ++i) var.push_back(num(mu.variance(i)));
  measure["variance"] = var;
  bool closed_form = true;
  try {
    const double vbar = invariant_variance(model);
    measure["invariant_variance"] = num(vbar);
    measure["variance_rel_error"] = num(mu.variance(0) / vbar - 1.0);
  } catch (const UnsupportedParameterError&) {
    closed_form = false;
  }
  report["measure"] = measure;
  write_artifact(cfg, report, "measure.csv", [&](std::ostream& o) { write_csv(o, mu); });

  if (ib.n_steps > 1) {
    const InvarianceReport inv =
        invariance_check(mu, model, grid, {check_seed(cfg, "invariance"), 0}, ib.bootstrap, cfg.run.route);
    const Verdict v = from_bool(inv.pass);
    tally.add(v);
    report["invariance"] = {{"w2", num(inv.w2)},
                            {"noise_floor", num(inv.noise_floor)},
                            {"ratio", num(inv.ratio)},
                            {"n_samples", inv.n_samples},
                            {"n_bootstrap", inv.n_bootstrap},
                            {"verdict", to_string(v)}};
  } else {
    report["invariance"] = {{"verdict", "skipped"}, {"notice", "n_steps = 1 yields the measure only"}};
  }

  if (ib.entropy_cost) {
    if (!closed_form) {
      report["entropy_cost"] = {
          {"supported", false},
          {"notice", "entropy-cost needs the scalar linear model with zero offset and constant sigma"}};
    } else {
      json cases = json::array();
      for (std::size_t k = 0; k < ib.tilts.size(); ++k) {
        const EntropyCostReport r =
            entropy_cost_check(model, ib.tilts[k], cfg.coupling.theta0, grid, ib.w2_samples, ib.mc_samples,
                               derive_seed(check_seed(cfg, "entropy-cost"), k));
        const Verdict v = from_bool(r.pass && r.w2_pass && r.lhs_mc_pass);
        tally.add(v);
        cases.push_back({{"m", num(r.m)},
                         {"lhs", num(r.lhs)},
                         {"cost_rate", num(r.cost_rate)},
                         {"rhs", num(r.rhs)},
                         {"inequality_pass", r.pass},
                         {"w2", num(r.w2)},
                         {"w2_rel_error", num(r.w2_rel_error)},
                         {"w2_pass", r.w2_pass},
                         {"lhs_mc", estimate(r.lhs_mc)},
                         {"lhs_mc_pass", r.lhs_mc_pass},
                         {"verdict", to_string(v)}});
      }
      report["entropy_cost"] = {{"supported", true}, {"cases", cases}};
    }
  }
  report["summary"] = tally.to_json();
  return finish(cfg, std::move(report), tally.exit_code());
}

CommandResult cmd_sample(const ExperimentConfig& cfg) {
  json report = base_report(cfg, "sample");
  const ModelSpec& model = cfg.model;
  const TimeGrid grid = cfg.plain_grid();
  const FbmPath noise = sample_noise(cfg.run.route, grid, model.H, model.d, {check_seed(cfg, "sample"), 0});
  const StatePath path = solve(model, cfg.run.x, noise);
  const double lambda = model.H - 0.1;
  report["sample"] = {{"route", cfg.run.route == NoiseRoute::kDirect ? "direct" : "volterra"},
                      {"cells", grid.cells()},
                      {"fbm_terminal", vec(noise.values.row(noise.values.rows() - 1).transpose())},
                      {"state_terminal", vec(path.states.row(path.states.rows() - 1).transpose())},
                      {"holder_exponent", lambda},
                      {"fbm_holder_norm", num(holder_norm(noise, lambda))}};
  write_artifact(cfg, report, "fbm.csv", [&](std::ostream& o) { write_csv(o, noise); });
  write_artifact(cfg, report, "path.csv", [&](std::ostream& o) {
    o << "t";
    for (std::size_t i = 0; i < model.d; ++i) o << ",X" << i + 1;
    o << '\n';
    o.precision(17);
    for (Index k = 0; k < path.states.rows(); ++k) {
      o << grid[static_cast<std::size_t>(k)];
      for (Index i = 0; i < path.states.cols(); ++i) o << ',' << path.states(k, i);
      o << '\n';
    }
  });
  return finish(cfg, std::move(report), kExitOk);
}

CommandResult cmd_couple(const ExperimentConfig& cfg) {
  json report = base_report(cfg, "couple");
  const ModelSpec& model = cfg.model;
  const TimeGrid grid = cfg.grid();
  const CouplingSchedule schedule(model.drift.K(), cfg.coupling.theta0, model.T);
  const FbmPath noise = sample_volterra(grid, model.H, model.d, {check_seed(cfg, "couple"), 0});
  const CouplingTrace trace = solve_coupled(model, cfg.run.x, cfg.run.y, noise, schedule);
  const EnergyReport energy = energy_check(trace, cfg.run.tau);
  const CouplingSummary summary =
      coupling_report(trace, cfg.run.gap_tol * (cfg.run.x - cfg.run.y).norm(), cfg.run.tau);
  const DensityTrace dens = log_density(trace, shift_kh_inverse(trace));
  const Verdict v = from_bool(energy.violations == 0 && summary.success);
  report["couple"] = {{"max_slack", num(energy.max_slack)},
                      {"violations", energy.violations},
                      {"terminal_time", num(summary.terminal_time)},
                      {"terminal_gap", num(summary.terminal_gap)},
                      {"budget", num(summary.budget)},
                      {"max_normalized", num(summary.max_normalized)},
                      {"terminal_log_density", num(dens.terminal_log_density())},
                      {"half_v_energy", num(dens.quadratic_variation(dens.quadratic_variation.size() - 1))},
                      {"verdict", to_string(v)}};
  write_artifact(cfg, report, "coupling.csv", [&](std::ostream& o) { write_csv(o, trace); });
  write_artifact(cfg, report, "density.csv", [&](std::ostream& o) {
    o << "t,log_R\n";
    o.precision(17);
    for (Index k = 0; k < dens.log_density.size(); ++k)
      o << grid[static_cast<std::size_t>(k)] << ',' << dens.log_density(k) << '\n';
  });
  return finish(cfg, std::move(report), v == Verdict::kPass ? kExitOk : kExitFail);
}

}  // namespace fhl::cli
