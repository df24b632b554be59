#include "fhl/girsanov.hpp"

#include <cmath>
#include <numeric>

#include "fhl/errors.hpp"
#include "fhl/fraccalc.hpp"

namespace fhl {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double DensityTrace::terminal_density() const { return std::exp(terminal_log_density()); }

DensityTrace shift_kh_inverse(const CouplingTrace& trace) {
  if (trace.u.rows() != static_cast<Index>(trace.grid.size())) throw InvalidInputError("trace carries no shift u");
  const double H = trace.noise.H;
  const FracDerivative inv = kh_inverse_apply(SampledFunction(trace.grid, trace.u), H);
  return {trace.grid, inv.values.values / kh_normalization(H), {}, {}, {}, inv.boundary_singular};
}

DensityTrace log_density(const CouplingTrace& trace, DensityTrace density) {
  if (!trace.noise.wiener) throw InvalidInputError("log density needs the Wiener increments");
  const MatrixXd& dW = trace.noise.wiener->increments;
  const Index n = static_cast<Index>(trace.grid.cells());
  density.stochastic_integral = VectorXd::Zero(n + 1);
  density.quadratic_variation = VectorXd::Zero(n + 1);
  for (Index k = 0; k < n; ++k) {
    const auto vk = density.v.row(k);
    density.stochastic_integral(k + 1) = density.stochastic_integral(k) + vk.dot(dW.row(k));
    density.quadratic_variation(k + 1) =
        density.quadratic_variation(k) + 0.5 * vk.squaredNorm() * trace.grid.step(static_cast<std::size_t>(k));
  }
  density.log_density = -(density.stochastic_integral + density.quadratic_variation);
  return density;
}

double ConstantsBundle::printed_bound(double dist2) const {
  const auto& v = majorant;
  return (v.C + v.C1 * T + v.C2 * std::pow(T, 2.0 * alpha0)) * std::pow(T, 2.0 * (1.0 - H)) / denominator * dist2;
}

double ConstantsBundle::bound(double dist2) const { return kernel_normalization * printed_bound(dist2); }

double ConstantsBundle::bound(const VectorXd& x, const VectorXd& y) const { return bound((x - y).squaredNorm()); }

ConstantsBundle constants_bundle(const ModelSpec& model, double theta0, double T) {
  const CouplingSchedule sched(model.drift.K(), theta0, T);
  ConstantsBundle b{};
  b.H = model.H;
  b.K = model.drift.K();
  b.Kbar = model.sigma.Kbar();
  b.alpha0 = model.sigma.alpha0();
  b.theta0 = theta0;
  b.inv_sigma = model.sigma.inv_sup_norm();
  b.T = T;
  b.C0 = c0_constant(model.H);
  b.zeta0 = sched.zeta(0.0);
  const double H = b.H, a0 = b.alpha0, s = b.inv_sigma;
  const double g = std::tgamma(1.5 - H);
  b.prefactor = 3.0 / (g * g * std::pow(b.zeta0, 3));
  b.denominator = b.K > 0.0 ? std::pow(-std::expm1(-2.0 * b.K * T / 3.0), 3) : 1.0;
  b.majorant_available = b.K > 0.0;
  b.kernel_normalization = kh_variance_factor(H);

  auto evaluate = [&](double zs) {
    ConstantsVariant v;
    v.zeta_sup = zs;
    BracketTerms& t = v.terms;
    const double w = 2.0 * (1.0 - H);
    const double q = 2.0 * (1.0 - H) * (3.0 - 2.0 * H) * theta0;
    t.boundary = s * s * zs / w;
    t.weight_gap = std::pow(b.C0 * (H - 0.5) * s, 2) * zs / w;
    t.schedule = std::pow((2.0 - theta0) * s / (3.0 * (1.5 - H)), 2) / theta0 * T;
    t.sigma_holder = std::pow(b.Kbar * (H - 0.5), 2) * zs /
                     (2.0 * (a0 - H + 1.0) * std::pow(a0 - H + 0.5, 2)) * std::pow(T, 2.0 * a0);
    t.drift = std::pow(b.K * s * zs, 2) / q * T;
    t.damping = s * s / q * T;
    const double scale = b.prefactor * b.denominator;
    v.C = scale * (t.boundary + t.weight_gap);
    v.C1 = scale * (t.schedule + t.drift + t.damping) / T;
    v.C2 = scale * t.sigma_holder / std::pow(T, 2.0 * a0);
    v.rate = b.prefactor * t.sum() * std::pow(T, 2.0 * (1.0 - H));
    return v;
  };
  b.exact = evaluate(b.zeta0);
  b.majorant = b.majorant_available ? evaluate(sched.zeta_majorant()) : b.exact;
  return b;
}

MeanEstimate mean_estimate(const std::vector<double>& samples) {
  const double n = static_cast<double>(samples.size());
  if (samples.empty()) return {};
  double m = 0.0;
  for (double v : samples) m += v;
  m /= n;
  if (samples.size() < 2) return {m, 0.0};
  double s2 = 0.0;
  for (double v : samples) s2 += (v - m) * (v - m);
  return {m, std::sqrt(s2 / (n - 1.0) / n)};
}

std::vector<CoupledSample> coupled_ensemble(const ModelSpec& model, const VectorXd& x, const VectorXd& y,
                                            const CouplingSchedule& schedule, const TimeGrid& grid,
                                            const std::vector<std::size_t>& probe_nodes, std::size_t n_paths,
                                            const RngSeed& seed) {
  for (std::size_t p : probe_nodes)
    if (p >= grid.size()) throw InvalidInputError("probe node outside the grid");
  // Build the shared operators once before fanning out.
  kh_step_matrix(grid, model.H);
  std::vector<CoupledSample> out(n_paths);
  parallel_for(n_paths, [&](std::size_t i) {
    const FbmPath noise = sample_volterra(grid, model.H, model.d, seed.with_stream(i));
    const CouplingTrace trace = solve_coupled(model, x, y, noise, schedule);
    const DensityTrace dens = log_density(trace, shift_kh_inverse(trace));
    CoupledSample& s = out[i];
    s.terminal_log_density = dens.terminal_log_density();
    for (std::size_t p : probe_nodes) s.log_density_at.push_back(dens.log_density(static_cast<Index>(p)));
    s.terminal_state = trace.x_path.states.row(trace.x_path.states.rows() - 1).transpose();
    s.half_v_energy = dens.quadratic_variation(dens.quadratic_variation.size() - 1);
  });
  return out;
}

MartingaleReport martingale_diagnostic(const ModelSpec& model, const VectorXd& x, const VectorXd& y,
                                       const CouplingSchedule& schedule, const TimeGrid& grid,
                                       const std::vector<double>& probe_times, std::size_t n_paths,
                                       const RngSeed& seed) {
  std::vector<std::size_t> nodes;
  for (double t : probe_times) nodes.push_back(grid.nearest_index(t));
  const auto samples = coupled_ensemble(model, x, y, schedule, grid, nodes, n_paths, seed);
  MartingaleReport rep;
  rep.pass = true;
  for (std::size_t p = 0; p < nodes.size(); ++p) {
    std::vector<double> r(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) r[i] = std::exp(samples[i].log_density_at[p]);
    const MeanEstimate m = mean_estimate(r);
    rep.times.push_back(grid[nodes[p]]);
    rep.mean_R.push_back(m);
    if (std::abs(m.mean - 1.0) > 3.0 * m.se) rep.pass = false;
  }
  return rep;
}

EntropyReport entropy_diagnostic(const ModelSpec& model, const VectorXd& x, const VectorXd& y,
                                 const CouplingSchedule& schedule, const TimeGrid& grid, std::size_t n_paths,
                                 const RngSeed& seed) {
  const auto samples = coupled_ensemble(model, x, y, schedule, grid, {}, n_paths, seed);
  std::vector<double> rl(n_paths);
  for (std::size_t i = 0; i < n_paths; ++i) {
    const double l = samples[i].terminal_log_density;
    rl[i] = std::exp(l) * l;
  }
  EntropyReport rep;
  rep.r_log_r = mean_estimate(rl);
  rep.bound = constants_bundle(model, schedule.theta0(), schedule.T()).bound(x, y);
  rep.margin = rep.bound - rep.r_log_r.mean;
  rep.pass = rep.r_log_r.mean + 3.0 * rep.r_log_r.se <= rep.bound;
  return rep;
}

}  // namespace fhl
