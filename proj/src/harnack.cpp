#include "fhl/harnack.hpp"

#include <algorithm>
#include <cmath>

#include "fhl/errors.hpp"

namespace fhl {

using Eigen::Index;
using Eigen::VectorXd;

TestFunction TestFunction::constant(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw InvalidInputError("constant test function needs c > 0");
  TestFunction f;
  f.family_ = Family::kConstant;
  f.a_ = c;
  f.floor_ = f.ceiling_ = c;
  return f;
}

TestFunction TestFunction::bump(double a, VectorXd z0, double s) {
  if (!(a > 0.0) || !std::isfinite(a)) throw InvalidInputError("bump offset a must be positive");
  if (!(s > 0.0) || !std::isfinite(s)) throw InvalidInputError("bump width s must be positive");
  if (z0.size() < 1 || !z0.allFinite()) throw InvalidInputError("bump centre must be a finite vector");
  TestFunction f;
  f.family_ = Family::kBump;
  f.a_ = a;
  f.s_ = s;
  f.vec_ = std::move(z0);
  f.floor_ = a;
  f.ceiling_ = a + 1.0;
  return f;
}

TestFunction TestFunction::clipped_exp(VectorXd w, double lo, double hi) {
  if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi)) {
    throw InvalidInputError("clipped exponential needs 0 < lo < hi < inf");
  }
  if (w.size() < 1 || !w.allFinite()) throw InvalidInputError("exponent direction must be a finite vector");
  TestFunction f;
  f.family_ = Family::kClippedExp;
  f.vec_ = std::move(w);
  f.floor_ = lo;
  f.ceiling_ = hi;
  return f;
}

double TestFunction::operator()(const VectorXd& z) const {
  switch (family_) {
    case Family::kConstant:
      return a_;
    case Family::kBump:
      if (z.size() != vec_.size()) throw InvalidInputError("test function dimension mismatch");
      return a_ + std::exp(-(z - vec_).squaredNorm() / (s_ * s_));
    case Family::kClippedExp: {
      if (z.size() != vec_.size()) throw InvalidInputError("test function dimension mismatch");
      // Clamp the exponent first so huge states cannot overflow.
      const double e = std::clamp(vec_.dot(z), std::log(floor_), std::log(ceiling_));
      return std::clamp(std::exp(e), floor_, ceiling_);
    }
  }
  return a_;
}

std::string TestFunction::family_name() const {
  switch (family_) {
    case Family::kConstant:
      return "constant";
    case Family::kBump:
      return "bump";
    case Family::kClippedExp:
      return "clipped_exp";
  }
  return "constant";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kPass:
      return "pass";
    case Verdict::kFail:
      return "fail";
    case Verdict::kInconclusive:
      return "inconclusive";
  }
  return "fail";
}

Verdict decide(double margin, double se) {
  if (margin >= 0.0) return Verdict::kPass;
  if (margin < -3.0 * se) return Verdict::kFail;
  return Verdict::kInconclusive;
}

namespace {

void check_dims(const TestFunction& f, const ModelSpec& model) {
  if (f.dim() != 0 && f.dim() != model.d) throw InvalidInputError("test function dimension differs from the model");
}

void check_point(const VectorXd& x, const ModelSpec& model) {
  if (static_cast<std::size_t>(x.size()) != model.d) throw InvalidInputError("starting point has the wrong dimension");
}

template <class F>
MeanEstimate map_mean(const std::vector<VectorXd>& states, F&& g) {
  std::vector<double> v(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) v[i] = g(states[i]);
  return mean_estimate(v);
}

}  // namespace

std::vector<VectorXd> terminal_ensemble(const VectorXd& x, const ModelSpec& model, const TimeGrid& grid,
                                        std::size_t n_paths, const RngSeed& seed, NoiseRoute route) {
  check_point(x, model);
  std::vector<VectorXd> out(n_paths);
  parallel_for(n_paths, [&](std::size_t i) {
    const FbmPath noise = sample_noise(route, grid, model.H, model.d, seed.with_stream(i));
    const StatePath p = solve(model, x, noise);
    out[i] = p.states.row(p.states.rows() - 1).transpose();
  });
  return out;
}

MeanEstimate estimate_pt(const TestFunction& f, const VectorXd& x, const ModelSpec& model, const TimeGrid& grid,
                         std::size_t n_paths, const RngSeed& seed, NoiseRoute route) {
  check_dims(f, model);
  if (f.family() == TestFunction::Family::kConstant) return {f.a(), 0.0};
  return map_mean(terminal_ensemble(x, model, grid, n_paths, seed, route), f);
}

HarnackReport log_harnack_check(const TestFunction& f, const VectorXd& x, const VectorXd& y, const ModelSpec& model,
                                double theta0, const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed) {
  check_dims(f, model);
  check_point(y, model);
  if (!(f.floor() > 0.0)) throw InvalidInputError("log-Harnack needs a strictly positive test function");
  HarnackReport r;
  r.kind = "log";
  r.n_paths = n_paths;
  r.seed_lhs = derive_seed(seed, seed_label("harnack-lhs"));
  r.seed_rhs = derive_seed(seed, seed_label("harnack-rhs"));
  r.bound = constants_bundle(model, theta0, model.T).bound(x, y);

  if (f.family() == TestFunction::Family::kConstant) {
    r.lhs = {std::log(f.a()), 0.0};
    r.rhs = {std::log(f.a()), 0.0};
  } else {
    r.lhs = map_mean(terminal_ensemble(y, model, grid, n_paths, {r.seed_lhs, 0}),
                     [&](const VectorXd& z) { return std::log(f(z)); });
    const MeanEstimate m = map_mean(terminal_ensemble(x, model, grid, n_paths, {r.seed_rhs, 0}), f);
    r.rhs = {std::log(m.mean), m.se / m.mean};
  }
  r.margin = r.rhs.mean + r.bound - r.lhs.mean;
  r.ratio = std::exp(-r.margin);
  r.combined_se = std::hypot(r.lhs.se, r.rhs.se);
  r.decision = decide(r.margin, r.combined_se);
  return r;
}

HarnackReport power_harnack_check(double p, const TestFunction& f, const VectorXd& x, const VectorXd& y,
                                  const ModelSpec& model, double theta0, const TimeGrid& grid, std::size_t n_paths,
                                  std::uint64_t seed) {
  if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("power-Harnack needs p > 1");
  check_dims(f, model);
  check_point(y, model);
  HarnackReport r;
  r.kind = "power";
  r.p = p;
  r.n_paths = n_paths;
  r.seed_lhs = derive_seed(seed, seed_label("harnack-lhs"));
  r.seed_rhs = derive_seed(seed, seed_label("harnack-rhs"));
  r.bound = constants_bundle(model, theta0, model.T).bound(x, y);

  MeanEstimate m, mp;
  if (f.family() == TestFunction::Family::kConstant) {
    m = {f.a(), 0.0};
    mp = {std::pow(f.a(), p), 0.0};
  } else {
    m = map_mean(terminal_ensemble(y, model, grid, n_paths, {r.seed_lhs, 0}), f);
    mp = map_mean(terminal_ensemble(x, model, grid, n_paths, {r.seed_rhs, 0}),
                  [&](const VectorXd& z) { return std::pow(f(z), p); });
  }
  // Delta method for the p-th power of a mean.
  r.lhs = {std::pow(m.mean, p), p * std::pow(m.mean, p - 1.0) * m.se};
  r.rhs = mp;
  const double factor = std::exp(p / (p - 1.0) * r.bound);
  r.margin = r.rhs.mean * factor - r.lhs.mean;
  r.ratio = r.lhs.mean / (r.rhs.mean * factor);
  r.combined_se = std::hypot(r.lhs.se, r.rhs.se * factor);
  r.decision = decide(r.margin, r.combined_se);
  return r;
}

ChangeOfMeasureReport change_of_measure_check(const TestFunction& f, const VectorXd& x, const VectorXd& y,
                                              const ModelSpec& model, double theta0, const TimeGrid& grid,
                                              std::size_t n_paths, std::uint64_t seed) {
  check_dims(f, model);
  check_point(x, model);
  check_point(y, model);
  const CouplingSchedule schedule(model.drift.K(), theta0, model.T);
  const auto samples = coupled_ensemble(model, x, y, schedule, grid, {}, n_paths,
                                        {derive_seed(seed, seed_label("com-coupled")), 0});
  std::vector<double> weighted(n_paths), density(n_paths);
  for (std::size_t i = 0; i < n_paths; ++i) {
    density[i] = std::exp(samples[i].terminal_log_density);
    weighted[i] = density[i] * f(samples[i].terminal_state);
  }
  ChangeOfMeasureReport r;
  r.n_paths = n_paths;
  r.weighted = mean_estimate(weighted);
  r.density = mean_estimate(density);
  r.plain = estimate_pt(f, y, model, grid, n_paths, {derive_seed(seed, seed_label("com-plain")), 0},
                        NoiseRoute::kVolterra);
  r.difference = r.weighted.mean - r.plain.mean;
  r.combined_se = std::hypot(r.weighted.se, r.plain.se);
  r.identity_pass = std::abs(r.difference) <= 3.0 * r.combined_se;
  r.martingale_pass = std::abs(r.density.mean - 1.0) <= 3.0 * r.density.se;
  r.pass = r.identity_pass && r.martingale_pass;
  return r;
}

FellerReport feller_diagnostic(const TestFunction& f, const VectorXd& x, const std::vector<double>& radii,
                               const ModelSpec& model, double theta0, const TimeGrid& grid, std::size_t n_paths,
                               std::uint64_t seed) {
  check_dims(f, model);
  check_point(x, model);
  for (double r : radii)
    if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidInputError("radii must be finite and non-negative");
  const std::size_t n_dir = 2 * model.d;
  const std::size_t n_probe = radii.size() * n_dir;

  // diffs[i][k]: f(X^{x + probe_k}) - f(X^x) on the i-th noise path.
  std::vector<std::vector<double>> diffs(n_paths, std::vector<double>(n_probe));
  const RngSeed base{derive_seed(seed, seed_label("feller")), 0};
  parallel_for(n_paths, [&](std::size_t i) {
    const FbmPath noise = sample_noise(NoiseRoute::kDirect, grid, model.H, model.d, base.with_stream(i));
    const StatePath px = solve(model, x, noise);
    const double fx = f(px.states.row(px.states.rows() - 1).transpose());
    for (std::size_t r = 0; r < radii.size(); ++r) {
      for (std::size_t k = 0; k < n_dir; ++k) {
        VectorXd y = x;
        y(static_cast<Index>(k / 2)) += (k % 2 ? -1.0 : 1.0) * radii[r];
        const StatePath py = solve(model, y, noise);
        diffs[i][r * n_dir + k] = f(py.states.row(py.states.rows() - 1).transpose()) - fx;
      }
    }
  });

  const ConstantsBundle bundle = constants_bundle(model, theta0, model.T);
  FellerReport rep;
  rep.n_paths = n_paths;
  for (std::size_t r = 0; r < radii.size(); ++r) {
    FellerPoint pt;
    pt.radius = radii[r];
    pt.modulus = f.oscillation() * std::sqrt(bundle.bound(radii[r] * radii[r]) / 2.0);
    for (std::size_t k = 0; k < n_dir; ++k) {
      std::vector<double> col(n_paths);
      for (std::size_t i = 0; i < n_paths; ++i) col[i] = diffs[i][r * n_dir + k];
      const MeanEstimate m = mean_estimate(col);
      if (k == 0 || std::abs(m.mean) > pt.sup_difference) {
        pt.sup_difference = std::abs(m.mean);
        pt.se = m.se;
      }
    }
    if (pt.sup_difference > pt.modulus + 3.0 * pt.se) rep.within_modulus = false;
    rep.points.push_back(pt);
  }
  std::vector<FellerPoint> sorted = rep.points;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.radius < b.radius; });
  for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
    const double se = std::hypot(sorted[k].se, sorted[k + 1].se);
    if (sorted[k].sup_difference > sorted[k + 1].sup_difference + 3.0 * se) rep.monotone = false;
  }
  return rep;
}

}  // namespace fhl
