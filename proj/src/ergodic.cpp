#include "fhl/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>

#include "fhl/errors.hpp"
#include "fhl/girsanov.hpp"

namespace fhl {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

EmpiricalMeasure::EmpiricalMeasure(MatrixXd s) : samples(std::move(s)) {
  if (samples.rows() < 1 || samples.cols() < 1) throw InvalidInputError("empirical measure must be non-empty");
  if (!samples.allFinite()) throw InvalidInputError("empirical measure has non-finite entries");
}

VectorXd EmpiricalMeasure::mean() const { return samples.colwise().mean().transpose(); }

double EmpiricalMeasure::variance(std::size_t i) const {
  const Index n = samples.rows();
  if (n < 2) return 0.0;
  const auto col = samples.col(static_cast<Index>(i));
  const double m = col.mean();
  return (col.array() - m).square().sum() / static_cast<double>(n - 1);
}

double EmpiricalMeasure::second_moment() const { return samples.rowwise().squaredNorm().mean(); }

VectorXd chain_step(const VectorXd& x, const ModelSpec& model, const TimeGrid& grid, const RngSeed& seed,
                    NoiseRoute route) {
  const FbmPath noise = sample_noise(route, grid, model.H, model.d, seed);
  const StatePath p = solve(model, x, noise);
  return p.states.row(p.states.rows() - 1).transpose();
}

EmpiricalMeasure krylov_bogoliubov(const ChainConfig& cfg, const ModelSpec& model, const TimeGrid& grid,
                                   NoiseRoute route) {
  if (cfg.n_steps < 1 || cfg.n_chains < 1) throw InvalidInputError("chain counts must be positive");
  if (static_cast<std::size_t>(cfg.x0.size()) != model.d) throw InvalidInputError("x0 has the wrong dimension");
  const Index d = static_cast<Index>(model.d);
  MatrixXd pooled(static_cast<Index>(cfg.n_steps * cfg.n_chains), d);
  parallel_for(cfg.n_chains, [&](std::size_t c) {
    const RngSeed chain{derive_seed(cfg.seed.master, c), 0};
    VectorXd x = cfg.x0;
    for (std::size_t k = 0; k < cfg.n_steps; ++k) {
      x = chain_step(x, model, grid, chain.with_stream(k), route);
      pooled.row(static_cast<Index>(c * cfg.n_steps + k)) = x.transpose();
    }
  });
  return EmpiricalMeasure(std::move(pooled));
}

double w2_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.dim() != 1 || nu.dim() != 1) throw InvalidInputError("w2_1d needs one-dimensional measures");
  std::vector<double> a(mu.samples.data(), mu.samples.data() + mu.size());
  std::vector<double> b(nu.samples.data(), nu.samples.data() + nu.size());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Quantile breakpoints i/n and j/m, in units of 1/(n m).
  const std::uint64_t n = a.size(), m = b.size();
  std::uint64_t i = 0, j = 0, pos = 0;
  double acc = 0.0;
  while (i < n && j < m) {
    const std::uint64_t next = std::min((i + 1) * m, (j + 1) * n);
    const double diff = a[i] - b[j];
    acc += static_cast<double>(next - pos) * diff * diff;
    pos = next;
    if ((i + 1) * m == next) ++i;
    if ((j + 1) * n == next) ++j;
  }
  return std::sqrt(acc / static_cast<double>(n * m));
}

namespace {

// Minimum-cost perfect matching on a square cost matrix (Hungarian method with
// potentials), O(n^3).
double assignment_cost(const MatrixXd& cost) {
  const Index n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Index> p(n + 1, 0), way(n + 1, 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const Index i0 = p[j0];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (Index j = 1; j <= n; ++j) total += cost(p[j] - 1, j - 1);
  return total;
}

}  // namespace

double w2_exact_small(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.dim() != nu.dim()) throw InvalidInputError("measures live in different dimensions");
  if (mu.size() > kW2ExactMax || nu.size() > kW2ExactMax) {
    throw InvalidInputError("w2_exact_small accepts at most " + std::to_string(kW2ExactMax) +
                            " points per measure; subsample first");
  }
  if (mu.size() != nu.size()) throw InvalidInputError("w2_exact_small needs equal sample counts");
  const Index n = static_cast<Index>(mu.size());
  MatrixXd cost(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) cost(i, j) = (mu.samples.row(i) - nu.samples.row(j)).squaredNorm();
  return std::sqrt(std::max(0.0, assignment_cost(cost)) / static_cast<double>(n));
}

namespace {

double w2_auto(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  return a.dim() == 1 ? w2_1d(a, b) : w2_exact_small(a, b);
}

MatrixXd take_rows(const MatrixXd& m, const std::vector<Index>& idx) {
  MatrixXd out(static_cast<Index>(idx.size()), m.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Index>(k)) = m.row(idx[k]);
  return out;
}

}  // namespace

InvarianceReport invariance_check(const EmpiricalMeasure& mu_hat, const ModelSpec& model, const TimeGrid& grid,
                                  const RngSeed& seed, std::size_t n_bootstrap, NoiseRoute route) {
  if (mu_hat.dim() != model.d) throw InvalidInputError("measure dimension differs from the model");
  if (mu_hat.size() < 4) throw InvalidInputError("invariance check needs at least 4 samples");
  // Evenly spaced subsample in d > 1 so the assignment solver stays small.
  MatrixXd base = mu_hat.samples;
  if (model.d > 1 && mu_hat.size() > kW2ExactMax) {
    std::vector<Index> idx(kW2ExactMax);
    for (std::size_t k = 0; k < kW2ExactMax; ++k) idx[k] = static_cast<Index>(k * mu_hat.size() / kW2ExactMax);
    base = take_rows(base, idx);
  }
  const Index n = base.rows();
  MatrixXd pushed(n, base.cols());
  const RngSeed step_seed{derive_seed(seed.master, seed_label("invariance-step")), 0};
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    const Index r = static_cast<Index>(i);
    pushed.row(r) = chain_step(base.row(r).transpose(), model, grid, step_seed.with_stream(i), route).transpose();
  });

  InvarianceReport rep;
  rep.n_samples = static_cast<std::size_t>(n);
  rep.n_bootstrap = n_bootstrap;
  const EmpiricalMeasure before(base);
  rep.w2 = w2_auto(before, EmpiricalMeasure(pushed));

  std::mt19937_64 eng = make_engine({derive_seed(seed.master, seed_label("invariance-bootstrap")), 0});
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  const std::size_t half = static_cast<std::size_t>(n) / 2;
  double floor_sum = 0.0;
  for (std::size_t b = 0; b < n_bootstrap; ++b) {
    std::shuffle(perm.begin(), perm.end(), eng);
    const std::vector<Index> lo(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(half));
    const std::vector<Index> hi(perm.begin() + static_cast<std::ptrdiff_t>(half),
                                perm.begin() + static_cast<std::ptrdiff_t>(2 * half));
    floor_sum += w2_auto(EmpiricalMeasure(take_rows(base, lo)), EmpiricalMeasure(take_rows(base, hi)));
  }
  rep.noise_floor = n_bootstrap ? floor_sum / static_cast<double>(n_bootstrap) : 0.0;
  if (rep.w2 == 0.0)
    rep.ratio = 0.0;
  else
    rep.ratio = rep.noise_floor > 0.0 ? rep.w2 / rep.noise_floor : std::numeric_limits<double>::infinity();
  rep.pass = rep.ratio <= 2.0;
  return rep;
}

namespace {

struct ScalarLinear {
  double lambda, sigma;
};

ScalarLinear scalar_linear(const ModelSpec& model) {
  if (model.d != 1 || model.drift.family() != DriftFamily::kLinear || model.drift.offset_bound() != 0.0 ||
      !model.sigma.is_constant()) {
    throw UnsupportedParameterError(
        "closed forms need the scalar model dX = -lambda X dt + s dB^H (linear drift, no offset, constant sigma)");
  }
  const double lambda = -model.drift.A()(0, 0);
  if (!(lambda > 0.0)) throw UnsupportedParameterError("the scalar linear chain is stationary only for lambda > 0");
  return {lambda, model.sigma.diag(0.0)(0)};
}

}  // namespace

double invariant_variance(const ModelSpec& model) {
  const ScalarLinear s = scalar_linear(model);
  return linear_noise_variance(s.lambda, s.sigma, model.H, model.T) / -std::expm1(-2.0 * s.lambda * model.T);
}

EntropyCostReport entropy_cost_check(const ModelSpec& model, double m, double theta0, const TimeGrid& grid,
                                     std::size_t n_w2_samples, std::size_t n_mc_samples, std::uint64_t seed) {
  if (!std::isfinite(m)) throw InvalidInputError("tilt must be finite");
  const ScalarLinear s = scalar_linear(model);
  EntropyCostReport r;
  r.m = m;
  r.lambda = s.lambda;
  r.invariant_variance = invariant_variance(model);
  const double vbar = r.invariant_variance;
  const double a = std::exp(-s.lambda * model.T) * m;  // mean of (f mu) P_T
  r.lhs = a * a / (2.0 * vbar);
  r.cost_rate = constants_bundle(model, theta0, model.T).bound(1.0);
  r.rhs = r.cost_rate * m * m;
  r.pass = r.lhs <= r.rhs;

  r.n_samples = n_w2_samples;
  if (n_w2_samples > 0) {
    std::mt19937_64 e0 = make_engine({derive_seed(seed, seed_label("entropy-cost-mu")), 0});
    std::mt19937_64 e1 = make_engine({derive_seed(seed, seed_label("entropy-cost-fmu")), 0});
    std::normal_distribution<double> z;
    const double sd = std::sqrt(vbar);
    MatrixXd s0(static_cast<Index>(n_w2_samples), 1), s1(static_cast<Index>(n_w2_samples), 1);
    for (Index i = 0; i < s0.rows(); ++i) s0(i, 0) = sd * z(e0);
    for (Index i = 0; i < s1.rows(); ++i) s1(i, 0) = m + sd * z(e1);
    r.w2 = w2_1d(EmpiricalMeasure(s0), EmpiricalMeasure(s1));
    if (m != 0.0) {
      r.w2_rel_error = std::abs(r.w2 - std::abs(m)) / std::abs(m);
      r.w2_pass = r.w2_rel_error <= 0.05;
    }
  }

  if (n_mc_samples > 1) {
    // log of the density of (f mu) P_T = N(a, vbar) against mu = N(0, vbar),
    // averaged over states simulated from (f mu) P_T.
    const RngSeed start{derive_seed(seed, seed_label("entropy-cost-start")), 0};
    const RngSeed step{derive_seed(seed, seed_label("entropy-cost-step")), 0};
    std::vector<double> logr(n_mc_samples);
    const double sd = std::sqrt(vbar);
    parallel_for(n_mc_samples, [&](std::size_t i) {
      std::mt19937_64 e = make_engine(start.with_stream(i));
      std::normal_distribution<double> z;
      VectorXd x0(1);
      x0(0) = m + sd * z(e);
      const double x = chain_step(x0, model, grid, step.with_stream(i))(0);
      logr[i] = (a * x - 0.5 * a * a) / vbar;
    });
    r.lhs_mc = mean_estimate(logr);
    r.lhs_mc_pass = std::abs(r.lhs_mc.mean - r.lhs) <= 3.0 * r.lhs_mc.se;
  }
  return r;
}

void write_csv(std::ostream& out, const EmpiricalMeasure& mu) {
  for (std::size_t i = 0; i < mu.dim(); ++i) out << (i ? "," : "") << 'z' << i + 1;
  out << '\n' << std::setprecision(17);
  for (Index r = 0; r < mu.samples.rows(); ++r) {
    for (Index c = 0; c < mu.samples.cols(); ++c) out << (c ? "," : "") << mu.samples(r, c);
    out << '\n';
  }
}

}  // namespace fhl
