#pragma once

#include <cstdint>
#include <ostream>

#include "fhl/girsanov.hpp"
#include "fhl/sde.hpp"

namespace fhl {

/// Equal-weight point cloud, one sample per row.
struct EmpiricalMeasure {
  Eigen::MatrixXd samples;

  explicit EmpiricalMeasure(Eigen::MatrixXd s);
  std::size_t size() const { return static_cast<std::size_t>(samples.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(samples.cols()); }
  Eigen::VectorXd mean() const;
  /// Unbiased sample variance of component i.
  double variance(std::size_t i = 0) const;
  double second_moment() const;  // mean of |z|^2
};

struct ChainConfig {
  Eigen::VectorXd x0;
  std::size_t n_steps = 1;
  std::size_t n_chains = 1;
  RngSeed seed;
};

/// One transition of the discrete semigroup: X_T^x driven by fresh noise.
Eigen::VectorXd chain_step(const Eigen::VectorXd& x, const ModelSpec& model, const TimeGrid& grid,
                           const RngSeed& seed, NoiseRoute route = NoiseRoute::kDirect);

/// Pools the states at steps 1..n_steps of n_chains independent chains from x0.
/// Step k (0-based) of chain c uses stream k of master derive_seed(seed.master, c).
/// Rows are ordered chain-major.
EmpiricalMeasure krylov_bogoliubov(const ChainConfig& cfg, const ModelSpec& model, const TimeGrid& grid,
                                   NoiseRoute route = NoiseRoute::kDirect);

/// Exact W2 between one-dimensional empirical measures (any sample counts),
/// integrating the squared quantile difference over [0, 1].
double w2_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// Exact W2 by optimal assignment for equal-size clouds of at most 512 points.
double w2_exact_small(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

constexpr std::size_t kW2ExactMax = 512;

struct InvarianceReport {
  double w2 = 0.0;           // W2(mu_hat, mu_hat P_T)
  double noise_floor = 0.0;  // mean W2 between random halves of mu_hat
  double ratio = 0.0;        // w2 / noise_floor
  bool pass = false;         // ratio <= 2
  std::size_t n_samples = 0;
  std::size_t n_bootstrap = 0;
};

/// Pushes every sample one chain step forward and compares with the half-split
/// bootstrap noise floor. Clouds in d > 1 are subsampled to kW2ExactMax points.
InvarianceReport invariance_check(const EmpiricalMeasure& mu_hat, const ModelSpec& model, const TimeGrid& grid,
                                  const RngSeed& seed, std::size_t n_bootstrap = 20,
                                  NoiseRoute route = NoiseRoute::kDirect);

/// Stationary variance sigma^2 q / (1 - e^{-2 lambda T}) of the scalar linear chain.
double invariant_variance(const ModelSpec& model);

struct EntropyCostReport {
  double m = 0.0;
  double lambda = 0.0;
  double invariant_variance = 0.0;
  double lhs = 0.0;         // e^{-2 lambda T} m^2 / (2 vbar)
  double cost_rate = 0.0;   // c(T)
  double rhs = 0.0;         // c(T) m^2
  bool pass = false;        // lhs <= rhs
  double w2 = 0.0;          // sampled W2(N(0, vbar), N(m, vbar))
  double w2_rel_error = 0.0;
  bool w2_pass = true;      // |w2 - |m|| <= 5% |m| (not applicable at m = 0)
  MeanEstimate lhs_mc;      // relative entropy from simulated (f mu) P_T
  bool lhs_mc_pass = true;  // |lhs_mc - lhs| <= 3 SE
  std::size_t n_samples = 0;
};

/// Entropy-cost check for the scalar model dX = -lambda X dt + s dB^H with
/// lambda > 0. mu = N(0, vbar) and the tilted measure f mu = N(m, vbar).
EntropyCostReport entropy_cost_check(const ModelSpec& model, double m, double theta0, const TimeGrid& grid,
                                     std::size_t n_w2_samples, std::size_t n_mc_samples, std::uint64_t seed);

/// CSV with columns z_1..z_d.
void write_csv(std::ostream& out, const EmpiricalMeasure& mu);

}  // namespace fhl
