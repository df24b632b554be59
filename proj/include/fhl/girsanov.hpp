#pragma once

#include <vector>

#include "fhl/coupling.hpp"
#include "fhl/sde.hpp"

namespace fhl {

/// Girsanov weight along a coupling trace. v is the Cameron-Martin shift of the
/// underlying Wiener process; sums run over cells 0..n-1 with left-point v, so
/// the entry at node n is log R(T-).
struct DensityTrace {
  TimeGrid grid;
  Eigen::MatrixXd v;                    // (n+1) x d; row n is not used
  Eigen::VectorXd stochastic_integral;  // sum_{j<k} <v_j, dW_j>
  Eigen::VectorXd quadratic_variation;  // (1/2) sum_{j<k} |v_j|^2 dt_j
  Eigen::VectorXd log_density;          // -(stochastic_integral + quadratic_variation)
  bool node0_singular = false;

  double terminal_log_density() const { return log_density(log_density.size() - 1); }
  double terminal_density() const;
};

/// v = K_H^{-1}(integral of u) / kappa_H through the three-term expansion.
DensityTrace shift_kh_inverse(const CouplingTrace& trace);

/// Fills the running stochastic integral, quadratic variation and log R.
DensityTrace log_density(const CouplingTrace& trace, DensityTrace density);

/// The six bracket terms of the entropy bound, each including its printed power of T.
struct BracketTerms {
  double boundary;       // |s^-1|^2 |zeta| / (2(1-H))
  double weight_gap;     // [C0 (H-1/2) |s^-1|]^2 |zeta| / (2(1-H))
  double schedule;       // [(2-theta0)|s^-1| / (3(3/2-H))]^2 T / theta0
  double sigma_holder;   // [Kbar (H-1/2)]^2 |zeta| T^{2 alpha0} / (2(alpha0-H+1)(alpha0-H+1/2)^2)
  double drift;          // (K |s^-1| |zeta|)^2 T / (2(1-H)(3-2H) theta0)
  double damping;        // |s^-1|^2 T / (2(1-H)(3-2H) theta0)

  double sum() const { return boundary + weight_gap + schedule + sigma_holder + drift + damping; }
};

struct ConstantsVariant {
  double zeta_sup = 0.0;  // value used for |zeta|_inf
  BracketTerms terms{};
  double C = 0.0, C1 = 0.0, C2 = 0.0;  // C, C', C''
  /// Bound of E[R log R] exactly as assembled from the bracket terms, per unit |x-y|^2.
  double rate = 0.0;
};

struct ConstantsBundle {
  double H, K, Kbar, alpha0, theta0, inv_sigma, T;
  double C0;
  double zeta0;
  double prefactor;      // 3 / (Gamma(3/2-H)^2 zeta^3(0))
  double denominator;    // (1 - e^{-2KT/3})^3, or 1 when K = 0
  ConstantsVariant exact;     // |zeta|_inf = zeta(0)
  ConstantsVariant majorant;  // |zeta|_inf <= (2-theta0)/(2K); headline
  bool majorant_available;    // false when K = 0 (then majorant == exact)
  /// Covariance factor of the unnormalized K_H kernel relative to R_H.
  double kernel_normalization;

  /// Printed bound (C + C'T + C''T^{2 alpha0}) T^{2(1-H)} / denominator |x-y|^2 (headline variant).
  double printed_bound(double dist2) const;
  /// Bound on E[R log R] for standard fBm: kernel_normalization * printed_bound.
  double bound(double dist2) const;
  double bound(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
};

ConstantsBundle constants_bundle(const ModelSpec& model, double theta0, double T);

struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;
};

/// Ensemble driver: runs coupled traces from (x, y) on `grid` and hands each
/// (trace, density) pair to `visit(i, ...)`. Path i uses stream i of `seed`.
struct CoupledSample {
  double terminal_log_density;
  std::vector<double> log_density_at;  // at requested probe nodes
  Eigen::VectorXd terminal_state;      // X_T (= Y_T)
  double half_v_energy;                // (1/2) sum |v|^2 dt
};

std::vector<CoupledSample> coupled_ensemble(const ModelSpec& model, const Eigen::VectorXd& x,
                                            const Eigen::VectorXd& y, const CouplingSchedule& schedule,
                                            const TimeGrid& grid, const std::vector<std::size_t>& probe_nodes,
                                            std::size_t n_paths, const RngSeed& seed);

struct MartingaleReport {
  std::vector<double> times;
  std::vector<MeanEstimate> mean_R;
  bool pass;  // |mean - 1| <= 3 SE at every probe
};

MartingaleReport martingale_diagnostic(const ModelSpec& model, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                       const CouplingSchedule& schedule, const TimeGrid& grid,
                                       const std::vector<double>& probe_times, std::size_t n_paths,
                                       const RngSeed& seed);

struct EntropyReport {
  MeanEstimate r_log_r;
  double bound;
  double margin;  // bound - estimate
  bool pass;      // estimate + 3 SE <= bound
};

EntropyReport entropy_diagnostic(const ModelSpec& model, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                 const CouplingSchedule& schedule, const TimeGrid& grid, std::size_t n_paths,
                                 const RngSeed& seed);

MeanEstimate mean_estimate(const std::vector<double>& samples);

}  // namespace fhl
