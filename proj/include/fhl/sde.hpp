#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fhl/fbm.hpp"
#include "fhl/grid.hpp"
#include "fhl/parallel.hpp"

namespace fhl {

enum class DriftFamily { kLinear, kClippedCubic, kSinusoidal };

/// Drift from a closed registry of families with analytically known constants:
///   linear        b(x) = A x + c
///   sinusoidal    b(x) = A sin(x) + c          (sin componentwise)
///   clipped cubic b_i(x) = x_i - x_i^3 for |x_i| <= rho, continued linearly beyond.
/// K is a Lipschitz constant, L a one-sided constant with <x, b(x) - c> <= L |x|^2;
/// the offset c enters through `offset_bound` = |c|.
class DriftSpec {
 public:
  static DriftSpec linear(Eigen::MatrixXd A, Eigen::VectorXd c, std::optional<double> K = {},
                          std::optional<double> L = {});
  static DriftSpec sinusoidal(Eigen::MatrixXd A, Eigen::VectorXd c, std::optional<double> K = {},
                              std::optional<double> L = {});
  static DriftSpec clipped_cubic(std::size_t d, double rho, std::optional<double> K = {},
                                 std::optional<double> L = {});

  Eigen::VectorXd operator()(double t, const Eigen::VectorXd& x) const;

  DriftFamily family() const { return family_; }
  std::string family_name() const;
  std::size_t dim() const { return dim_; }
  double K() const { return K_; }
  double L() const { return L_; }
  double analytic_K() const { return K_analytic_; }
  double analytic_L() const { return L_analytic_; }
  double offset_bound() const { return c_.size() ? c_.norm() : 0.0; }
  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::VectorXd& c() const { return c_; }
  double rho() const { return rho_; }
  bool is_zero() const;

 private:
  DriftSpec() = default;
  void finish(std::optional<double> K, std::optional<double> L);

  DriftFamily family_ = DriftFamily::kLinear;
  std::size_t dim_ = 1;
  Eigen::MatrixXd A_;
  Eigen::VectorXd c_;
  double rho_ = 0.0;
  double K_ = 0.0, L_ = 0.0, K_analytic_ = 0.0, L_analytic_ = 0.0;
};

/// One diagonal entry of sigma(t).
struct SigmaEntry {
  enum class Kind { kConstant, kAffine, kSinusoidal } kind = Kind::kConstant;
  double a = 1.0;      // constant / intercept / mean level
  double b = 0.0;      // slope or amplitude
  double omega = 0.0;  // angular frequency (sinusoidal)

  double operator()(double t) const;
  double derivative(double t) const;
  /// Exact min and max over [0, T].
  std::pair<double, double> range(double T) const;
  /// sup |sigma'| over [0, T] (upper bound for the sinusoidal case).
  double max_slope(double T) const;
};

/// Diagonal, invertible sigma(t). alpha0 is the Hoelder order of sigma^{-1} and
/// Kbar its Hoelder constant on [0, T].
class SigmaSpec {
 public:
  SigmaSpec(std::vector<SigmaEntry> entries, double T, double alpha0 = 1.0,
            std::optional<double> Kbar = {});
  static SigmaSpec identity(std::size_t d, double T);
  static SigmaSpec constant(std::size_t d, double value, double T);

  Eigen::VectorXd diag(double t) const;
  std::size_t dim() const { return entries_.size(); }
  const std::vector<SigmaEntry>& entries() const { return entries_; }
  double alpha0() const { return alpha0_; }
  double Kbar() const { return Kbar_; }
  double analytic_Kbar() const { return Kbar_analytic_; }
  double sup_norm() const { return sup_; }
  double inv_sup_norm() const { return inv_sup_; }
  bool is_constant() const;

 private:
  std::vector<SigmaEntry> entries_;
  double T_, alpha0_, Kbar_ = 0.0, Kbar_analytic_ = 0.0, sup_ = 0.0, inv_sup_ = 0.0;
};

/// The additive-noise equation dX = b(t, X) dt + sigma(t) dB^H.
struct ModelSpec {
  double H;
  std::size_t d;
  double T;
  DriftSpec drift;
  SigmaSpec sigma;

  ModelSpec(double H, double T, DriftSpec drift, SigmaSpec sigma);
};

struct StatePath {
  TimeGrid grid;
  Eigen::MatrixXd states;  // (n+1) x d
};

/// Explicit Euler with exact noise increments.
StatePath solve(const ModelSpec& model, const Eigen::VectorXd& x0, const FbmPath& noise);

/// Which generator the ensemble drivers use for noise.
enum class NoiseRoute { kDirect, kVolterra };

FbmPath sample_noise(NoiseRoute route, const TimeGrid& grid, double H, std::size_t d, const RngSeed& seed);

struct MomentPoint {
  Eigen::VectorXd x;
  double mean_sq;   // estimate of E|X_T^x|^2
  double se;
  double ratio;     // mean_sq / (e^{2LT} (1 + |x|^2))
};

struct MomentReport {
  std::vector<MomentPoint> points;
  double max_ratio;  // empirical M
  std::size_t n_paths;
};

MomentReport moment_diagnostic(const ModelSpec& model, const std::vector<Eigen::VectorXd>& xs,
                               const TimeGrid& grid, std::size_t n_paths, const RngSeed& seed,
                               NoiseRoute route = NoiseRoute::kDirect);

/// Variance of the stochastic convolution sigma * integral_0^T e^{-lambda (T-s)} dB^H_s,
/// from the second-moment kernel H(2H-1)|s - r|^{2H-2}. lambda may be any real.
double linear_noise_variance(double lambda, double sigma, double H, double T);

}  // namespace fhl
