#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fhl/coupling.hpp"
#include "fhl/girsanov.hpp"
#include "fhl/sde.hpp"

namespace fhl {

/// Bounded, strictly positive test functions with analytic floor and ceiling.
///   constant     f(z) = c
///   bump         f(z) = a + exp(-|z - z0|^2 / s^2)
///   clipped exp  f(z) = clamp(exp(<w, z>), lo, hi)
class TestFunction {
 public:
  enum class Family { kConstant, kBump, kClippedExp };

  static TestFunction constant(double c);
  static TestFunction bump(double a, Eigen::VectorXd z0, double s);
  static TestFunction clipped_exp(Eigen::VectorXd w, double lo, double hi);

  double operator()(const Eigen::VectorXd& z) const;
  double floor() const { return floor_; }
  double ceiling() const { return ceiling_; }
  double oscillation() const { return ceiling_ - floor_; }
  Family family() const { return family_; }
  std::string family_name() const;
  /// Required state dimension, 0 when any dimension is accepted.
  std::size_t dim() const { return static_cast<std::size_t>(vec_.size()); }
  double a() const { return a_; }
  double s() const { return s_; }
  const Eigen::VectorXd& vec() const { return vec_; }

 private:
  TestFunction() = default;
  Family family_ = Family::kConstant;
  double a_ = 1.0, s_ = 1.0;  // constant / offset, width
  Eigen::VectorXd vec_;       // bump centre or exponent direction
  double floor_ = 1.0, ceiling_ = 1.0;
};

enum class Verdict { kPass, kFail, kInconclusive };
std::string to_string(Verdict v);

/// pass if margin >= 0, fail if margin < -3 se, inconclusive in between.
Verdict decide(double margin, double se);

/// Terminal states X_T^x of n_paths independent solves; path i uses stream i.
std::vector<Eigen::VectorXd> terminal_ensemble(const Eigen::VectorXd& x, const ModelSpec& model,
                                               const TimeGrid& grid, std::size_t n_paths, const RngSeed& seed,
                                               NoiseRoute route = NoiseRoute::kDirect);

/// Monte Carlo P_T f(x) with its standard error.
MeanEstimate estimate_pt(const TestFunction& f, const Eigen::VectorXd& x, const ModelSpec& model,
                         const TimeGrid& grid, std::size_t n_paths, const RngSeed& seed,
                         NoiseRoute route = NoiseRoute::kDirect);

struct HarnackReport {
  std::string kind;       // "log" or "power"
  double p = 0.0;         // power exponent (0 for the log case)
  MeanEstimate lhs;       // P_T log f(y)  or  (P_T f(y))^p
  MeanEstimate rhs;       // log P_T f(x)  or  P_T f^p(x)
  double bound = 0.0;     // B(T, x, y)
  double margin = 0.0;    // log: rhs + B - lhs; power: rhs e^{pB/(p-1)} - lhs
  double ratio = 0.0;     // power: lhs / (rhs e^{pB/(p-1)}); log: exp(lhs - rhs - B)
  double combined_se = 0.0;
  Verdict decision = Verdict::kPass;
  std::size_t n_paths = 0;
  std::uint64_t seed_lhs = 0, seed_rhs = 0;
};

/// P_T log f(y) <= log P_T f(x) + B(T, x, y), the two sides from independent seeds.
HarnackReport log_harnack_check(const TestFunction& f, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                const ModelSpec& model, double theta0, const TimeGrid& grid, std::size_t n_paths,
                                std::uint64_t seed);

/// (P_T f)^p(y) <= P_T f^p(x) exp[p/(p-1) B(T, x, y)].
HarnackReport power_harnack_check(double p, const TestFunction& f, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& y, const ModelSpec& model, double theta0,
                                  const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed);

struct ChangeOfMeasureReport {
  MeanEstimate weighted;  // E[R(T) f(X_T)] over coupled traces from (x, y)
  MeanEstimate plain;     // P_T f(y) from an independent plain ensemble
  MeanEstimate density;   // E R(T)
  double difference = 0.0;
  double combined_se = 0.0;
  bool identity_pass = false;
  bool martingale_pass = false;
  bool pass = false;
  std::size_t n_paths = 0;
};

/// `grid` should be refined towards T (the coupling drift blows up there).
ChangeOfMeasureReport change_of_measure_check(const TestFunction& f, const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& y, const ModelSpec& model, double theta0,
                                              const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed);

struct FellerPoint {
  double radius = 0.0;
  double sup_difference = 0.0;  // max over +-e_i of |P_T f(x + r e) - P_T f(x)|
  double se = 0.0;              // paired SE at the maximizing direction
  double modulus = 0.0;         // osc(f) sqrt(B / 2), from log-Harnack and Pinsker
};

struct FellerReport {
  std::vector<FellerPoint> points;  // in the order of the requested radii
  bool monotone = true;             // non-increasing as the radius shrinks, within 3 SE
  bool within_modulus = true;       // every difference below modulus + 3 SE
  std::size_t n_paths = 0;
};

/// Differences of P_T f along the coordinate directions, all starting points
/// driven by the same noise paths.
FellerReport feller_diagnostic(const TestFunction& f, const Eigen::VectorXd& x, const std::vector<double>& radii,
                               const ModelSpec& model, double theta0, const TimeGrid& grid, std::size_t n_paths,
                               std::uint64_t seed);

}  // namespace fhl
