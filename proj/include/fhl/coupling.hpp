#pragma once

#include <ostream>
#include <vector>

#include "fhl/fbm.hpp"
#include "fhl/sde.hpp"

namespace fhl {

/// zeta(t) = (2 - theta0) / (2K) * (1 - e^{2K(t - T)/3}), or (2 - theta0)(T - t)/3 when K = 0.
/// It solves 3 zeta' - 2 K zeta + 2 = theta0 with zeta(T) = 0.
class CouplingSchedule {
 public:
  CouplingSchedule(double K, double theta0, double T);

  double zeta(double t) const;
  double zeta_prime(double t) const;
  /// exp(-integral_s^t dr / zeta(r)) for 0 <= s <= t <= T; exactly 0 at t = T.
  double decay(double s, double t) const;
  /// integral_s^t dr / zeta(r) (infinite at t = T).
  double inverse_integral(double s, double t) const;
  /// The T-free majorant (2 - theta0)/(2K) of sup zeta; +inf when K = 0.
  double zeta_majorant() const;

  double K() const { return K_; }
  double theta0() const { return theta0_; }
  double T() const { return T_; }

 private:
  // zeta(t) / zeta(s) evaluated without cancellation.
  double ratio(double s, double t) const;
  double K_, theta0_, T_, c_;
};

CouplingSchedule make_schedule(double K, double theta0, double T);

struct CouplingTrace {
  TimeGrid grid;
  StatePath x_path;
  StatePath y_path;
  Eigen::MatrixXd diff;  // X - Y per node
  Eigen::MatrixXd u;     // sigma^{-1}(X - Y)/zeta per node; zero at t = T
  Eigen::VectorXd zeta;  // schedule at the nodes
  FbmPath noise;
  CouplingSchedule schedule;
  std::size_t terminal_index;  // last node with t < T
};

/// Couples the solution from x with the solution from y driven by the extra
/// drift (X - Y)/zeta. X is produced by `solve`; the difference follows
/// exponential Euler with the exact per-cell factor of the schedule.
CouplingTrace solve_coupled(const ModelSpec& model, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                            const FbmPath& noise, const CouplingSchedule& schedule);

struct EnergyReport {
  std::vector<double> lhs;    // per retained node
  double rhs = 0.0;
  std::vector<double> slack;  // lhs/rhs - 1 (0 when rhs = 0)
  double max_slack = 0.0;     // over nodes 1..terminal
  std::size_t violations = 0; // nodes with slack > tau
  double tau = 0.0;
};

/// Discrete form of the energy budget: trapezoid of |X-Y|^2/zeta^4 up to s plus
/// |X_s - Y_s|^2/(theta0 zeta^3(s)), against |x - y|^2 / (theta0 zeta^3(0)).
EnergyReport energy_check(const CouplingTrace& trace, double tau = 0.05);

struct CouplingSummary {
  double terminal_gap;             // |X - Y| at the last retained node
  double terminal_time;
  std::vector<double> normalized;  // |X_s - Y_s|^2 / (theta0 zeta^3(s))
  double budget;                   // normalized value at s = 0
  double max_normalized;
  bool success;
};

CouplingSummary coupling_report(const CouplingTrace& trace, double gap_tol, double tau = 0.05);

/// CSV with columns t, X_i, Y_i, |X-Y|, zeta, u_i.
void write_csv(std::ostream& out, const CouplingTrace& trace);

}  // namespace fhl
