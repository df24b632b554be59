#include "fhl/coupling.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <string>

#include "fhl/errors.hpp"

namespace fhl {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

CouplingSchedule::CouplingSchedule(double K, double theta0, double T) : K_(K), theta0_(theta0), T_(T) {
  if (!(theta0 > 0.0 && theta0 < 2.0)) throw DomainError("theta0 must lie in (0, 2), got " + std::to_string(theta0));
  if (!(K >= 0.0) || !std::isfinite(K)) throw DomainError("K must be finite and non-negative");
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("T must be positive");
  c_ = 2.0 - theta0;
}

CouplingSchedule make_schedule(double K, double theta0, double T) { return {K, theta0, T}; }

double CouplingSchedule::zeta(double t) const {
  if (K_ == 0.0) return c_ * (T_ - t) / 3.0;
  return -c_ / (2.0 * K_) * std::expm1(2.0 * K_ * (t - T_) / 3.0);
}

double CouplingSchedule::zeta_prime(double t) const {
  if (K_ == 0.0) return -c_ / 3.0;
  return -c_ / 3.0 * std::exp(2.0 * K_ * (t - T_) / 3.0);
}

double CouplingSchedule::ratio(double s, double t) const {
  if (K_ == 0.0) return (T_ - t) / (T_ - s);
  const double a = 2.0 * K_ / 3.0;
  return std::expm1(a * (t - T_)) / std::expm1(a * (s - T_));
}

double CouplingSchedule::inverse_integral(double s, double t) const {
  if (t >= T_) return std::numeric_limits<double>::infinity();
  return 2.0 * K_ * (t - s) / c_ - 3.0 / c_ * std::log(ratio(s, t));
}

double CouplingSchedule::decay(double s, double t) const {
  if (t >= T_) return 0.0;
  return std::pow(ratio(s, t), 3.0 / c_) * std::exp(-2.0 * K_ * (t - s) / c_);
}

double CouplingSchedule::zeta_majorant() const {
  if (K_ == 0.0) return std::numeric_limits<double>::infinity();
  return c_ / (2.0 * K_);
}

CouplingTrace solve_coupled(const ModelSpec& model, const VectorXd& x, const VectorXd& y, const FbmPath& noise,
                            const CouplingSchedule& schedule) {
  if (!noise.wiener) throw InvalidInputError("coupling needs noise carrying its Wiener path");
  if (schedule.K() < model.drift.K()) {
    throw InvalidInputError("schedule K is smaller than the drift Lipschitz constant");
  }
  if (std::abs(schedule.T() - model.T) > 1e-12 * model.T) throw InvalidInputError("schedule horizon differs");
  if (static_cast<std::size_t>(y.size()) != model.d) throw InvalidInputError("y has the wrong dimension");

  StatePath X = solve(model, x, noise);
  const TimeGrid& g = noise.grid;
  const Index n = static_cast<Index>(g.cells());
  const Index d = static_cast<Index>(model.d);

  VectorXd z(n + 1);
  for (Index k = 0; k <= n; ++k) z(k) = schedule.zeta(g[k]);
  z(n) = 0.0;

  MatrixXd D(n + 1, d), Y(n + 1, d), u = MatrixXd::Zero(n + 1, d);
  D.row(0) = (x - y).transpose();
  Y.row(0) = y.transpose();
  for (Index k = 0; k < n; ++k) {
    const double t = g[k];
    const VectorXd xk = X.states.row(k).transpose();
    const VectorXd yk = Y.row(k).transpose();
    const VectorXd push = (model.drift(t, xk) - model.drift(t, yk)) * g.step(k);
    D.row(k + 1) = schedule.decay(t, g[k + 1]) * (D.row(k) + push.transpose());
    Y.row(k + 1) = X.states.row(k + 1) - D.row(k + 1);
  }
  for (Index k = 0; k < n; ++k) {
    const VectorXd inv = model.sigma.diag(g[k]).cwiseInverse();
    u.row(k) = (inv.cwiseProduct(D.row(k).transpose()) / z(k)).transpose();
  }
  StatePath Yp{g, std::move(Y)};
  return {g, std::move(X), std::move(Yp), std::move(D), std::move(u), std::move(z), noise, schedule,
          static_cast<std::size_t>(n - 1)};
}

EnergyReport energy_check(const CouplingTrace& trace, double tau) {
  EnergyReport rep;
  rep.tau = tau;
  const double th = trace.schedule.theta0();
  const auto& z = trace.zeta;
  const auto& D = trace.diff;
  const std::size_t m_end = trace.terminal_index;
  rep.rhs = D.row(0).squaredNorm() / (th * std::pow(z(0), 3));
  double integral = 0.0;
  double prev = D.row(0).squaredNorm() / std::pow(z(0), 4);
  rep.max_slack = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m <= m_end; ++m) {
    const Index k = static_cast<Index>(m);
    const double cur = D.row(k).squaredNorm() / std::pow(z(k), 4);
    if (m > 0) integral += 0.5 * trace.grid.step(m - 1) * (prev + cur);
    prev = cur;
    const double lhs = integral + D.row(k).squaredNorm() / (th * std::pow(z(k), 3));
    rep.lhs.push_back(lhs);
    const double s = rep.rhs > 0.0 ? lhs / rep.rhs - 1.0 : 0.0;
    rep.slack.push_back(s);
    if (m > 0) rep.max_slack = std::max(rep.max_slack, s);
    if (s > tau) ++rep.violations;
  }
  if (m_end == 0) rep.max_slack = 0.0;
  return rep;
}

CouplingSummary coupling_report(const CouplingTrace& trace, double gap_tol, double tau) {
  CouplingSummary s{};
  const double th = trace.schedule.theta0();
  const std::size_t m_end = trace.terminal_index;
  for (std::size_t m = 0; m <= m_end; ++m) {
    const Index k = static_cast<Index>(m);
    s.normalized.push_back(trace.diff.row(k).squaredNorm() / (th * std::pow(trace.zeta(k), 3)));
  }
  s.budget = s.normalized.front();
  s.max_normalized = *std::max_element(s.normalized.begin(), s.normalized.end());
  s.terminal_gap = trace.diff.row(static_cast<Index>(m_end)).norm();
  s.terminal_time = trace.grid[m_end];
  s.success = s.max_normalized <= s.budget * (1.0 + tau) && s.terminal_gap <= gap_tol;
  return s;
}

void write_csv(std::ostream& out, const CouplingTrace& trace) {
  const Index d = trace.diff.cols();
  out << "t";
  for (Index i = 0; i < d; ++i) out << ",X" << i + 1;
  for (Index i = 0; i < d; ++i) out << ",Y" << i + 1;
  out << ",gap,zeta";
  for (Index i = 0; i < d; ++i) out << ",u" << i + 1;
  out << '\n' << std::setprecision(17);
  for (Index k = 0; k < trace.diff.rows(); ++k) {
    out << trace.grid[k];
    for (Index i = 0; i < d; ++i) out << ',' << trace.x_path.states(k, i);
    for (Index i = 0; i < d; ++i) out << ',' << trace.y_path.states(k, i);
    out << ',' << trace.diff.row(k).norm() << ',' << trace.zeta(k);
    for (Index i = 0; i < d; ++i) out << ',' << trace.u(k, i);
    out << '\n';
  }
}

}  // namespace fhl
