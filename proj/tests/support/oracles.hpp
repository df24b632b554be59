#pragma once

// Reference computations used only by tests. Each oracle takes a route that is
// independent of the library code it checks.

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// (I^alpha t^beta)(t) = Gamma(beta+1)/Gamma(alpha+beta+1) t^{alpha+beta};
/// negative alpha gives the Riemann-Liouville derivative of order -alpha.
double power_rule(double alpha, double beta, double t);

/// C_0 from the analytically continued beta function.
double c0_closed_form(double H);

/// Variance factor Gamma(2-2H) cos(pi H) / (pi H (1 - 2H)).
double kh_variance_factor(double H);

/// Riemann-Stieltjes sum of f dg over [0, T] on m midpoint cells.
double riemann_stieltjes(const std::function<double(double)>& f, const std::function<double(double)>& g,
                         double T, std::size_t m);

/// Gauss-Hermite nodes/weights for E[phi(Z)], Z ~ N(0,1) (probabilists' weights,
/// normalized to sum 1), from the Golub-Welsch eigenproblem.
struct GaussRule {
  std::vector<double> x, w;
};
GaussRule gauss_hermite(int n);

/// E[phi(m + s Z)] by Gauss-Hermite.
double gaussian_expectation(const std::function<double(double)>& phi, double mean, double sd, int n = 80);

/// Terminal variance of the scalar fractional OU process dX = -lambda X dt + sigma dB^H
/// started at a deterministic point, via integration by parts against R_H.
double ou_variance(double lambda, double sigma, double H, double T);

/// Exact Gaussian law of the explicit Euler chain X_{k+1} = (1 - lambda h_k) X_k + sigma dB_k
/// on the given nodes, from the fBm increment covariance. Returns {mean, variance}.
struct Normal {
  double mean, var;
};
Normal euler_ou_law(double lambda, double sigma, double H, const std::vector<double>& nodes, double x);
/// Brute-force squared W2 between equal-size point clouds (all permutations).
double w2_squared_bruteforce(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b);

/// Kolmogorov-Smirnov two-sample statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b);

/// Mean and standard error.
struct MeanSe {
  double mean, se;
};
MeanSe mean_se(const std::vector<double>& v);

}  // namespace oracle
