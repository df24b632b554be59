#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fhl/errors.hpp"
#include "fhl/sde.hpp"
#include "oracles.hpp"

using namespace fhl;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd m1(double v) { return MatrixXd::Constant(1, 1, v); }
VectorXd v1(double v) { return VectorXd::Constant(1, v); }

}  // namespace

TEST_CASE("drift constants are analytic and declared values are validated") {
  MatrixXd A(2, 2);
  A << 0.0, 1.0, -2.0, 0.0;
  const auto lin = DriftSpec::linear(A, VectorXd::Zero(2));
  CHECK(lin.analytic_K() == doctest::Approx(2.0));
  CHECK(lin.analytic_L() == doctest::Approx(0.5));  // symmetric part has eigenvalues +-1/2
  CHECK_NOTHROW(DriftSpec::linear(A, VectorXd::Zero(2), 3.0, 1.0));
  CHECK_THROWS_AS(DriftSpec::linear(A, VectorXd::Zero(2), 1.5), InvalidInputError);
  CHECK_THROWS_AS(DriftSpec::linear(A, VectorXd::Zero(2), {}, 0.1), InvalidInputError);

  const auto sn = DriftSpec::sinusoidal(m1(-0.5), v1(0.0));
  CHECK(sn.analytic_K() == doctest::Approx(0.5));
  CHECK(sn.analytic_L() == doctest::Approx(0.5));

  const auto cub = DriftSpec::clipped_cubic(2, 1.0);
  CHECK(cub.analytic_K() == doctest::Approx(2.0));
  CHECK(cub.analytic_L() == doctest::Approx(1.0));
  CHECK(DriftSpec::clipped_cubic(1, 0.5).analytic_K() == doctest::Approx(1.0));
  CHECK_THROWS_AS(DriftSpec::clipped_cubic(1, 0.0), InvalidInputError);
}

TEST_CASE("clipped cubic is continuous and Lipschitz with its constant") {
  const auto b = DriftSpec::clipped_cubic(1, 1.2);
  const double K = b.K();
  double worst = 0.0;
  for (double x = -4.0; x < 4.0; x += 0.013) {
    const double y = x + 0.007;
    worst = std::max(worst, std::abs(b(0, v1(y))(0) - b(0, v1(x))(0)) / 0.007);
    CHECK(x * b(0, v1(x))(0) <= b.L() * x * x + 1e-12);
  }
  CHECK(worst <= K + 1e-9);
  CHECK(b(0, v1(1.2 + 1e-12))(0) == doctest::Approx(b(0, v1(1.2))(0)));
}

TEST_CASE("sigma ranges, norms and the Hoelder constant") {
  const SigmaEntry aff{SigmaEntry::Kind::kAffine, 1.0, 0.5, 0.0};
  CHECK(aff.range(2.0).first == doctest::Approx(1.0));
  CHECK(aff.range(2.0).second == doctest::Approx(2.0));
  const SigmaEntry sn{SigmaEntry::Kind::kSinusoidal, 2.0, 0.5, std::numbers::pi};
  CHECK(sn.range(1.0).second == doctest::Approx(2.5));   // at t = 1/2
  CHECK(sn.range(2.0).first == doctest::Approx(1.5));    // at t = 3/2
  const SigmaSpec s({aff}, 2.0, 0.5);
  CHECK(s.sup_norm() == doctest::Approx(2.0));
  CHECK(s.inv_sup_norm() == doctest::Approx(1.0));
  // |(1/sigma)'| <= 0.5 / 1 and T^{1/2} converts Lipschitz to 1/2-Hoelder.
  CHECK(s.analytic_Kbar() == doctest::Approx(0.5 * std::sqrt(2.0)));
  CHECK_THROWS_AS(SigmaSpec({aff}, 2.0, 0.5, 0.1), InvalidInputError);
  CHECK_THROWS_AS(SigmaSpec({SigmaEntry{SigmaEntry::Kind::kAffine, 1.0, -1.0, 0.0}}, 2.0), InvalidInputError);
  CHECK(SigmaSpec::identity(3, 1.0).Kbar() == 0.0);
  CHECK(SigmaSpec::identity(3, 1.0).is_constant());
}

TEST_CASE("model validation") {
  const auto b = DriftSpec::linear(m1(-1.0), v1(0.0));
  CHECK_THROWS_AS(ModelSpec(0.5, 1.0, b, SigmaSpec::identity(1, 1.0)), UnsupportedParameterError);
  CHECK_THROWS_AS(ModelSpec(0.7, 1.0, b, SigmaSpec::identity(2, 1.0)), InvalidInputError);
  CHECK_THROWS_AS(ModelSpec(0.8, 1.0, b, SigmaSpec({SigmaEntry{}}, 1.0, 0.2)), InvalidInputError);
  CHECK(ModelSpec(0.7, 1.0, b, SigmaSpec::identity(1, 1.0)).d == 1);
}

TEST_CASE("solver on fixed noise") {
  const TimeGrid g = TimeGrid::uniform(100, 1.0);
  const auto zero_drift = DriftSpec::linear(MatrixXd::Zero(2, 2), VectorXd::Zero(2));
  const ModelSpec m(0.7, 1.0, zero_drift, SigmaSpec::constant(2, 2.0, 1.0));
  const FbmPath noise = sample_direct(g, 0.7, 2, {3, 0});
  const VectorXd x0 = VectorXd::Constant(2, 1.5);
  const StatePath p = solve(m, x0, noise);
  CHECK(p.states.isApprox((2.0 * noise.values).rowwise() + x0.transpose(), 1e-13));

  // Zero noise: explicit Euler for x' = -x gives (1 - h)^n x0.
  const ModelSpec ou(0.7, 1.0, DriftSpec::linear(m1(-1.0), v1(0.0)), SigmaSpec::identity(1, 1.0));
  const FbmPath quiet{g, 0.7, Eigen::MatrixXd::Zero(101, 1), std::nullopt};
  CHECK(solve(ou, v1(2.0), quiet).states(100, 0) == doctest::Approx(2.0 * std::pow(0.99, 100)));
  CHECK_THROWS_AS(solve(ou, VectorXd::Zero(2), quiet), InvalidInputError);
}

TEST_CASE("stochastic convolution variance") {
  for (double H : {0.6, 0.7, 0.85}) {
    // lambda = 0 is plain fBm.
    CHECK(linear_noise_variance(0.0, 1.5, H, 2.0) == doctest::Approx(2.25 * std::pow(2.0, 2 * H)).epsilon(1e-8));
    for (double lambda : {-0.5, 1.0, 3.0})
      CHECK(linear_noise_variance(lambda, 1.0, H, 1.0) ==
            doctest::Approx(oracle::ou_variance(lambda, 1.0, H, 1.0)).epsilon(1e-6));
  }
  CHECK(linear_noise_variance(1.0, 1.0, 0.5, 1.0) == doctest::Approx(-std::expm1(-2.0) / 2.0));
}

TEST_CASE("second moments of the linear model") {
  const double lambda = 1.0, H = 0.7, T = 1.0;
  const ModelSpec ou(H, T, DriftSpec::linear(m1(-lambda), v1(0.0)), SigmaSpec::identity(1, T));
  const TimeGrid g = TimeGrid::uniform(128, T);
  const MomentReport r = moment_diagnostic(ou, {v1(0.0), v1(2.0)}, g, 4000, {17, 0});
  const double q = oracle::ou_variance(lambda, 1.0, H, T);
  CHECK(std::abs(r.points[0].mean_sq - q) < 4.0 * r.points[0].se + 0.01 * q);
  const double m2 = std::exp(-2.0 * lambda * T) * 4.0 + q;
  CHECK(std::abs(r.points[1].mean_sq - m2) < 4.0 * r.points[1].se + 0.01 * m2);
  CHECK(r.max_ratio == doctest::Approx(std::max(r.points[0].ratio, r.points[1].ratio)));
}

TEST_CASE("Euler chain law oracle") {
  std::vector<double> nodes(65);
  for (std::size_t k = 0; k < nodes.size(); ++k) nodes[k] = 2.0 * k / 64.0;
  // No damping: the chain is sigma B_T.
  const auto free = oracle::euler_ou_law(0.0, 1.5, 0.7, nodes, 1.0);
  CHECK(free.mean == 1.0);
  CHECK(free.var == doctest::Approx(2.25 * std::pow(2.0, 1.4)));
  // Refining approaches the continuous law.
  std::vector<double> fine(1025);
  for (std::size_t k = 0; k < fine.size(); ++k) fine[k] = k / 1024.0;
  const auto law = oracle::euler_ou_law(1.0, 1.0, 0.7, fine, 2.0);
  CHECK(law.mean == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-3));
  CHECK(law.var == doctest::Approx(oracle::ou_variance(1.0, 1.0, 0.7, 1.0)).epsilon(2e-3));
  // Monte Carlo of the library solver on the same grid.
  const TimeGrid g = TimeGrid::uniform(64, 2.0);
  const ModelSpec ou(0.7, 2.0, DriftSpec::linear(m1(-1.0), v1(0.0)), SigmaSpec::identity(1, 2.0));
  const auto exact = oracle::euler_ou_law(1.0, 1.0, 0.7, nodes, 0.5);
  std::vector<double> xs(4000);
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = solve(ou, v1(0.5), sample_direct(g, 0.7, 1, {23, i})).states(64, 0);
  const auto ms = oracle::mean_se(xs);
  CHECK(std::abs(ms.mean - exact.mean) <= 4.0 * ms.se);
}
