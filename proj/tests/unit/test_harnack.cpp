#include <cmath>

#include "doctest.h"
#include "fhl/errors.hpp"
#include "fhl/harnack.hpp"
#include "oracles.hpp"

using namespace fhl;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd v1(double v) { return VectorXd::Constant(1, v); }

constexpr double kLambda = 1.0, kH = 0.7, kT = 1.0;

ModelSpec ou() {
  return ModelSpec(kH, kT, DriftSpec::linear(MatrixXd::Constant(1, 1, -kLambda), v1(0.0), kLambda),
                   SigmaSpec::identity(1, kT));
}

// E phi(X_T^x) for the scalar OU model, X_T^x ~ N(e^{-lambda T} x, q).
double ou_expect(const std::function<double(double)>& phi, double x) {
  return oracle::gaussian_expectation(phi, std::exp(-kLambda * kT) * x,
                                      std::sqrt(oracle::ou_variance(kLambda, 1.0, kH, kT)));
}

}  // namespace

TEST_CASE("test function families") {
  const auto c = TestFunction::constant(2.0);
  CHECK(c(v1(5.0)) == 2.0);
  CHECK(c.oscillation() == 0.0);
  CHECK(c.dim() == 0);

  const auto b = TestFunction::bump(0.1, v1(1.0), 0.5);
  CHECK(b(v1(1.0)) == doctest::Approx(1.1));
  CHECK(b(v1(1.5)) == doctest::Approx(0.1 + std::exp(-1.0)));
  CHECK(b.floor() == 0.1);
  CHECK(b.ceiling() == doctest::Approx(1.1));
  CHECK_THROWS_AS(b(VectorXd::Zero(2)), InvalidInputError);

  const auto e = TestFunction::clipped_exp(v1(2.0), 0.5, 3.0);
  CHECK(e(v1(0.0)) == doctest::Approx(1.0));
  CHECK(e(v1(-10.0)) == 0.5);
  CHECK(e(v1(400.0)) == 3.0);  // exponent clamped before exp, no overflow
  CHECK(e.oscillation() == doctest::Approx(2.5));
  CHECK(e.family_name() == "clipped_exp");

  CHECK_THROWS_AS(TestFunction::constant(0.0), InvalidInputError);
  CHECK_THROWS_AS(TestFunction::bump(0.0, v1(0.0), 1.0), InvalidInputError);
  CHECK_THROWS_AS(TestFunction::bump(0.1, v1(0.0), 0.0), InvalidInputError);
  CHECK_THROWS_AS(TestFunction::clipped_exp(v1(1.0), 0.0, 2.0), InvalidInputError);
  CHECK_THROWS_AS(TestFunction::clipped_exp(v1(1.0), 2.0, 2.0), InvalidInputError);
}

TEST_CASE("verdict rule") {
  CHECK(decide(0.0, 1.0) == Verdict::kPass);
  CHECK(decide(-2.9, 1.0) == Verdict::kInconclusive);
  CHECK(decide(-3.1, 1.0) == Verdict::kFail);
  CHECK(decide(-1e-9, 0.0) == Verdict::kFail);
  CHECK(to_string(Verdict::kInconclusive) == "inconclusive");
}

TEST_CASE("P_T f against Gauss-Hermite on the linear model") {
  const ModelSpec m = ou();
  const TimeGrid g = TimeGrid::uniform(256, kT);
  const auto c = estimate_pt(TestFunction::constant(3.0), v1(0.4), m, g, 10, {1, 0});
  CHECK(c.mean == 3.0);
  CHECK(c.se == 0.0);

  const auto b = TestFunction::bump(0.1, v1(0.0), 0.5);
  const auto e = TestFunction::clipped_exp(v1(0.8), 0.2, 5.0);
  for (const TestFunction* f : {&b, &e}) {
    for (double x : {-0.5, 0.25}) {
      const double exact = ou_expect([&](double z) { return (*f)(v1(z)); }, x);
      for (NoiseRoute route : {NoiseRoute::kDirect, NoiseRoute::kVolterra}) {
        const MeanEstimate mc = estimate_pt(*f, v1(x), m, g, 4000, {2, 0}, route);
        CHECK(std::abs(mc.mean - exact) <= 4.0 * mc.se + 0.01 * exact);
      }
    }
  }
}

TEST_CASE("log-Harnack on the linear model") {
  const ModelSpec m = ou();
  const TimeGrid g = TimeGrid::uniform(256, kT);
  const auto f = TestFunction::bump(0.1, v1(0.0), 0.5);
  const HarnackReport r = log_harnack_check(f, v1(0.25), v1(-0.25), m, 1.0, g, 4000, 99);
  CHECK(r.kind == "log");
  CHECK(r.seed_lhs != r.seed_rhs);
  CHECK(r.bound == doctest::Approx(constants_bundle(m, 1.0, kT).bound(0.25)));
  CHECK(r.margin == doctest::Approx(r.rhs.mean + r.bound - r.lhs.mean));
  CHECK(r.decision == Verdict::kPass);

  const double lhs = ou_expect([&](double z) { return std::log(f(v1(z))); }, -0.25);
  const double rhs = std::log(ou_expect([&](double z) { return f(v1(z)); }, 0.25));
  CHECK(std::abs(r.lhs.mean - lhs) <= 4.0 * r.lhs.se + 0.01 * std::abs(lhs));
  CHECK(std::abs(r.rhs.mean - rhs) <= 4.0 * r.rhs.se + 0.01 * std::abs(rhs));
}

TEST_CASE("x = y reduces log-Harnack to Jensen") {
  const ModelSpec m = ou();
  const TimeGrid g = TimeGrid::uniform(128, kT);
  const auto f = TestFunction::clipped_exp(v1(2.0), 0.1, 20.0);
  const HarnackReport r = log_harnack_check(f, v1(0.3), v1(0.3), m, 1.0, g, 4000, 5);
  CHECK(r.bound == 0.0);
  CHECK(r.decision != Verdict::kFail);
  const double gap = std::log(ou_expect([&](double z) { return f(v1(z)); }, 0.3)) -
                     ou_expect([&](double z) { return std::log(f(v1(z))); }, 0.3);
  CHECK(gap > 0.0);
  CHECK(std::abs(r.margin - gap) <= 4.0 * r.combined_se + 0.02);
}

TEST_CASE("power-Harnack") {
  const ModelSpec m = ou();
  const TimeGrid g = TimeGrid::uniform(256, kT);
  const auto f = TestFunction::clipped_exp(v1(0.8), 0.2, 5.0);
  CHECK_THROWS_AS(power_harnack_check(1.0, f, v1(0.0), v1(0.1), m, 1.0, g, 10, 1), DomainError);
  for (double p : {1.5, 2.0, 4.0}) {
    const HarnackReport r = power_harnack_check(p, f, v1(0.25), v1(-0.25), m, 1.0, g, 4000, 7);
    CHECK(r.kind == "power");
    CHECK(r.margin == doctest::Approx(r.rhs.mean * std::exp(p * r.bound / (p - 1.0)) - r.lhs.mean));
    CHECK(r.decision == Verdict::kPass);
    const double lhs = std::pow(ou_expect([&](double z) { return f(v1(z)); }, -0.25), p);
    const double rhs = ou_expect([&](double z) { return std::pow(f(v1(z)), p); }, 0.25);
    CHECK(std::abs(r.lhs.mean - lhs) <= 4.0 * r.lhs.se + 0.02 * lhs);
    CHECK(std::abs(r.rhs.mean - rhs) <= 4.0 * r.rhs.se + 0.02 * rhs);
  }
}

TEST_CASE("change of measure reproduces P_T f(y)") {
  const ModelSpec m = ou();
  const TimeGrid g = TimeGrid::uniform_refined(128, kT, 6);
  const auto f = TestFunction::bump(0.1, v1(0.0), 0.5);
  const ChangeOfMeasureReport r = change_of_measure_check(f, v1(0.25), v1(-0.25), m, 1.0, g, 3000, 11);
  CHECK(r.identity_pass);
  CHECK(r.martingale_pass);
  CHECK(r.pass);
  CHECK(r.difference == doctest::Approx(r.weighted.mean - r.plain.mean));
}

TEST_CASE("Feller differences shrink with the radius and stay under the modulus") {
  const ModelSpec m = ou();
  const TimeGrid g = TimeGrid::uniform(128, kT);
  const auto f = TestFunction::bump(0.1, v1(0.0), 0.5);
  const FellerReport r = feller_diagnostic(f, v1(0.2), {0.4, 0.2, 0.1, 0.0}, m, 1.0, g, 2000, 3);
  REQUIRE(r.points.size() == 4);
  CHECK(r.points[0].radius == 0.4);
  CHECK(r.points[3].sup_difference == 0.0);
  CHECK(r.points[3].modulus == 0.0);
  CHECK(r.monotone);
  CHECK(r.within_modulus);
  CHECK(r.points[2].sup_difference < r.points[0].sup_difference);
  CHECK_THROWS_AS(feller_diagnostic(f, v1(0.2), {-0.1}, m, 1.0, g, 10, 3), InvalidInputError);
}
