#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "gfd/closed_forms.hpp"
#include "gfd/kernel.hpp"
#include "oracles.hpp"

using namespace gfd;

namespace {

ModelParams make(int d, double alpha, std::array<double, 4> beta, double p) {
  ModelParams P;
  P.d = d;
  P.alpha = alpha;
  P.beta = beta;
  P.p = p;
  return validate_params(P);
}

IntegralShape shape(double gamma, double beta, double q, double delta, double R) {
  IntegralShape s;
  s.gamma = gamma;
  s.beta = beta;
  s.q = q;
  s.delta = delta;
  s.R = R;
  return s;
}

}  // namespace

TEST_CASE("F special values") {
  for (double g : {-2.5, -1.0, 0.0, 1.7})
    for (double b : {0.0, 0.5, 2.0}) CHECK(f_log_integral(1.0, g, b) == 0.0);
  CHECK(f_log_integral(0.5, -1.0, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const double l8 = std::log(8.0), l2 = std::log(2.0);
  CHECK(f_log_integral(0.25, -1.0, 1.0) == doctest::Approx((l8 * l8 - l2 * l2) / 2.0).epsilon(1e-15));
  CHECK(f_log_integral(0.25, 1.0, 0.0) == doctest::Approx((1.0 - 0.0625) / 2.0).epsilon(1e-15));
  CHECK_THROWS_AS(f_log_integral(0.0, 0.0, 0.0), Error);
  CHECK_THROWS_AS(f_log_integral(1.5, 0.0, 0.0), Error);
}

TEST_CASE("F general branch against an independent quadrature") {
  for (double x : {1e-6, 0.01, 0.3})
    for (double g : {-2.2, -0.5, 0.8})
      for (double b : {0.3, 1.5})
        CHECK(f_log_integral(x, g, b) == doctest::Approx(oracle::f_integral(x, g, b)).epsilon(1e-9));
}

TEST_CASE("Green estimate shapes") {
  const auto P = make(2, 1.0, {0.6, 0, 0, 0}, 1.2);
  // interior pair: the power factors are 1
  const HalfSpacePoint x({0.0}, 1.0), y({0.3}, 1.2);
  const auto e = green_estimate(x, y, P);
  CHECK(e.factors.min_power == 1.0);
  CHECK(e.factors.max_power == 1.0);
  CHECK(e.value == doctest::Approx(std::pow(distance(x, y), 1.0 - 2.0)));
  // both points at height 0.01, one unit apart
  const HalfSpacePoint a({0.0}, 0.01), b({1.0}, 0.01);
  const double rho = distance(a, b);
  CHECK(e.regime.tag == RegimeTag::PolyPoly);
  CHECK(green_estimate(a, b, P).value == doctest::Approx(std::pow(rho, -1.0) * std::pow(0.01 / rho, 2.4)));
  CHECK_THROWS_AS(green_estimate(a, a, P), Error);
}

TEST_CASE("Green estimate symmetry and scaling in every regime") {
  const std::vector<ModelParams> regimes = {make(2, 1.0, {0.6, 0.3, 0, 0.5}, 1.2),
                                            make(2, 1.0, {0.6, 0.3, 0, 0.5}, 1.45),
                                            make(2, 1.0, {0.6, 0.3, 0, 0.5}, 1.55)};
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0), h(-5.0, 0.0), lr(-3.0, 3.0);
  for (const auto& P : regimes) {
    for (int n = 0; n < 500; ++n) {
      const HalfSpacePoint x({u(rng)}, std::pow(10.0, h(rng))), y({u(rng)}, std::pow(10.0, h(rng)));
      const double v = green_estimate(x, y, P).value;
      CHECK(green_estimate(y, x, P).value == v);
      const double r = std::pow(10.0, lr(rng));
      CHECK(green_estimate(scale_point(x, r), scale_point(y, r), P).value * std::pow(r, 2.0 - 1.0) ==
            doctest::Approx(v).epsilon(1e-12));
    }
  }
}

TEST_CASE("Green estimate is continuous along a path through the regions") {
  const auto P = make(2, 0.7, {1.0, 0.1, 0, 0}, 1.5);
  const HalfSpacePoint y({0.0}, 0.3);
  double prev = green_estimate(HalfSpacePoint({2.0}, 1e-3), y, P).value;
  double worst = 0.0;
  for (int k = 1; k <= 200000; ++k) {
    const double t = k / 200000.0;
    // geometric in height so that steps stay small relative to x_d
    const HalfSpacePoint x({2.0 - 1.9 * t}, 1e-3 * std::pow(500.0, t));
    const double v = green_estimate(x, y, P).value;
    worst = std::max(worst, std::abs(v / prev - 1.0));
    prev = v;
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("unified form against the regime formulas") {
  const double b4 = 0.5;
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0), h(-5.0, 0.0);
  for (double p : {1.2, 1.45, 1.55}) {
    const auto P = make(2, 1.0, {0.6, 0.3, 0, b4}, p);
    const auto tag = classify_regime(P).tag;
    double lo = INFINITY, hi = 0.0;
    for (int n = 0; n < 10000; ++n) {
      const HalfSpacePoint x({u(rng)}, std::pow(10.0, h(rng))), y({u(rng)}, std::pow(10.0, h(rng)));
      const double r = green_estimate_unified(x, y, P) / green_estimate(x, y, P).value;
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    if (tag == RegimeTag::PolyPoly) {
      // indicator off: the log is the constant log 2
      CHECK(lo == doctest::Approx(std::pow(std::log(2.0), b4)));
      CHECK(hi == doctest::Approx(lo));
    } else {
      const double e = tag == RegimeTag::CriticalLog ? b4 + 1.0 : b4;
      CHECK(lo >= 1.0 - 1e-12);
      CHECK(hi <= std::pow(std::log(3.0) / std::log(2.0), e) + 1e-12);
    }
  }
}

TEST_CASE("box integral shapes") {
  const double alpha = 1.0;
  // I1 with beta = gamma = 0, q = alpha
  CHECK(lemma61_rhs(BoxCase::I1, shape(0, 0, alpha, 0, 1), alpha, 0.1, 0.02, 1, 1) ==
        doctest::Approx(0.02 / 0.1));
  CHECK(lemma61_rhs(BoxCase::I2, shape(0, 0, 0.5, 0, 1), alpha, 0.1, 0.02, 0.4, 0.4) == 0.0);
  CHECK(lemma61_rhs(BoxCase::I3, shape(0, 0, 0.5, 0, 1), alpha, 0.1, 0.02, 1, 1) == doctest::Approx(0.1));
  CHECK_THROWS_AS(lemma61_rhs(BoxCase::I1, shape(0, 0, 0.5, 0, 1), alpha, 0.1, 0.06, 1, 1), Error);  // a1 > x_d/2
  CHECK_THROWS_AS(lemma61_rhs(BoxCase::I2, shape(0, 0, 0.5, 0, 1), alpha, 0.1, 0.02, 0.4, 0.1), Error);
  CHECK_THROWS_AS(lemma61_rhs(BoxCase::I3, shape(0, 0, -0.5, 0, 1), alpha, 0.1, 0.02, 1, 1), Error);  // q <= alpha-1
}

TEST_CASE("three-branch shape") {
  const double alpha = 1.0, x = 0.01;
  CHECK(cor62_rhs(shape(0, 0, 0, 0, 1), alpha, x, 0.5) == doctest::Approx(std::pow(x, 0.5)));
  CHECK(cor62_branch(shape(0, 0, 0, 0, 1), alpha, 0.5) == 1);
  CHECK(cor62_rhs(shape(0, 0, 0, 0, 1), alpha, x, 1.0) == doctest::Approx(x * std::log(2.0 / x)));
  CHECK(cor62_branch(shape(0, 0, 0, 0, 1), alpha, 1.0) == 2);
  CHECK(cor62_rhs(shape(0, 0, 0, 0, 1), alpha, x, 1.5) == doctest::Approx(x));
  CHECK(cor62_branch(shape(0, 0, 0, 0, 1), alpha, 1.5) == 3);
  CHECK_THROWS_AS(cor62_rhs(shape(0, 0, 0, 0, 1), alpha, 0.6, 0.5), Error);  // x_d >= R/2
}

TEST_CASE("killed potential shapes") {
  const auto P = make(2, 1.0, {0.5, 0.3, 0, 0}, 1.2);
  const double x = 0.01;
  // gamma = 0 with p > alpha: the lifetime x_d^alpha
  CHECK(killed_potential_rhs(-0.5, x, 1.0, P).value == doctest::Approx(std::pow(x, 0.5)));
  CHECK(killed_potential_rhs(0.2, x, 1.0, P).value == doctest::Approx(x * std::log(1.0 / x) * std::pow(x, 0.2)));
  CHECK(killed_potential_rhs(0.0, x, 1.0, P).value == doctest::Approx(std::pow(x, 1.0)));
  CHECK(lifetime_rhs(x, P).value == doctest::Approx(x));
  CHECK(killed_potential_rhs(-2.2, x, 1.0, P).infinite);
  CHECK(killed_potential_rhs(-3.0, x, 1.0, P).infinite);
  CHECK(lifetime_rhs(x, make(2, 1.0, {0.5, 0.3, 0, 0}, 0.9)).infinite);
  // monotone in gamma across the log branch
  const double below = killed_potential_rhs(0.2 - 1e-3, x, 1.0, P).value;
  const double at = killed_potential_rhs(0.2, x, 1.0, P).value;
  const double above = killed_potential_rhs(0.2 + 1e-3, x, 1.0, P).value;
  CHECK(below > above);
  CHECK(at > above);
}

TEST_CASE("exit probability shape") {
  const auto P1 = make(2, 1.0, {0.5, 0, 0, 0}, 1.0);
  CHECK(exit_prob_shape(0.5, 1.0, P1) == doctest::Approx(0.5));
  const auto P = make(2, 1.0, {0.5, 0, 0, 0}, 0.7);
  CHECK(exit_prob_shape(0.03, 0.4, P) == doctest::Approx(exit_prob_shape(0.3, 4.0, P)));
  CHECK(exit_prob_shape(1e-12, 1.0, P) < 1e-8);
  CHECK_THROWS_AS(exit_prob_shape(1.0, 1.0, P), Error);
}
