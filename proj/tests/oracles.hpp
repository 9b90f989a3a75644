#pragma once

// Reference computations written independently of the library code paths they
// check: plain formulas, brute-force sums and textbook quadrature.

#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "gfd/model_params.hpp"

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

/// B~ from its defining formula, given m = min height, M = max height, rho.
inline double btilde(const gfd::ModelParams& P, double m, double M, double rho) {
  const double lo = std::min(m, rho), hi = std::min(M, rho);
  double v = std::pow(std::min(m / rho, 1.0), P.beta[0]) * std::pow(std::min(M / rho, 1.0), P.beta[1]);
  v *= std::pow(std::log(1.0 + hi / lo), P.beta[2]);
  v *= std::pow(std::log(1.0 + rho / hi), P.beta[3]);
  return v;
}

/// (s^p - 1)(1 - s^{alpha-p-1}) / (1-s)^{1+alpha}, with t = 1 - s passed
/// separately so that neither end loses digits.
inline double h_factor(double alpha, double p, double s, double t) {
  const double ls = s < 0.5 ? std::log(s) : std::log1p(-t);
  return std::expm1(p * ls) * -std::expm1((alpha - p - 1.0) * ls) * std::pow(t, -1.0 - alpha);
}

/// Graded midpoint rule for the killing constant with about `nodes` nodes.
/// s in (0,1/2) uses s = t^k0 / 2 and s in (1/2,1) uses 1-s = tau^k1 / 2,
/// with k chosen so that the endpoint powers become t and t^2. The lateral
/// variable is |u| = tan(theta).
inline double constant_bruteforce(const gfd::ModelParams& P, long nodes = 10'000'000) {
  const double a = P.alpha, p = P.p;
  const double k0 = 2.0 / (a - p + P.beta[0]);
  const double k1 = 3.0 / (2.0 - a);
  const bool flat = P.beta == std::array<double, 4>{0.0, 0.0, 0.0, 0.0};
  const int d = P.d;
  const long n_theta = (d == 1 || flat) ? 1 : 2000;
  const long n_s = std::max(2L, nodes / n_theta / 2) * 2;
  const long half = n_s / 2;

  // Nodes of the s rule: log s, 1-s and log weight. s itself underflows for
  // large k0 while the integrand mass there is not negligible.
  struct Node {
    double ls, t, lw;
  };
  std::vector<Node> sn;
  sn.reserve(n_s);
  for (long i = 0; i < half; ++i) {
    const double u = (i + 0.5) / half;
    const double ls = std::log(0.5) + k0 * std::log(u);
    sn.push_back({ls, -std::expm1(ls), std::log(0.5 * k0 / half) + (k0 - 1.0) * std::log(u)});
  }
  for (long i = 0; i < half; ++i) {
    const double u = (i + 0.5) / half;
    const double t = 0.5 * std::pow(u, k1);
    sn.push_back({std::log1p(-t), t, std::log(0.5 * k1 / half) + (k1 - 1.0) * std::log(u)});
  }

  // weight * h * B~(m = s, M = 1, rho)
  const auto term = [&](const Node& n, double rho) {
    if (n.ls > -600.0) {
      const double s = std::exp(n.ls);
      return std::exp(n.lw) * h_factor(a, p, s, n.t) * btilde(P, s, 1.0, rho);
    }
    // s << rho: every factor in log form
    const double c = a - p - 1.0;
    double lv = n.lw + std::log(-std::expm1(p * n.ls)) + c * n.ls + std::log(-std::expm1(-c * n.ls));
    const double hi = std::min(1.0, rho);
    lv += P.beta[0] * (n.ls - std::log(rho)) + P.beta[1] * std::log(hi / rho);
    if (P.beta[2] != 0.0) lv += P.beta[2] * std::log(std::log(hi) - n.ls);
    if (P.beta[3] != 0.0) lv += P.beta[3] * std::log(std::log1p(rho / hi));
    return std::exp(lv);
  };

  if (d == 1) {
    double sum = 0.0;
    for (const auto& n : sn) sum += term(n, n.t);
    return sum;
  }
  if (flat) {
    // Lateral integral of (|u|^2+1)^{-(d+alpha)/2} in closed form.
    const double lateral = d == 2 ? std::sqrt(kPi) * boost::math::tgamma(0.5 * (1.0 + a)) / boost::math::tgamma(1.0 + 0.5 * a)
                                  : 2.0 * kPi / (1.0 + a);
    double sum = 0.0;
    for (const auto& n : sn) sum += term(n, n.t);
    return lateral * sum;
  }
  // (|u|^2+1)^{-(d+alpha)/2} du = 2 cos^alpha (d=2) or 2 pi sin cos^alpha (d=3) dtheta.
  double total = 0.0;
  const double hth = 0.5 * kPi / n_theta;
  for (long j = 0; j < n_theta; ++j) {
    const double th = (j + 0.5) * hth;
    const double c = std::cos(th);
    const double wth = hth * std::pow(c, a) * (d == 2 ? 2.0 : 2.0 * kPi * std::sin(th));
    double sum = 0.0;
    for (const auto& n : sn) sum += term(n, n.t / c);
    total += wth * sum;
  }
  return total;
}

/// F(x; gamma, beta) = int_x^1 h^gamma log(2/h)^beta dh via h = e^{-u}.
inline double f_integral(double x, double gamma, double beta) {
  const double L = -std::log(x);
  if (L == 0.0) return 0.0;
  const auto g = [&](double u) { return std::exp(-(gamma + 1.0) * u) * std::pow(std::log(2.0) + u, beta); };
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, 0.0, L, 20, 1e-14, &err);
}

/// int_0^x h^gamma log(2/h)^beta dh for gamma > -1, via h = x e^{-u}.
inline double f_integral_from_zero(double x, double gamma, double beta) {
  const auto g = [&](double u) {
    return x * std::exp(-(gamma + 1.0) * u) * std::pow(x, gamma) * std::pow(std::log(2.0 / x) + u, beta);
  };
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, 0.0, std::numeric_limits<double>::infinity(),
                                                                       20, 1e-13, &err);
}

/// OLS slope of log v against log s.
inline double loglog_slope(const std::vector<double>& s, const std::vector<double>& v) {
  const std::size_t n = s.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(s[i]);
    my += std::log(v[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (std::log(s[i]) - mx) * (std::log(v[i]) - my);
    sxx += (std::log(s[i]) - mx) * (std::log(s[i]) - mx);
  }
  return sxy / sxx;
}

}  // namespace oracle
