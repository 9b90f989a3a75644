#include "gfd/monte_carlo.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gfd/parallel.hpp"

namespace gfd {
namespace {

constexpr double kPi = boost::math::constants::pi<double>();

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double sphere_area(int d) { return d == 2 ? 2.0 * kPi : 4.0 * kPi; }

bool in_target(const HalfSpacePoint& y, const std::vector<Box>& target) {
  if (target.empty()) return true;
  for (const Box& b : target) {
    bool in = true;
    for (int k = 0; k + 1 < b.dim() && in; ++k) in = y.tilde[k] >= b.lo[k] && y.tilde[k] < b.hi[k];
    const int v = b.dim() - 1;
    if (in && y.xd >= b.lo[v] && y.xd < b.hi[v]) return true;
  }
  return false;
}

struct Chain {
  const SimConfig& cfg;
  BtildeKernel kern;
  double bbar;
  double jump_rate;  // proposal rate of the jump part

  explicit Chain(const SimConfig& c)
      : cfg(c),
        kern(c.params),
        bbar(btilde_upper_bound(c.params)),
        jump_rate(c.jumps_off ? 0.0
                              : bbar * sphere_area(c.params.d) * std::pow(c.eps_trunc, -c.params.alpha) /
                                    c.params.alpha) {}

  double kappa(double xd) const { return cfg.kill_constant * std::pow(xd, -cfg.params.alpha); }

  // One thinning proposal. Returns 0 = null event, 1 = killed, 2 = moved.
  int step(const HalfSpacePoint& x, double lam, RandomStream& rng, HalfSpacePoint& y) const {
    const double u = rng.uniform();
    if (u * lam < kappa(x.xd) || jump_rate == 0.0) return 1;
    const int d = cfg.params.d;
    const double r = cfg.eps_trunc * std::pow(rng.uniform(), -1.0 / cfg.params.alpha);
    double dir[3];
    if (d == 2) {
      const double t = 2.0 * kPi * rng.uniform();
      dir[0] = std::cos(t);
      dir[1] = std::sin(t);
    } else {
      const double c = 2.0 * rng.uniform() - 1.0, t = 2.0 * kPi * rng.uniform();
      const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
      dir[0] = s * std::cos(t);
      dir[1] = s * std::sin(t);
      dir[2] = c;
    }
    const double yd = x.xd + r * dir[d - 1];
    if (!(yd > 0.0)) {
      rng.uniform();  // keep the draw count per proposal fixed
      return 0;
    }
    const double acc = kern(std::min(yd, x.xd), std::max(yd, x.xd), r) / bbar;
    if (rng.uniform() >= acc) return 0;
    y.tilde = x.tilde;
    for (int k = 0; k < d - 1; ++k) y.tilde[k] += r * dir[k];
    y.xd = yd;
    return 2;
  }
};

void require_config(const SimConfig& cfg) {
  if (cfg.domain.dim() != cfg.params.d) throw Error(ErrorCode::kDimensionMismatch, "domain dimension differs");
  if (!(cfg.eps_trunc > 0.0 && cfg.eps_trunc < 0.5 * cfg.domain.height))
    throw Error(ErrorCode::kPrecondition, "eps_trunc must lie in (0, height/2)");
  if (cfg.n_paths < 1) throw Error(ErrorCode::kPrecondition, "n_paths must be >= 1");
}

void require_inside(const HalfSpacePoint& x, const SimConfig& cfg) {
  if (x.dim() != cfg.params.d) throw Error(ErrorCode::kDimensionMismatch, "point dimension differs");
  if (!cfg.domain.contains(x)) throw Error(ErrorCode::kPrecondition, "start point outside the domain");
}

// Runs one path; acc(x, lam) is called once per proposal with the current state.
template <class Acc>
Termination run_path(const Chain& ch, const HalfSpacePoint& x0, RandomStream& rng, Acc&& acc,
                     HalfSpacePoint* exit_point) {
  HalfSpacePoint x = x0, y = x0;
  for (long e = 0; e < ch.cfg.max_events; ++e) {
    const double lam = ch.jump_rate + ch.kappa(x.xd);
    acc(x, lam);
    const int s = ch.step(x, lam, rng, y);
    if (s == 1) return Termination::Killed;
    if (s == 2) {
      if (!ch.cfg.domain.contains(y)) {
        if (exit_point) *exit_point = y;
        return Termination::ExitedDomain;
      }
      std::swap(x, y);
    }
  }
  return Termination::Budget;
}

PathEstimate summarize(const std::vector<double>& v, long budget_paths) {
  const std::size_t n = v.size();
  PathEstimate out;
  out.mean = pairwise_sum(v.data(), n) / n;
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (v[i] - out.mean) * (v[i] - out.mean);
  const double var = n > 1 ? pairwise_sum(sq.data(), n) / (n - 1) : 0.0;
  out.std_error = std::sqrt(var / n);
  out.n_effective = static_cast<long>(n) - budget_paths;
  return out;
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t id) : key_(mix64(mix64(seed) ^ (id * 0xd1b54a32d192ed03ULL))) {}

double RandomStream::uniform() {
  const std::uint64_t z = mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL);
  return (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() {
  const double u1 = uniform(), u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::Killed: return "killed";
    case Termination::ExitedDomain: return "exited_domain";
    case Termination::Budget: return "budget";
  }
  return "unknown";
}

double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

SimConfig make_sim_config(const ModelParams& params, const BoxRegion& domain, long n_paths, std::uint64_t seed) {
  SimConfig c;
  c.params = validate_params(params);
  c.domain = domain;
  c.eps_trunc = domain.height / 200.0;
  c.n_paths = n_paths;
  c.seed = seed;
  c.kill_constant = normalizing_constant(c.params).value;
  require_config(c);
  return c;
}

double proposal_rate(const HalfSpacePoint& x, const SimConfig& cfg) {
  const Chain ch(cfg);
  return ch.jump_rate + ch.kappa(x.xd);
}

double total_rate(const HalfSpacePoint& x, const SimConfig& cfg) {
  require_config(cfg);
  if (!(x.xd > 0.0)) throw Error(ErrorCode::kNonPositiveCoordinate, "x_d must be > 0");
  const double kap = cfg.kill_constant * std::pow(x.xd, -cfg.params.alpha);
  if (cfg.jumps_off) return kap;
  const BtildeKernel kern(cfg.params);
  const double alpha = cfg.params.alpha, eps = cfg.eps_trunc, xd = x.xd;
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  // r = eps (1-u)^{-1/alpha}: int_eps^R r^{-1-alpha} phi(r) dr = eps^-alpha/alpha int_0^U phi du
  const auto ray = [&](double ez) {
    double umax = 1.0;
    if (ez < 0.0) {
      const double rmax = xd / -ez;
      if (rmax <= eps) return 0.0;
      umax = 1.0 - std::pow(eps / rmax, alpha);
    }
    const auto phi = [&](double u) {
      const double r = eps * std::pow(1.0 - u, -1.0 / alpha);
      const double yd = xd + r * ez;
      if (!(yd > 0.0) || !std::isfinite(r)) return 0.0;
      return kern(std::min(yd, xd), std::max(yd, xd), r);
    };
    return std::pow(eps, -alpha) / alpha * GK::integrate(phi, 0.0, umax, 10, 1e-10);
  };
  double jump = 0.0;
  if (cfg.params.d == 2) {
    // theta in (-pi/2, pi/2) and its mirror image
    const auto f = [&](double t) { return ray(std::sin(t)); };
    std::vector<double> br{-0.5 * kPi};
    if (xd < eps) br.push_back(-std::asin(xd / eps));
    br.push_back(0.0);
    br.push_back(0.5 * kPi);
    for (std::size_t k = 0; k + 1 < br.size(); ++k) jump += 2.0 * GK::integrate(f, br[k], br[k + 1], 12, 1e-9);
  } else {
    const auto f = [&](double c) { return ray(c); };
    std::vector<double> br{-1.0};
    if (xd < eps) br.push_back(-xd / eps);
    br.push_back(0.0);
    br.push_back(1.0);
    for (std::size_t k = 0; k + 1 < br.size(); ++k) jump += 2.0 * kPi * GK::integrate(f, br[k], br[k + 1], 12, 1e-9);
  }
  return jump + kap;
}

std::optional<HalfSpacePoint> sample_jump(const HalfSpacePoint& x, const SimConfig& cfg, RandomStream& rng,
                                          long* proposals) {
  require_inside(x, cfg);
  const Chain ch(cfg);
  const double lam = ch.jump_rate + ch.kappa(x.xd);
  HalfSpacePoint y = x;
  for (long k = 1; k <= cfg.max_events; ++k) {
    const int s = ch.step(x, lam, rng, y);
    if (s == 0) continue;
    if (proposals) *proposals = k;
    if (s == 1) return std::nullopt;
    return y;
  }
  throw Error(ErrorCode::kBudgetExceeded, "acceptance loop exceeded max_events");
}

PathRecord simulate_path(const HalfSpacePoint& x0, const SimConfig& cfg, RandomStream& rng) {
  require_config(cfg);
  require_inside(x0, cfg);
  const Chain ch(cfg);
  PathRecord rec;
  HalfSpacePoint held = x0;
  double clock = 0.0;
  bool first = true;
  // a proposal rate Exp(lam) clock thinned to the real events gives an
  // Exp(total_rate) holding time
  const auto acc = [&](const HalfSpacePoint& x, double lam) {
    if (first || !(x == held)) {
      if (!first) {
        rec.states.push_back(held);
        rec.holding_times.push_back(clock);
      }
      held = x;
      clock = 0.0;
      first = false;
    }
    clock += -std::log(rng.uniform()) / lam;
  };
  HalfSpacePoint exit_pt;
  rec.cause = run_path(ch, x0, rng, acc, &exit_pt);
  rec.states.push_back(held);
  rec.holding_times.push_back(clock);
  if (rec.cause == Termination::ExitedDomain) rec.exit_point = exit_pt;
  return rec;
}

PathEstimate estimate_killed_potential(const SimConfig& cfg, const HalfSpacePoint& x0, double gamma) {
  require_config(cfg);
  require_inside(x0, cfg);
  if (!(gamma > -cfg.params.p - 1.0)) throw Error(ErrorCode::kPrecondition, "gamma must exceed -p-1");
  const Chain ch(cfg);
  std::vector<double> v(cfg.n_paths);
  std::vector<unsigned char> budget(cfg.n_paths, 0);
  parallel_for(cfg.n_paths, cfg.threads, [&](long i) {
    RandomStream rng(cfg.seed, static_cast<std::uint64_t>(i));
    double s = 0.0;
    // expected time per proposal is 1/lam; summing it is the conditional
    // expectation of the exponential clock
    const auto acc = [&](const HalfSpacePoint& x, double lam) { s += std::pow(x.xd, gamma) / lam; };
    budget[i] = run_path(ch, x0, rng, acc, nullptr) == Termination::Budget;
    v[i] = s;
  });
  long nb = 0;
  for (unsigned char b : budget) nb += b;
  return summarize(v, nb);
}

PathEstimate estimate_exit_distribution(const SimConfig& cfg, const HalfSpacePoint& x0,
                                        const std::vector<Box>& target) {
  require_config(cfg);
  require_inside(x0, cfg);
  for (const Box& b : target)
    if (b.dim() != cfg.params.d) throw Error(ErrorCode::kDimensionMismatch, "target box dimension differs");
  const Chain ch(cfg);
  std::vector<double> v(cfg.n_paths);
  std::vector<unsigned char> budget(cfg.n_paths, 0);
  parallel_for(cfg.n_paths, cfg.threads, [&](long i) {
    RandomStream rng(cfg.seed, static_cast<std::uint64_t>(i));
    HalfSpacePoint y;
    const Termination t = run_path(ch, x0, rng, [](const HalfSpacePoint&, double) {}, &y);
    budget[i] = t == Termination::Budget;
    v[i] = t == Termination::ExitedDomain && in_target(y, target) ? 1.0 : 0.0;
  });
  long nb = 0;
  for (unsigned char b : budget) nb += b;
  return summarize(v, nb);
}

}  // namespace gfd
