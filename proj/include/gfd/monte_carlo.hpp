#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gfd/kernel.hpp"
#include "gfd/quadrature.hpp"

namespace gfd {

struct SimConfig {
  ModelParams params;
  BoxRegion domain;
  /// Jumps shorter than this are discarded.
  double eps_trunc = 0.005;
  long n_paths = 1000;
  std::uint64_t seed = 0;
  long max_events = 50'000'000;
  /// Killing constant C(alpha, p, B~).
  double kill_constant = 1.0;
  int threads = 0;
  /// Test hook: suppresses jumps so that only killing remains.
  bool jumps_off = false;
};

/// Validated configuration with eps = height/200 and the killing constant
/// computed for params.
SimConfig make_sim_config(const ModelParams& params, const BoxRegion& domain, long n_paths, std::uint64_t seed);

struct PathEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long n_effective = 0;
};

/// Counter-based random stream: the k-th draw of stream (seed, id) is a pure
/// function of (seed, id, k).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t id);
  /// Uniform on (0, 1).
  double uniform();
  double normal();
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// lambda(x) = int_{|y-x|>eps} J(x,y) dy + kappa(x), by quadrature.
double total_rate(const HalfSpacePoint& x, const SimConfig& cfg);

/// Rate of the thinning proposal, an upper bound of total_rate.
double proposal_rate(const HalfSpacePoint& x, const SimConfig& cfg);

/// Next state of the chain from x, or nullopt for the cemetery. The number
/// of proposals used (including rejected ones) goes to *proposals.
std::optional<HalfSpacePoint> sample_jump(const HalfSpacePoint& x, const SimConfig& cfg, RandomStream& rng,
                                          long* proposals = nullptr);

enum class Termination { Killed, ExitedDomain, Budget };

const char* to_string(Termination t);

struct PathRecord {
  std::vector<double> holding_times;
  std::vector<HalfSpacePoint> states;  // states[k] is held for holding_times[k]
  std::optional<HalfSpacePoint> exit_point;
  Termination cause = Termination::Budget;
};

PathRecord simulate_path(const HalfSpacePoint& x0, const SimConfig& cfg, RandomStream& rng);

/// E_x int_0^tau (Y^d)^gamma dt for the process killed on leaving the domain.
PathEstimate estimate_killed_potential(const SimConfig& cfg, const HalfSpacePoint& x0, double gamma);

/// P_x(exit lands in the union of target boxes); an empty target list means
/// the whole exterior of the domain. Boxes are given as (lateral, height).
PathEstimate estimate_exit_distribution(const SimConfig& cfg, const HalfSpacePoint& x0,
                                        const std::vector<Box>& target);

/// Order-fixed pairwise sum.
double pairwise_sum(const double* v, std::size_t n);

}  // namespace gfd
