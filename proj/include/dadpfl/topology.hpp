#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dadpfl/rng.hpp"

namespace dadpfl {

using ClientId = std::size_t;

enum class Topology { Random, Ring, FullyConnected };

Topology parse_topology(const std::string& name);
std::string to_string(Topology t);

// One communication round's neighbourhoods and reuse-index ordering.
//
// reuse_index[k] is in 1..K and forms a permutation. prior[k] holds the
// neighbours of k with a smaller reuse index; those are the only clients k
// may wait for, so every waiting edge points from a lower to a higher index
// and the waiting graph is acyclic. Which prior neighbours are actually
// awaited (at most `wait_limit`) is decided by simulate_round_timing once
// durations are known.
struct RoundSchedule {
  std::size_t round = 1;
  std::size_t wait_limit = 0;  // N
  std::vector<std::size_t> reuse_index;
  std::vector<std::vector<ClientId>> neighborhoods;
  std::vector<std::vector<ClientId>> prior;
  std::vector<std::vector<ClientId>> posterior;

  std::size_t num_clients() const { return reuse_index.size(); }
  // Clients sorted by ascending reuse index (a topological order of the waiting DAG).
  std::vector<ClientId> processing_order() const;
  std::size_t waiting_size(ClientId k) const;
};

// Builds the prior/posterior split from explicit neighbourhoods and reuse
// indices. Validates every RoundSchedule invariant.
RoundSchedule make_round_schedule(std::size_t round, std::size_t wait_limit,
                                  std::vector<std::size_t> reuse_index,
                                  std::vector<std::vector<ClientId>> neighborhoods);

// Neighbourhood sizes must equal M for the random topology; ring uses the
// M nearest successors on the ring and fully-connected forces M = K-1.
RoundSchedule sample_round_schedule(std::size_t K, std::size_t M, std::size_t N, Rng& rng,
                                    std::size_t round = 1, Topology topology = Topology::Random);

// P(|prior set of the client with reuse index k| = m) under uniform M-subsets.
double hypergeometric_pmf(std::size_t m, std::size_t k, std::size_t K, std::size_t M);

struct TimingResult {
  std::vector<double> start_time;
  std::vector<double> finish_time;
  std::vector<std::vector<ClientId>> waiting_set;  // awaited prior neighbours
  double makespan = 0.0;
  double parallelism = 0.0;  // fraction of clients starting at t = 0
  double max_wait = 0.0;     // largest start time in the round
  double mean_wait = 0.0;    // start time averaged over clients
};

TimingResult simulate_round_timing(const RoundSchedule& schedule, std::span<const double> durations);

struct DurationModel {
  enum class Kind { Constant, Uniform, LogNormal };
  Kind kind = Kind::Constant;
  double a = 1.0;  // constant value | uniform low  | lognormal mu
  double b = 1.0;  //                | uniform high | lognormal sigma

  static DurationModel constant(double v) { return {Kind::Constant, v, v}; }
  void validate() const;
  double sample(Rng& rng) const;
};

struct Quantiles {
  double p05 = 0.0, p50 = 0.0, p95 = 0.0;
};

struct ParallelismSummary {
  std::size_t iterations = 0;
  double mean_parallelism = 0.0;
  double mean_max_wait = 0.0;
  double mean_client_wait = 0.0;
  double mean_makespan = 0.0;
  Quantiles parallelism_q;
  Quantiles max_wait_q;
  Quantiles client_wait_q;
};

ParallelismSummary estimate_parallelism_delay(std::size_t K, std::size_t M, std::size_t N,
                                              std::size_t iterations, const DurationModel& durations,
                                              Rng& rng, Topology topology = Topology::Random);

}  // namespace dadpfl
