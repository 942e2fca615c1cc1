#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dadpfl/config.hpp"
#include "dadpfl/cost.hpp"
#include "dadpfl/data.hpp"
#include "dadpfl/learner.hpp"
#include "dadpfl/sparse.hpp"
#include "dadpfl/topology.hpp"

namespace dadpfl {

struct MaskedModelRef {
  const FlatModel* model = nullptr;
  const MaskSet* mask = nullptr;
};

// Coordinate-wise masked average over {own} + neighbours:
//   out_i = (sum_j w_{j,i}) / (sum_j m_{j,i}) * m_{own,i},  0/0 -> 0.
// Every model must already be mask-consistent.
FlatModel aggregate_masked(MaskedModelRef own, std::span<const MaskedModelRef> neighbours);

// Pruning-readiness vote for the latest entry of `delta_history`
// (history[0] is round 1). Round 1 compares against an implicit 0.
int detection_vote(std::span<const double> delta_history, double delta_pr);

// First round (1-based) whose mean vote satisfies the rule; nullopt if none.
std::optional<std::size_t> compute_t_star(std::span<const double> vote_fractions, double delta_v,
                                          TStarRule rule = TStarRule::Adopted);

// Rounds t_p = sum_{tau <= p} ceil((t* + b) / c^(tau-1)) with t* < t_p < T.
// Once a gap reaches 1 every later round up to T-1 is included.
std::vector<std::size_t> pruning_schedule(std::size_t t_star, double b, double c, std::size_t T);

struct ClientState {
  FlatModel model;  // broadcast at the end of the previous round
  MaskSet mask;
  DataShard train;
  DataShard test;
  FlatModel initial_model;  // snapshot after ERK masking
  std::vector<double> delta_history;
  std::vector<int> vote_history;
  double current_sparsity = 0.0;
};

struct PruningPlan {
  std::optional<std::size_t> t_star;
  std::vector<std::size_t> schedule;
  double b = 0.0;
  double c = 1.3;
  double target_sparsity = 0.8;

  bool scheduled(std::size_t round) const;
};

// Which model vintages a client aggregated in one round.
struct Provenance {
  std::size_t fresh = 0;     // awaited prior neighbours' round-t outputs
  std::size_t previous = 0;  // round t-1 broadcasts, own included
  std::vector<ClientId> fresh_from;
};

struct PruneRecord {
  std::size_t client = 0;
  PruneEvent event;
};

struct MetricsRow {
  std::size_t round = 0;
  double mean_acc = 0.0;
  double std_acc = 0.0;
  double mean_sparsity = 0.0;
  int t_star_flag = 0;
  std::size_t sap_events = 0;
  double busiest_comm_bytes = 0.0;
  double cum_flops = 0.0;
  double round_makespan_s = 0.0;
  double cum_energy_j = 0.0;
};

struct RoundReport {
  MetricsRow metrics;
  double vote_fraction = 0.0;
  std::vector<Provenance> provenance;
  std::vector<PruneRecord> prune_events;
  std::vector<std::size_t> sap_clients;
  TimingResult timing;
  std::size_t rigl_capped_drops = 0;
};

// Per-client training + RigL compute of one round, in FLOPs.
double round_client_flops(const ExperimentConfig& cfg, const MaskSet& mask, std::size_t train_samples);

// Executes one communication round. Clients run in waiting-DAG order, with
// up to `workers` clients of one dependency level in flight at once; the
// outcome does not depend on `workers`.
RoundReport run_round(std::vector<ClientState>& states, const RoundSchedule& schedule, PruningPlan& plan,
                      std::vector<double>& vote_fractions, CostLedger& ledger, const ExperimentConfig& cfg,
                      std::size_t round, std::size_t workers = 1);

struct ExperimentResult {
  std::vector<MetricsRow> metrics;
  std::vector<std::vector<PruneRecord>> prune_events;  // per round
  PruningPlan plan;
  CostLedger ledger;
  std::vector<double> vote_fractions;
  std::vector<double> mean_delta;  // per round, averaged over clients
  std::vector<ClientState> final_states;
};

// Dataset and client partition named by the config, drawn from the "data"
// and "partition" seed streams.
Dataset build_dataset(const ExperimentConfig& cfg);
std::vector<std::vector<std::size_t>> build_partition(const ExperimentConfig& cfg, const Dataset& data);

// Builds data, shards and initial states.
std::vector<ClientState> initialize_clients(const ExperimentConfig& cfg);

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::size_t workers = 1);

std::string metrics_csv(std::span<const MetricsRow> rows);
std::string prune_events_csv(const std::vector<std::vector<PruneRecord>>& per_round, std::span<const MetricsRow> rows);

}  // namespace dadpfl
