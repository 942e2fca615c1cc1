#include "dadpfl/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>

#include "dadpfl/data.hpp"
#include "dadpfl/errors.hpp"

namespace dadpfl {

FlatModel aggregate_masked(MaskedModelRef own, std::span<const MaskedModelRef> neighbours) {
  const std::size_t n = own.model->size();
  auto check = [&](const MaskedModelRef& r) {
    if (r.model->size() != n || r.mask->shapes() != own.mask->shapes() || r.model->shapes() != own.model->shapes())
      throw InvalidParameter("aggregate_masked: dimension mismatch");
  };
  check(own);
  for (const auto& r : neighbours) check(r);

  std::vector<float> num(own.model->flat().begin(), own.model->flat().end());
  std::vector<std::uint32_t> den(n, 0);
  const auto own_mask = own.mask->flat();
  for (std::size_t i = 0; i < n; ++i) den[i] = own_mask[i];
  for (const auto& r : neighbours) {
    const auto w = r.model->flat();
    const auto m = r.mask->flat();
    for (std::size_t i = 0; i < n; ++i) {
      num[i] += w[i];
      den[i] += m[i];
    }
  }

  FlatModel out(own.model->shapes());
  auto o = out.flat();
  for (std::size_t i = 0; i < n; ++i) o[i] = own_mask[i] ? num[i] / static_cast<float>(den[i]) : 0.0f;
  return out;
}

int detection_vote(std::span<const double> h, double delta_pr) {
  if (h.empty()) throw InvalidParameter("detection_vote: empty history");
  const double norm = std::abs(h[0]);
  if (norm == 0.0) return 0;
  const double prev = h.size() >= 2 ? h[h.size() - 2] : 0.0;
  return std::abs(h.back() - prev) / norm < delta_pr ? 1 : 0;
}

std::optional<std::size_t> compute_t_star(std::span<const double> fractions, double delta_v, TStarRule rule) {
  for (std::size_t t = 0; t < fractions.size(); ++t) {
    const bool fire = rule == TStarRule::Adopted ? fractions[t] >= delta_v : fractions[t] < delta_v;
    if (fire) return t + 1;
  }
  return std::nullopt;
}

std::vector<std::size_t> pruning_schedule(std::size_t t_star, double b, double c, std::size_t T) {
  if (t_star < 1) throw InvalidParameter("pruning_schedule: t* must be >= 1");
  if (!(c > 0.0)) throw InvalidParameter("pruning_schedule: c must be > 0");
  if (b < 0.0) throw InvalidParameter("pruning_schedule: b must be >= 0");
  std::vector<std::size_t> out;
  std::size_t t = 0;
  for (std::size_t tau = 1;; ++tau) {
    const double gap = std::ceil((double(t_star) + b) / std::pow(c, double(tau - 1)));
    if (gap <= 1.0) {
      for (std::size_t r = std::max(t + 1, t_star + 1); r < T; ++r) out.push_back(r);
      break;
    }
    if (double(t) + gap >= double(T)) break;
    t += static_cast<std::size_t>(gap);
    if (t > t_star) out.push_back(t);
  }
  return out;
}

bool PruningPlan::scheduled(std::size_t round) const {
  return std::binary_search(schedule.begin(), schedule.end(), round);
}

double round_client_flops(const ExperimentConfig& cfg, const MaskSet& mask, std::size_t train_samples) {
  const auto& shapes = mask.shapes();
  const auto dens = mask.densities();
  const std::vector<double> dense(shapes.size(), 1.0);
  const double grad_batch = double(std::min(cfg.batch_size, train_samples));
  return training_flops(shapes, dens, double(cfg.E_l) * double(train_samples)) +
         training_flops(shapes, dense, grad_batch);
}

namespace {

struct Snapshot {
  FlatModel model;
  MaskSet mask;
};

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = double(a[i]) - double(b[i]);
    s += d * d;
  }
  return s;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errs(n);
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          errs[i] = std::current_exception();
        }
      }
    });
  pool.clear();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace

RoundReport run_round(std::vector<ClientState>& states, const RoundSchedule& schedule, PruningPlan& plan,
                      std::vector<double>& vote_fractions, CostLedger& ledger, const ExperimentConfig& cfg,
                      std::size_t round, std::size_t workers) {
  const std::size_t K = states.size();
  if (schedule.num_clients() != K) throw InvalidParameter("run_round: schedule does not match client count");
  const SeedTree seeds(cfg.seed);

  RoundReport rep;
  rep.metrics.round = round;

  std::vector<double> flops(K);
  for (std::size_t k = 0; k < K; ++k) flops[k] = round_client_flops(cfg, states[k].mask, states[k].train.size());
  std::vector<double> durations(K);
  for (std::size_t k = 0; k < K; ++k) durations[k] = std::max(energy_time(flops[k], 0.0, cfg.cost).t_comp, 1e-12);
  rep.timing = simulate_round_timing(schedule, durations);

  // Dependency levels of the waiting DAG; a level only reads lower levels.
  std::vector<std::size_t> level(K, 0);
  std::size_t depth = 0;
  for (ClientId k : schedule.processing_order()) {
    for (ClientId j : rep.timing.waiting_set[k]) level[k] = std::max(level[k], level[j] + 1);
    depth = std::max(depth, level[k] + 1);
  }
  std::vector<std::vector<ClientId>> by_level(depth);
  for (ClientId k : schedule.processing_order()) by_level[level[k]].push_back(k);

  std::vector<Snapshot> previous;
  previous.reserve(K);
  for (const auto& s : states) previous.push_back({s.model, s.mask});
  std::vector<Snapshot> fresh(K);

  rep.provenance.resize(K);
  std::vector<int> votes(K, 0);
  std::vector<std::vector<PruneEvent>> events(K);
  std::vector<bool> pruned(K, false);
  std::vector<std::size_t> capped(K, 0);
  const bool sap_round = cfg.further_pruning && plan.scheduled(round);
  const double lr = cfg.lr * std::pow(cfg.lr_decay, double(round - 1));

  auto step = [&](ClientId k) {
    ClientState& st = states[k];
    const auto& awaited = rep.timing.waiting_set[k];
    std::vector<MaskedModelRef> contrib;
    Provenance& prov = rep.provenance[k];
    prov.previous = 1;  // own pre-training model
    for (ClientId j : schedule.neighborhoods[k]) {
      if (std::find(awaited.begin(), awaited.end(), j) != awaited.end()) {
        contrib.push_back({&fresh[j].model, &fresh[j].mask});
        ++prov.fresh;
        prov.fresh_from.push_back(j);
      } else {
        contrib.push_back({&previous[j].model, &previous[j].mask});
        ++prov.previous;
      }
    }
    FlatModel model = aggregate_masked({&previous[k].model, &previous[k].mask}, contrib);
    MaskSet mask = previous[k].mask;

    Rng train_rng = seeds.stream("training", round, k);
    SgdOptions opts{cfg.E_l, lr, cfg.weight_decay, cfg.batch_size};
    model = local_train(std::move(model), mask, st.train, opts, train_rng).model;

    st.delta_history.push_back(squared_distance(model.flat(), st.initial_model.flat()));
    votes[k] = detection_vote(st.delta_history, cfg.delta_pr);
    st.vote_history.push_back(votes[k]);

    if (sap_round && sparsity(mask) < plan.target_sparsity) {
      auto res = sap_prune(std::move(model), std::move(mask), cfg.pqi, round);
      model = std::move(res.model);
      mask = std::move(res.mask);
      events[k] = std::move(res.events);
      pruned[k] = true;
    }

    Rng rigl_rng = seeds.stream("rigl", round, k);
    const auto grad = dense_batch_gradient(model, st.train, cfg.batch_size, rigl_rng);
    auto rg = rigl_update(std::move(model), std::move(mask), grad, std::min(round, cfg.T), cfg.T, cfg.rigl_alpha);
    capped[k] = rg.capped_drops;
    fresh[k] = {std::move(rg.model), std::move(rg.mask)};
  };

  for (const auto& lvl : by_level) parallel_for(lvl.size(), workers, [&](std::size_t i) { step(lvl[i]); });

  // Broadcast.
  std::vector<double> bytes(K);
  std::vector<double> acc(K);
  double sp_sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    ClientState& st = states[k];
    st.model = std::move(fresh[k].model);
    st.mask = std::move(fresh[k].mask);
    st.current_sparsity = sparsity(st.mask);
    sp_sum += st.current_sparsity;
    bytes[k] = double(cfg.M) * double(comm_bytes(st.mask));
    acc[k] = st.test.empty() ? 0.0 : evaluate(st.model, st.test).accuracy;
    if (pruned[k]) {
      rep.sap_clients.push_back(k);
      for (const auto& e : events[k]) rep.prune_events.push_back({k, e});
    }
    rep.rigl_capped_drops += capped[k];
  }

  double vote_sum = 0.0;
  for (int v : votes) vote_sum += v;
  rep.vote_fraction = vote_sum / double(K);
  vote_fractions.push_back(rep.vote_fraction);
  if (!plan.t_star) {
    const double f = rep.vote_fraction;
    const bool fire = cfg.tstar_rule == TStarRule::Adopted ? f >= cfg.delta_v : f < cfg.delta_v;
    if (fire) {
      plan.t_star = round;
      plan.schedule = pruning_schedule(round, plan.b, plan.c, cfg.T);
      rep.metrics.t_star_flag = 1;
    }
  }

  ledger.add_round(flops, bytes, rep.timing.makespan, cfg.cost);

  double mean = 0.0;
  for (double a : acc) mean += a;
  mean /= double(K);
  double var = 0.0;
  for (double a : acc) var += (a - mean) * (a - mean);
  rep.metrics.mean_acc = mean;
  rep.metrics.std_acc = std::sqrt(var / double(K));
  rep.metrics.mean_sparsity = sp_sum / double(K);
  rep.metrics.sap_events = rep.sap_clients.size();
  rep.metrics.busiest_comm_bytes = ledger.busiest_bytes_per_round.back();
  rep.metrics.cum_flops = ledger.cum_flops;
  rep.metrics.round_makespan_s = rep.timing.makespan;
  rep.metrics.cum_energy_j = ledger.c_energy;
  return rep;
}

Dataset build_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset.kind == DatasetConfig::Kind::Csv) return load_csv(cfg.dataset.path);
  const SeedTree seeds(cfg.seed);
  Rng rng = seeds.stream("data");
  return make_blobs({cfg.dataset.classes, cfg.dataset.dim, cfg.dataset.samples_per_client * cfg.K,
                     cfg.dataset.center_scale, cfg.dataset.blob_sigma},
                    rng);
}

Partition build_partition(const ExperimentConfig& cfg, const Dataset& data) {
  Rng rng = SeedTree(cfg.seed).stream("partition");
  if (cfg.partition.kind == PartitionConfig::Kind::Dirichlet)
    return partition_dirichlet(data.labels, cfg.K, cfg.partition.alpha, rng);
  return partition_pathological(data.labels, cfg.K, cfg.partition.n_cls, rng);
}

std::vector<ClientState> initialize_clients(const ExperimentConfig& cfg) {
  if (auto errs = validate(cfg); !errs.empty()) throw ConfigError(std::move(errs));
  const SeedTree seeds(cfg.seed);

  const Dataset data = build_dataset(cfg);
  const Partition parts = build_partition(cfg, data);

  auto shapes = mlp_shapes(data.dim, cfg.hidden, data.classes);
  Rng init_rng = seeds.stream("init");
  const FlatModel init = init_model(shapes, init_rng);

  std::vector<ClientState> states(cfg.K);
  for (std::size_t k = 0; k < cfg.K; ++k) {
    ClientState& st = states[k];
    Rng hrng = seeds.stream("holdout", k);
    auto split = split_holdout(make_shard(data, parts[k], k), cfg.holdout_fraction, hrng);
    st.train = std::move(split.train);
    st.test = std::move(split.test);
    Rng mrng = seeds.stream("mask", k);
    st.mask = erk_init(shapes, cfg.initial_density, mrng);
    st.model = init;
    apply_mask(st.model, st.mask);
    st.initial_model = st.model;
    st.current_sparsity = sparsity(st.mask);
  }
  return states;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::size_t workers) {
  ExperimentResult res;
  auto states = initialize_clients(cfg);
  const SeedTree seeds(cfg.seed);
  res.plan.b = cfg.b;
  res.plan.c = cfg.c;
  res.plan.target_sparsity = cfg.target_sparsity;
  res.ledger = CostLedger(cfg.K);

  for (std::size_t t = 1; t <= cfg.T; ++t) {
    Rng topo = seeds.stream("topology", t);
    const auto sched = sample_round_schedule(cfg.K, cfg.M, cfg.N, topo, t, cfg.topology);
    auto rep = run_round(states, sched, res.plan, res.vote_fractions, res.ledger, cfg, t, workers);
    res.metrics.push_back(rep.metrics);
    res.prune_events.push_back(std::move(rep.prune_events));
    double d = 0.0;
    for (const auto& s : states) d += s.delta_history.back();
    res.mean_delta.push_back(d / double(states.size()));
  }
  res.final_states = std::move(states);
  return res;
}

std::string metrics_csv(std::span<const MetricsRow> rows) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "round,mean_acc,std_acc,mean_sparsity,t_star_flag,sap_events,busiest_comm_bytes,cum_flops,round_makespan_s,"
        "cum_energy_J\n";
  for (const auto& r : rows)
    os << r.round << ',' << r.mean_acc << ',' << r.std_acc << ',' << r.mean_sparsity << ',' << r.t_star_flag << ','
       << r.sap_events << ',' << r.busiest_comm_bytes << ',' << r.cum_flops << ',' << r.round_makespan_s << ','
       << r.cum_energy_j << '\n';
  return os.str();
}

std::string prune_events_csv(const std::vector<std::vector<PruneRecord>>& per_round, std::span<const MetricsRow> rows) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "round,client,layer,pq_index,pruned,density\n";
  for (std::size_t i = 0; i < per_round.size(); ++i)
    for (const auto& r : per_round[i])
      os << (i < rows.size() ? rows[i].round : i + 1) << ',' << r.client << ',' << r.event.layer << ','
         << r.event.pq_index << ',' << r.event.pruned_count << ',' << r.event.resulting_density << '\n';
  return os.str();
}

}  // namespace dadpfl
