#include "dadpfl/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dadpfl/errors.hpp"

namespace dadpfl {

Topology parse_topology(const std::string& name) {
  if (name == "random") return Topology::Random;
  if (name == "ring") return Topology::Ring;
  if (name == "fully-connected") return Topology::FullyConnected;
  throw InvalidParameter("unknown topology '" + name + "' (expected random | ring | fully-connected)");
}

std::string to_string(Topology t) {
  switch (t) {
    case Topology::Random: return "random";
    case Topology::Ring: return "ring";
    case Topology::FullyConnected: return "fully-connected";
  }
  return "random";
}

std::vector<ClientId> RoundSchedule::processing_order() const {
  std::vector<ClientId> order(reuse_index.size());
  for (ClientId k = 0; k < reuse_index.size(); ++k) order[reuse_index[k] - 1] = k;
  return order;
}

std::size_t RoundSchedule::waiting_size(ClientId k) const {
  return std::min(wait_limit, prior[k].size());
}

RoundSchedule make_round_schedule(std::size_t round, std::size_t wait_limit,
                                  std::vector<std::size_t> reuse_index,
                                  std::vector<std::vector<ClientId>> neighborhoods) {
  const std::size_t K = reuse_index.size();
  if (K == 0 || neighborhoods.size() != K)
    throw InvalidParameter("schedule: reuse index and neighbourhood counts differ");

  std::vector<bool> seen(K + 1, false);
  for (std::size_t r : reuse_index) {
    if (r < 1 || r > K || seen[r]) throw InvalidParameter("schedule: reuse index is not a permutation of 1..K");
    seen[r] = true;
  }

  RoundSchedule s;
  s.round = round;
  s.wait_limit = wait_limit;
  s.prior.resize(K);
  s.posterior.resize(K);
  for (ClientId k = 0; k < K; ++k) {
    auto& g = neighborhoods[k];
    std::sort(g.begin(), g.end());
    if (std::adjacent_find(g.begin(), g.end()) != g.end())
      throw InvalidParameter("schedule: duplicate neighbour");
    s.prior[k].reserve(g.size());
    s.posterior[k].reserve(g.size());
    for (ClientId j : g) {
      if (j >= K || j == k) throw InvalidParameter("schedule: neighbour out of range or self");
      (reuse_index[j] < reuse_index[k] ? s.prior[k] : s.posterior[k]).push_back(j);
    }
  }
  s.reuse_index = std::move(reuse_index);
  s.neighborhoods = std::move(neighborhoods);
  return s;
}

namespace {

// Partial Fisher-Yates over the pool {0..K-1} \ {self}. Small subsets store
// only the displaced slots; both paths consume identical draws.
std::vector<ClientId> uniform_subset(ClientId self, std::size_t K, std::size_t M, Rng& rng) {
  if (M * M > K) {
    std::vector<ClientId> pool;
    pool.reserve(K - 1);
    for (ClientId j = 0; j < K; ++j)
      if (j != self) pool.push_back(j);
    for (std::size_t i = 0; i < M; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(M);
    return pool;
  }
  auto base = [&](std::size_t pos) { return pos < self ? pos : pos + 1; };
  thread_local std::vector<std::pair<std::size_t, ClientId>> moved;
  moved.clear();
  auto at = [&](std::size_t pos) {
    for (const auto& [p, v] : moved)
      if (p == pos) return v;
    return base(pos);
  };
  auto put = [&](std::size_t pos, ClientId v) {
    for (auto& [p, x] : moved)
      if (p == pos) {
        x = v;
        return;
      }
    moved.emplace_back(pos, v);
  };
  std::vector<ClientId> out(M);
  for (std::size_t i = 0; i < M; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, K - 2);
    const std::size_t j = pick(rng);
    const ClientId vi = at(i), vj = at(j);
    out[i] = vj;
    put(j, vi);
  }
  return out;
}

std::vector<ClientId> ring_neighbours(ClientId self, std::size_t K, std::size_t M) {
  std::vector<ClientId> out;
  for (std::size_t step = 1; out.size() < M; ++step) {
    out.push_back((self + step) % K);
    if (out.size() < M) out.push_back((self + K - step) % K);
  }
  return out;
}

}  // namespace

RoundSchedule sample_round_schedule(std::size_t K, std::size_t M, std::size_t N, Rng& rng,
                                    std::size_t round, Topology topology) {
  if (K < 2) throw InvalidParameter("K must be at least 2");
  if (M < 1 || M >= K) throw InvalidParameter("M must satisfy 1 <= M <= K-1");
  if (N > M) throw InvalidParameter("N must not exceed M");
  if (topology == Topology::FullyConnected && M != K - 1)
    throw InvalidParameter("fully-connected topology requires M = K-1");

  std::vector<std::vector<ClientId>> hoods(K);
  for (ClientId k = 0; k < K; ++k) {
    switch (topology) {
      case Topology::Random: hoods[k] = uniform_subset(k, K, M, rng); break;
      case Topology::Ring: hoods[k] = ring_neighbours(k, K, M); break;
      case Topology::FullyConnected: hoods[k] = uniform_subset(k, K, K - 1, rng); break;
    }
  }

  std::vector<std::size_t> reuse(K);
  std::iota(reuse.begin(), reuse.end(), std::size_t{1});
  std::shuffle(reuse.begin(), reuse.end(), rng);
  return make_round_schedule(round, N, std::move(reuse), std::move(hoods));
}

namespace {

long double log_choose(long double n, long double r) {
  return std::lgamma(n + 1.0L) - std::lgamma(r + 1.0L) - std::lgamma(n - r + 1.0L);
}

}  // namespace

double hypergeometric_pmf(std::size_t m, std::size_t k, std::size_t K, std::size_t M) {
  if (K < 2 || k < 1 || k > K || M > K - 1 || m > M)
    throw InvalidParameter("hypergeometric_pmf: need 1 <= k <= K, 0 <= m <= M <= K-1");
  const std::size_t lower = k - 1;  // clients with a smaller reuse index
  const std::size_t upper = K - k;  // clients with a larger reuse index
  if (m > lower || M - m > upper) return 0.0;
  const long double lp = log_choose(lower, m) + log_choose(upper, M - m) - log_choose(K - 1, M);
  return static_cast<double>(std::exp(lp));
}

TimingResult simulate_round_timing(const RoundSchedule& schedule, std::span<const double> durations) {
  const std::size_t K = schedule.num_clients();
  if (durations.size() != K) throw InvalidParameter("timing: one duration per client required");
  for (double d : durations)
    if (!(d > 0.0)) throw InvalidParameter("timing: durations must be strictly positive");

  TimingResult res;
  res.start_time.assign(K, 0.0);
  res.finish_time.assign(K, 0.0);
  res.waiting_set.assign(K, {});

  std::size_t immediate = 0;
  for (ClientId k : schedule.processing_order()) {
    const std::size_t w = schedule.waiting_size(k);
    if (w > 0) {
      // Every prior neighbour has a smaller reuse index, so it is already timed.
      std::vector<ClientId> cand = schedule.prior[k];
      std::stable_sort(cand.begin(), cand.end(), [&](ClientId a, ClientId b) {
        if (res.finish_time[a] != res.finish_time[b]) return res.finish_time[a] < res.finish_time[b];
        return schedule.reuse_index[a] < schedule.reuse_index[b];
      });
      cand.resize(w);
      res.start_time[k] = res.finish_time[cand.back()];
      res.waiting_set[k] = std::move(cand);
    } else {
      ++immediate;
    }
    res.finish_time[k] = res.start_time[k] + durations[k];
  }

  res.makespan = *std::max_element(res.finish_time.begin(), res.finish_time.end());
  res.max_wait = *std::max_element(res.start_time.begin(), res.start_time.end());
  res.mean_wait = std::accumulate(res.start_time.begin(), res.start_time.end(), 0.0) / double(K);
  res.parallelism = double(immediate) / double(K);
  return res;
}

void DurationModel::validate() const {
  switch (kind) {
    case Kind::Constant:
      if (!(a > 0.0)) throw InvalidParameter("constant duration must be > 0");
      break;
    case Kind::Uniform:
      if (!(a > 0.0) || !(b >= a)) throw InvalidParameter("uniform duration needs 0 < low <= high");
      break;
    case Kind::LogNormal:
      if (!std::isfinite(a) || !(b > 0.0)) throw InvalidParameter("lognormal duration needs finite mu and sigma > 0");
      break;
  }
}

double DurationModel::sample(Rng& rng) const {
  switch (kind) {
    case Kind::Constant: return a;
    case Kind::Uniform:
      if (a == b) return a;
      return std::uniform_real_distribution<double>(a, b)(rng);
    case Kind::LogNormal: return std::lognormal_distribution<double>(a, b)(rng);
  }
  return a;
}

namespace {

// Linear interpolation between order statistics.
double quantile(std::vector<double>& v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * double(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - double(lo)) * (v[hi] - v[lo]);
}

Quantiles quantiles(std::vector<double> v) {
  return {quantile(v, 0.05), quantile(v, 0.50), quantile(v, 0.95)};
}

}  // namespace

ParallelismSummary estimate_parallelism_delay(std::size_t K, std::size_t M, std::size_t N,
                                              std::size_t iterations, const DurationModel& durations,
                                              Rng& rng, Topology topology) {
  if (iterations < 1) throw InvalidParameter("iterations must be >= 1");
  durations.validate();

  std::vector<double> par, maxw, clientw;
  par.reserve(iterations);
  maxw.reserve(iterations);
  clientw.reserve(iterations);
  ParallelismSummary out;
  out.iterations = iterations;
  std::vector<double> d(K);
  for (std::size_t it = 0; it < iterations; ++it) {
    const RoundSchedule s = sample_round_schedule(K, M, N, rng, it + 1, topology);
    for (double& x : d) x = durations.sample(rng);
    const TimingResult t = simulate_round_timing(s, d);
    par.push_back(t.parallelism);
    maxw.push_back(t.max_wait);
    clientw.push_back(t.mean_wait);
    out.mean_makespan += t.makespan;
  }
  const double n = double(iterations);
  out.mean_parallelism = std::accumulate(par.begin(), par.end(), 0.0) / n;
  out.mean_max_wait = std::accumulate(maxw.begin(), maxw.end(), 0.0) / n;
  out.mean_client_wait = std::accumulate(clientw.begin(), clientw.end(), 0.0) / n;
  out.mean_makespan /= n;
  out.parallelism_q = quantiles(std::move(par));
  out.max_wait_q = quantiles(std::move(maxw));
  out.client_wait_q = quantiles(std::move(clientw));
  return out;
}

}  // namespace dadpfl
