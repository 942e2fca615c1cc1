#pragma once
// Independent reference computations used to derive and check expected
// values. Nothing here calls into the code paths it checks.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "dadpfl/learner.hpp"

namespace oracle {

// Distribution of the prior-set size for the client with reuse index k by
// enumerating every M-subset of the other K-1 clients.
inline std::vector<double> enumerate_prior_counts(std::size_t k, std::size_t K, std::size_t M) {
  std::vector<std::size_t> others;
  for (std::size_t r = 1; r <= K; ++r)
    if (r != k) others.push_back(r);
  std::vector<double> hist(M + 1, 0.0);
  double total = 0.0;
  std::vector<std::size_t> pick;
  std::function<void(std::size_t)> rec = [&](std::size_t from) {
    if (pick.size() == M) {
      std::size_t m = 0;
      for (auto r : pick) m += r < k;
      hist[m] += 1.0;
      total += 1.0;
      return;
    }
    for (std::size_t i = from; i < others.size(); ++i) {
      pick.push_back(others[i]);
      rec(i + 1);
      pick.pop_back();
    }
  };
  rec(0);
  for (double& h : hist) h /= total;
  return hist;
}

// Pruning rounds t_p = I_1 + ... + I_p, each prefix summed from scratch,
// kept when t* < t_p < T.
inline std::vector<std::size_t> pruning_rounds(std::size_t t_star, double b, double c, std::size_t T) {
  std::vector<std::size_t> out;
  for (int p = 1;; ++p) {
    long double tp = 0;
    for (int tau = 1; tau <= p; ++tau) tp += std::ceil((t_star + b) / std::pow((long double)c, tau - 1));
    if (tp >= (long double)T) break;
    if (tp > (long double)t_star) out.push_back(std::size_t(tp));
  }
  return out;
}

// Mean cross-entropy of the 2-layer ReLU net by direct summation, in double.
inline double mlp_loss(const std::vector<dadpfl::LayerShape>& shapes, const std::vector<double>& p,
                       const dadpfl::DataShard& data) {
  double total = 0.0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    std::vector<double> a(data.row(r).begin(), data.row(r).end());
    std::size_t off = 0;
    for (std::size_t l = 0; l < shapes.size(); ++l) {
      const auto& s = shapes[l];
      std::vector<double> z(s.n_out);
      for (std::size_t j = 0; j < s.n_out; ++j) {
        double acc = p[off + s.weights() + j];
        for (std::size_t i = 0; i < s.n_in; ++i) acc += a[i] * p[off + i * s.n_out + j];
        z[j] = (l + 1 < shapes.size()) ? std::max(acc, 0.0) : acc;
      }
      off += s.params();
      a = z;
    }
    double mx = a[0];
    for (double v : a) mx = std::max(mx, v);
    double zsum = 0.0;
    for (double v : a) zsum += std::exp(v - mx);
    total += std::log(zsum) + mx - a[data.labels[r]];
  }
  return total / double(data.size());
}

// Coordinate-wise masked average; contributors only count where their mask is set.
inline std::vector<float> masked_average(const std::vector<std::vector<float>>& w,
                                         const std::vector<std::vector<std::uint8_t>>& m) {
  const std::size_t n = w[0].size();
  std::vector<float> out(n, 0.0f);
  for (std::size_t i = 0; i < n; ++i) {
    if (!m[0][i]) continue;
    float num = 0.0f;
    unsigned den = 0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (m[j][i]) {
        num += w[j][i];
        ++den;
      }
    }
    out[i] = num / float(den);
  }
  return out;
}

}  // namespace oracle
