#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dadpfl/errors.hpp"
#include "dadpfl/model.hpp"
#include "dadpfl/rng.hpp"

namespace dadpfl {

// Per-layer binary masks over the weight matrices of a FlatModel. Biases
// are never masked. Active counts are cached and kept in sync by set().
class MaskSet {
 public:
  MaskSet() = default;
  // All-ones (dense) masks.
  explicit MaskSet(std::vector<LayerShape> shapes);

  const std::vector<LayerShape>& shapes() const { return shapes_; }
  std::size_t num_layers() const { return shapes_.size(); }

  std::span<const std::uint8_t> layer(std::size_t l) const { return bits_[l]; }
  bool test(std::size_t l, std::size_t i) const { return bits_[l][i] != 0; }
  void set(std::size_t l, std::size_t i, bool on);

  std::size_t active(std::size_t l) const { return active_[l]; }
  std::size_t active() const;
  std::size_t maskable() const;
  double density(std::size_t l) const;
  double density() const;
  std::vector<double> densities() const;

  // Full-length mask aligned with FlatModel::flat(); bias entries are 1.
  std::vector<std::uint8_t> flat() const;

  // Cached counts agree with the bits.
  bool consistent() const;

  bool operator==(const MaskSet& o) const { return shapes_ == o.shapes_ && bits_ == o.bits_; }

 private:
  std::vector<LayerShape> shapes_;
  std::vector<std::vector<std::uint8_t>> bits_;
  std::vector<std::size_t> active_;
};

// Zeroes every masked-out weight in place.
void apply_mask(FlatModel& model, const MaskSet& mask);
// True when every masked-out weight is exactly zero.
bool mask_consistent(const FlatModel& model, const MaskSet& mask);

// Layer densities proportional to (n_in + n_out) / (n_in * n_out), scaled so
// that the global active count equals round(global_density * total) exactly.
std::vector<std::size_t> erk_layer_counts(std::span<const LayerShape> shapes, double global_density);
MaskSet erk_init(std::span<const LayerShape> shapes, double global_density, Rng& rng);

// Fraction of zero entries among maskable weights.
double sparsity(const MaskSet& mask);

// PQ index of a vector over all of its d entries:
//   I = 1 - d^(1/q - 1/p) * ||w||_p / ||w||_q,  0 < p < q.
// Zero for equal magnitudes, approaching 1 - d^(1/q-1/p) for one-hot vectors.
template <std::floating_point T>
double pq_index(std::span<const T> w, double p, double q) {
  if (!(p > 0.0) || !(q > p)) throw InvalidParameter("pq_index: need 0 < p < q");
  if (w.empty()) throw UndefinedInput("pq_index: empty vector");
  double max_abs = 0.0;
  for (T x : w) max_abs = std::max(max_abs, std::abs(double(x)));
  if (max_abs == 0.0) throw UndefinedInput("pq_index: zero vector");
  // Normalise by the largest magnitude; the ratio is scale free.
  double sp = 0.0, sq = 0.0;
  for (T x : w) {
    const double a = std::abs(double(x)) / max_abs;
    if (a == 0.0) continue;
    sp += std::pow(a, p);
    sq += std::pow(a, q);
  }
  const double d = double(w.size());
  const double ratio = std::pow(sp, 1.0 / p) / std::pow(sq, 1.0 / q);
  const double idx = 1.0 - std::pow(d, 1.0 / q - 1.0 / p) * ratio;
  return idx < 0.0 ? 0.0 : idx;
}

struct SapParams {
  double p = 0.5;
  double q = 1.0;
  double gamma = 0.9;
  double eta_c = 1.0;
  double beta = 0.2;
};

struct PruneEvent {
  std::size_t round = 0;
  std::size_t layer = 0;
  std::size_t pruned_count = 0;
  double pq_index = 0.0;
  double resulting_density = 0.0;
};

// Number of weights SAP removes from a layer with `active` entries and PQ
// index `pqi`.
std::size_t sap_prune_count(std::size_t active, double pqi, const SapParams& params);

struct SapResult {
  FlatModel model;
  MaskSet mask;
  std::vector<PruneEvent> events;  // one per layer with active weights
};

SapResult sap_prune(FlatModel model, MaskSet mask, const SapParams& params, std::size_t round = 0);

// Cosine-annealed drop fraction alpha_t = alpha0/2 * (1 + cos(t*pi/T)).
double rigl_drop_fraction(std::size_t t, std::size_t T, double alpha0);

struct RiglResult {
  FlatModel model;  // dropped weights zeroed; regrown weights start at 0
  MaskSet mask;
  std::size_t capped_drops = 0;  // drops skipped for lack of regrowth candidates
};

// dense_grad spans the full flat parameter vector (bias entries ignored).
RiglResult rigl_update(FlatModel model, MaskSet mask, std::span<const float> dense_grad, std::size_t t,
                       std::size_t T, double alpha0);

}  // namespace dadpfl
