#include "dadpfl/sparse.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>

namespace dadpfl {

MaskSet::MaskSet(std::vector<LayerShape> shapes) : shapes_(std::move(shapes)) {
  for (const auto& s : shapes_) {
    bits_.emplace_back(s.weights(), std::uint8_t{1});
    active_.push_back(s.weights());
  }
}

void MaskSet::set(std::size_t l, std::size_t i, bool on) {
  auto& b = bits_[l][i];
  if ((b != 0) == on) return;
  b = on ? 1 : 0;
  if (on)
    ++active_[l];
  else
    --active_[l];
}

std::size_t MaskSet::active() const { return std::accumulate(active_.begin(), active_.end(), std::size_t{0}); }

std::size_t MaskSet::maskable() const { return total_weights(shapes_); }

double MaskSet::density(std::size_t l) const {
  const auto n = shapes_[l].weights();
  return n == 0 ? 0.0 : double(active_[l]) / double(n);
}

double MaskSet::density() const {
  const auto n = maskable();
  return n == 0 ? 0.0 : double(active()) / double(n);
}

std::vector<double> MaskSet::densities() const {
  std::vector<double> d;
  for (std::size_t l = 0; l < shapes_.size(); ++l) d.push_back(density(l));
  return d;
}

std::vector<std::uint8_t> MaskSet::flat() const {
  std::vector<std::uint8_t> out;
  out.reserve(total_params(shapes_));
  for (std::size_t l = 0; l < shapes_.size(); ++l) {
    out.insert(out.end(), bits_[l].begin(), bits_[l].end());
    out.insert(out.end(), shapes_[l].n_out, std::uint8_t{1});
  }
  return out;
}

bool MaskSet::consistent() const {
  for (std::size_t l = 0; l < shapes_.size(); ++l) {
    if (bits_[l].size() != shapes_[l].weights()) return false;
    std::size_t n = 0;
    for (auto b : bits_[l]) {
      if (b > 1) return false;
      n += b;
    }
    if (n != active_[l]) return false;
  }
  return true;
}

void apply_mask(FlatModel& model, const MaskSet& mask) {
  for (std::size_t l = 0; l < mask.num_layers(); ++l) {
    auto w = model.weights(l);
    auto m = mask.layer(l);
    for (std::size_t i = 0; i < w.size(); ++i)
      if (!m[i]) w[i] = 0.0f;
  }
}

bool mask_consistent(const FlatModel& model, const MaskSet& mask) {
  for (std::size_t l = 0; l < mask.num_layers(); ++l) {
    auto w = model.weights(l);
    auto m = mask.layer(l);
    for (std::size_t i = 0; i < w.size(); ++i)
      if (!m[i] && w[i] != 0.0f) return false;
  }
  return true;
}

std::vector<std::size_t> erk_layer_counts(std::span<const LayerShape> shapes, double global_density) {
  if (shapes.empty()) throw InvalidParameter("erk_init: no layers");
  if (!(global_density > 0.0) || global_density > 1.0) throw InvalidParameter("erk_init: density must lie in (0, 1]");

  const std::size_t L = shapes.size();
  const std::size_t total = total_weights(shapes);
  const double target = std::round(global_density * double(total));

  std::vector<double> raw(L);
  for (std::size_t l = 0; l < L; ++l)
    raw[l] = double(shapes[l].n_in + shapes[l].n_out) / double(shapes[l].weights());

  // Solve for the common scale, saturating layers whose density would exceed 1.
  std::vector<bool> dense(L, false);
  double eps = 0.0;
  for (;;) {
    double fixed = 0.0, scaled = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      if (dense[l])
        fixed += double(shapes[l].weights());
      else
        scaled += raw[l] * double(shapes[l].weights());
    }
    eps = scaled > 0.0 ? (target - fixed) / scaled : 0.0;
    bool changed = false;
    for (std::size_t l = 0; l < L; ++l) {
      if (!dense[l] && eps * raw[l] > 1.0) {
        dense[l] = true;
        changed = true;
      }
    }
    if (!changed) break;
  }

  // Largest-remainder rounding keeps the global total exact.
  std::vector<std::size_t> counts(L);
  std::vector<double> rem(L, 0.0);
  std::size_t assigned = 0;
  for (std::size_t l = 0; l < L; ++l) {
    const double want = dense[l] ? double(shapes[l].weights()) : eps * raw[l] * double(shapes[l].weights());
    counts[l] = std::min<std::size_t>(static_cast<std::size_t>(std::floor(want)), shapes[l].weights());
    rem[l] = want - std::floor(want);
    assigned += counts[l];
  }
  std::vector<std::size_t> order(L);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  auto goal = static_cast<std::size_t>(target);
  for (std::size_t i = 0; assigned < goal && i < L * 2; ++i) {
    const std::size_t l = order[i % L];
    if (counts[l] < shapes[l].weights()) {
      ++counts[l];
      ++assigned;
    }
  }
  return counts;
}

MaskSet erk_init(std::span<const LayerShape> shapes, double global_density, Rng& rng) {
  const auto counts = erk_layer_counts(shapes, global_density);
  MaskSet mask(std::vector<LayerShape>(shapes.begin(), shapes.end()));
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    const std::size_t n = shapes[l].weights();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first counts[l] entries stay active.
    for (std::size_t i = 0; i < counts[l]; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    for (std::size_t i = counts[l]; i < n; ++i) mask.set(l, idx[i], false);
  }
  return mask;
}

double sparsity(const MaskSet& mask) {
  const auto n = mask.maskable();
  if (n == 0) return 0.0;
  return double(n - mask.active()) / double(n);
}

std::size_t sap_prune_count(std::size_t active, double pqi, const SapParams& sp) {
  if (active == 0) return 0;
  const double d = double(active);
  const double keep = d * std::pow(1.0 + sp.eta_c, -sp.q / (sp.q - sp.p)) * std::pow(1.0 - pqi, sp.p / (sp.q - sp.p));
  const double frac = std::min(sp.gamma * (1.0 - keep / d), sp.beta);
  if (frac <= 0.0) return 0;
  return std::min(active, static_cast<std::size_t>(std::floor(d * frac)));
}

namespace {

// Indices of active weights ordered by ascending magnitude, ties by index.
std::vector<std::size_t> active_by_magnitude(std::span<const float> w, std::span<const std::uint8_t> m) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (m[i]) idx.push_back(i);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return std::abs(w[a]) < std::abs(w[b]); });
  return idx;
}

}  // namespace

SapResult sap_prune(FlatModel model, MaskSet mask, const SapParams& sp, std::size_t round) {
  if (!(sp.p > 0.0) || !(sp.q > sp.p) || !(sp.gamma > 0.0) || !(sp.eta_c > 0.0) || sp.beta < 0.0 || sp.beta > 1.0)
    throw InvalidParameter("sap_prune: need 0 < p < q, gamma > 0, eta_c > 0, 0 <= beta <= 1");

  SapResult out;
  for (std::size_t l = 0; l < mask.num_layers(); ++l) {
    const std::size_t d = mask.active(l);
    if (d == 0) continue;
    auto w = model.weights(l);
    std::vector<float> act;
    act.reserve(d);
    for (std::size_t i = 0; i < w.size(); ++i)
      if (mask.test(l, i)) act.push_back(w[i]);

    PruneEvent ev;
    ev.round = round;
    ev.layer = l;
    const bool all_zero = std::all_of(act.begin(), act.end(), [](float x) { return x == 0.0f; });
    if (!all_zero) {
      ev.pq_index = pq_index(std::span<const float>(act), sp.p, sp.q);
      ev.pruned_count = sap_prune_count(d, ev.pq_index, sp);
      const auto order = active_by_magnitude(w, mask.layer(l));
      for (std::size_t i = 0; i < ev.pruned_count; ++i) {
        w[order[i]] = 0.0f;
        mask.set(l, order[i], false);
      }
    }
    ev.resulting_density = mask.density(l);
    out.events.push_back(ev);
  }
  out.model = std::move(model);
  out.mask = std::move(mask);
  return out;
}

double rigl_drop_fraction(std::size_t t, std::size_t T, double alpha0) {
  if (T == 0 || t > T) throw InvalidParameter("rigl: need 0 <= t <= T, T >= 1");
  if (t == T) return 0.0;
  if (t == 0) return alpha0;
  return alpha0 / 2.0 * (1.0 + std::cos(double(t) * std::numbers::pi / double(T)));
}

RiglResult rigl_update(FlatModel model, MaskSet mask, std::span<const float> dense_grad, std::size_t t,
                       std::size_t T, double alpha0) {
  if (dense_grad.size() != model.size()) throw InvalidParameter("rigl: gradient must span the full parameter vector");
  const double alpha = rigl_drop_fraction(t, T, alpha0);

  RiglResult out;
  for (std::size_t l = 0; l < mask.num_layers(); ++l) {
    auto w = model.weights(l);
    const auto g = dense_grad.subspan(model.weight_offset(l), w.size());
    const std::size_t active = mask.active(l);
    const auto wanted = static_cast<std::size_t>(std::floor(alpha * double(active)));
    if (wanted == 0) continue;

    // Regrowth candidates are the entries inactive before this call, so an
    // entry dropped here can never come straight back. Dropping more than
    // can be regrown would shrink the layer, so the drop count is capped.
    std::vector<std::size_t> inactive;
    for (std::size_t i = 0; i < w.size(); ++i)
      if (!mask.test(l, i)) inactive.push_back(i);
    const std::size_t kappa = std::min(wanted, inactive.size());
    out.capped_drops += wanted - kappa;
    if (kappa == 0) continue;
    std::stable_sort(inactive.begin(), inactive.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(g[a]) > std::abs(g[b]); });

    const auto order = active_by_magnitude(w, mask.layer(l));
    for (std::size_t i = 0; i < kappa; ++i) {
      w[order[i]] = 0.0f;
      mask.set(l, order[i], false);
    }
    for (std::size_t i = 0; i < kappa; ++i) {
      w[inactive[i]] = 0.0f;
      mask.set(l, inactive[i], true);
    }
  }
  out.model = std::move(model);
  out.mask = std::move(mask);
  return out;
}

}  // namespace dadpfl
