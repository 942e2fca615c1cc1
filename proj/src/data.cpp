#include "dadpfl/data.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dadpfl/errors.hpp"

namespace dadpfl {

Dataset make_blobs(const BlobSpec& spec, Rng& rng) {
  if (spec.classes < 2 || spec.dim == 0 || spec.samples == 0 || !(spec.sigma > 0.0))
    throw InvalidParameter("blobs: need classes >= 2, dim >= 1, samples >= 1, sigma > 0");
  Dataset d;
  d.dim = spec.dim;
  d.classes = spec.classes;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> centers(spec.classes * spec.dim);
  for (double& c : centers) c = spec.center_scale * gauss(rng);

  d.labels.resize(spec.samples);
  for (std::size_t i = 0; i < spec.samples; ++i) d.labels[i] = static_cast<std::uint32_t>(i % spec.classes);
  std::shuffle(d.labels.begin(), d.labels.end(), rng);
  d.inputs.resize(spec.samples * spec.dim);
  for (std::size_t i = 0; i < spec.samples; ++i) {
    const double* c = centers.data() + d.labels[i] * spec.dim;
    for (std::size_t j = 0; j < spec.dim; ++j)
      d.inputs[i * spec.dim + j] = static_cast<float>(c[j] + spec.sigma * gauss(rng));
  }
  return d;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path.string() + "'");
  Dataset d;
  std::string line;
  std::size_t lineno = 0;
  std::uint32_t max_label = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<float> row;
    bool first = true;
    long label = -1;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        if (first) {
          label = std::stol(cell, &used);
        } else {
          row.push_back(std::stof(cell, &used));
        }
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed value '" + cell + "'");
      }
      first = false;
    }
    if (label < 0) throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": negative label");
    if (row.empty()) throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": no features");
    if (d.dim == 0) d.dim = row.size();
    if (row.size() != d.dim)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(d.dim) +
                               " features, got " + std::to_string(row.size()));
    d.labels.push_back(static_cast<std::uint32_t>(label));
    max_label = std::max(max_label, static_cast<std::uint32_t>(label));
    d.inputs.insert(d.inputs.end(), row.begin(), row.end());
  }
  if (d.labels.empty()) throw std::runtime_error("dataset '" + path.string() + "' has no rows");
  d.classes = std::max<std::size_t>(2, std::size_t{max_label} + 1);
  return d;
}

namespace {

std::map<std::uint32_t, std::vector<std::size_t>> indices_by_class(std::span<const std::uint32_t> labels) {
  std::map<std::uint32_t, std::vector<std::size_t>> by;
  for (std::size_t i = 0; i < labels.size(); ++i) by[labels[i]].push_back(i);
  return by;
}

}  // namespace

Partition partition_dirichlet(std::span<const std::uint32_t> labels, std::size_t K, double alpha, Rng& rng) {
  if (K < 1) throw InvalidParameter("dirichlet: K must be >= 1");
  if (!(alpha > 0.0)) throw InvalidParameter("dirichlet: alpha must be > 0");
  if (labels.size() < K) throw InfeasiblePartition("dirichlet: fewer samples than clients");

  Partition parts(K);
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> prop(K);
  for (auto& [cls, idx] : indices_by_class(labels)) {
    std::shuffle(idx.begin(), idx.end(), rng);
    double sum = 0.0;
    for (double& p : prop) sum += (p = gamma(rng));
    if (sum == 0.0) {
      // Every draw underflowed (tiny alpha): the whole class goes to one client.
      std::fill(prop.begin(), prop.end(), 0.0);
      prop[std::uniform_int_distribution<std::size_t>(0, K - 1)(rng)] = 1.0;
      sum = 1.0;
    }
    double cum = 0.0;
    std::size_t begin = 0;
    for (std::size_t k = 0; k < K; ++k) {
      cum += prop[k] / sum;
      const std::size_t end =
          k + 1 == K ? idx.size() : std::min(idx.size(), static_cast<std::size_t>(std::floor(cum * double(idx.size()))));
      for (std::size_t i = begin; i < std::max(begin, end); ++i) parts[k].push_back(idx[i]);
      begin = std::max(begin, end);
    }
  }

  // Repair empty shards by moving one sample from the currently largest shard.
  for (std::size_t k = 0; k < K; ++k) {
    if (!parts[k].empty()) continue;
    auto largest = std::max_element(parts.begin(), parts.end(),
                                    [](const auto& a, const auto& b) { return a.size() < b.size(); });
    parts[k].push_back(largest->back());
    largest->pop_back();
  }
  for (auto& p : parts) std::sort(p.begin(), p.end());
  return parts;
}

Partition partition_pathological(std::span<const std::uint32_t> labels, std::size_t K, std::size_t n_cls, Rng& rng) {
  if (K < 1 || n_cls < 1) throw InvalidParameter("pathological: K and n_cls must be >= 1");
  auto by = indices_by_class(labels);
  const std::size_t C = by.size();
  if (n_cls > C) throw InfeasiblePartition("pathological: n_cls exceeds the number of classes");
  if (n_cls * K < C) throw InfeasiblePartition("pathological: n_cls * K cannot cover every class");

  // Client k receives the n_cls consecutive classes starting at k*n_cls in a
  // shuffled class order; n_cls*K >= C makes every class held by someone.
  std::vector<std::uint32_t> classes;
  for (const auto& [c, _] : by) classes.push_back(c);
  std::shuffle(classes.begin(), classes.end(), rng);

  std::map<std::uint32_t, std::vector<std::size_t>> holders;
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < n_cls; ++j) holders[classes[(k * n_cls + j) % C]].push_back(k);

  // Each class's sorted index list is cut into equal contiguous pieces
  // (sizes differ by at most one), one per holder.
  Partition parts(K);
  for (auto& [cls, idx] : by) {
    const auto& h = holders[cls];
    const std::size_t n = idx.size(), pieces = h.size();
    std::size_t begin = 0;
    for (std::size_t p = 0; p < pieces; ++p) {
      const std::size_t len = n / pieces + (p < n % pieces ? 1 : 0);
      parts[h[p]].insert(parts[h[p]].end(), idx.begin() + begin, idx.begin() + begin + len);
      begin += len;
    }
  }
  for (auto& p : parts) {
    if (p.empty()) throw InfeasiblePartition("pathological: a client received no samples");
    std::sort(p.begin(), p.end());
  }
  return parts;
}

DataShard make_shard(const Dataset& data, std::span<const std::size_t> indices, std::size_t owner) {
  DataShard s;
  s.owner = owner;
  s.dim = data.dim;
  s.inputs.reserve(indices.size() * data.dim);
  s.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= data.size()) throw InvalidParameter("make_shard: index out of range");
    s.labels.push_back(data.labels[i]);
    s.inputs.insert(s.inputs.end(), data.inputs.begin() + i * data.dim, data.inputs.begin() + (i + 1) * data.dim);
  }
  return s;
}

std::vector<std::vector<std::size_t>> class_histogram(std::span<const std::uint32_t> labels, const Partition& parts,
                                                      std::size_t classes) {
  std::vector<std::vector<std::size_t>> h(parts.size(), std::vector<std::size_t>(classes, 0));
  for (std::size_t k = 0; k < parts.size(); ++k)
    for (std::size_t i : parts[k])
      if (labels[i] < classes) ++h[k][labels[i]];
  return h;
}

SplitShard split_holdout(const DataShard& shard, double fraction, Rng& rng) {
  if (fraction < 0.0 || fraction >= 1.0) throw InvalidParameter("holdout fraction must lie in [0, 1)");
  std::vector<std::size_t> order(shard.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  auto n_test = static_cast<std::size_t>(std::round(fraction * double(shard.size())));
  if (fraction > 0.0 && n_test == 0 && shard.size() >= 2) n_test = 1;

  SplitShard out;
  for (DataShard* s : {&out.train, &out.test}) {
    s->owner = shard.owner;
    s->dim = shard.dim;
  }
  for (std::size_t r = 0; r < order.size(); ++r) {
    DataShard& dst = r < n_test ? out.test : out.train;
    const auto row = shard.row(order[r]);
    dst.inputs.insert(dst.inputs.end(), row.begin(), row.end());
    dst.labels.push_back(shard.labels[order[r]]);
  }
  return out;
}

}  // namespace dadpfl
