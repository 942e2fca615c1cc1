#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dadpfl/learner.hpp"
#include "dadpfl/rng.hpp"

namespace dadpfl {

struct Dataset {
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::vector<float> inputs;
  std::vector<std::uint32_t> labels;

  std::size_t size() const { return labels.size(); }
};

struct BlobSpec {
  std::size_t classes = 10;
  std::size_t dim = 32;
  std::size_t samples = 0;  // total
  double center_scale = 1.0;
  double sigma = 1.0;
};

// C isotropic Gaussian blobs; centers ~ N(0, center_scale^2 I), balanced labels.
Dataset make_blobs(const BlobSpec& spec, Rng& rng);

// Header-less rows "label, f1, ..., fd". Throws std::runtime_error with the
// offending line number.
Dataset load_csv(const std::filesystem::path& path);

// One index set per client.
using Partition = std::vector<std::vector<std::size_t>>;

Partition partition_dirichlet(std::span<const std::uint32_t> labels, std::size_t K, double alpha, Rng& rng);
Partition partition_pathological(std::span<const std::uint32_t> labels, std::size_t K, std::size_t n_cls, Rng& rng);

DataShard make_shard(const Dataset& data, std::span<const std::size_t> indices, std::size_t owner);

// Per-client class histogram, rows indexed by client.
std::vector<std::vector<std::size_t>> class_histogram(std::span<const std::uint32_t> labels, const Partition& parts,
                                                      std::size_t classes);

struct SplitShard {
  DataShard train;
  DataShard test;
};

// Holds out round(fraction * n) shuffled rows (at least one when n >= 2 and
// fraction > 0) as the client's personal test set.
SplitShard split_holdout(const DataShard& shard, double fraction, Rng& rng);

}  // namespace dadpfl
