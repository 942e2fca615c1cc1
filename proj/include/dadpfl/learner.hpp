#pragma once

#include <concepts>
#include <cstdint>
#include <span>
#include <vector>

#include "dadpfl/model.hpp"
#include "dadpfl/rng.hpp"
#include "dadpfl/sparse.hpp"

namespace dadpfl {

// Row-major feature matrix with integer class labels.
struct DataShard {
  std::size_t owner = 0;
  std::size_t dim = 0;
  std::vector<float> inputs;
  std::vector<std::uint32_t> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::span<const float> row(std::size_t i) const { return {inputs.data() + i * dim, dim}; }
};

// Layer shapes of the input -> hidden (ReLU) -> logits classifier.
std::vector<LayerShape> mlp_shapes(std::size_t input_dim, std::size_t hidden, std::size_t classes);

// Fan-based uniform init U(-sqrt(6/(n_in+n_out)), +sqrt(6/(n_in+n_out))) for
// weights; biases start at zero.
FlatModel init_model(std::vector<LayerShape> shapes, Rng& rng);

// Mean softmax cross-entropy over the selected rows and, when `grad` is
// non-empty, its gradient with respect to every parameter. ReLU follows every
// layer except the last. Instantiated for float and double.
template <std::floating_point T>
double loss_and_gradient(std::span<const LayerShape> shapes, std::span<const T> params, const DataShard& data,
                         std::span<const std::size_t> rows, std::span<T> grad);

struct TrainResult {
  FlatModel model;
  double mean_loss = 0.0;  // final epoch; NaN if the shard was empty
};

struct SgdOptions {
  std::size_t epochs = 5;
  double lr = 0.1;
  double weight_decay = 5e-4;
  std::size_t batch_size = 128;
};

// Shuffled mini-batch SGD; the step is (grad + wd * w) masked by `mask`, so
// masked-out weights stay exactly zero. The last short batch is kept.
TrainResult local_train(FlatModel model, const MaskSet& mask, const DataShard& shard, const SgdOptions& opts,
                        Rng& rng);

// Full-dimension gradient of the loss on one uniformly drawn mini-batch.
std::vector<float> dense_batch_gradient(const FlatModel& model, const DataShard& shard, std::size_t batch_size,
                                        Rng& rng);

struct EvalResult {
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

EvalResult evaluate(const FlatModel& model, const DataShard& shard);

}  // namespace dadpfl
