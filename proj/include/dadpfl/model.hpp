#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dadpfl {

struct LayerShape {
  std::size_t n_in = 0;
  std::size_t n_out = 0;

  std::size_t weights() const { return n_in * n_out; }
  std::size_t params() const { return n_in * n_out + n_out; }
  bool operator==(const LayerShape&) const = default;
};

// Parameters of a dense feed-forward net stored in one contiguous float
// buffer. Layer l occupies [W_l (n_in x n_out, row-major by input), b_l].
class FlatModel {
 public:
  FlatModel() = default;
  explicit FlatModel(std::vector<LayerShape> shapes);

  const std::vector<LayerShape>& shapes() const { return shapes_; }
  std::size_t num_layers() const { return shapes_.size(); }
  std::size_t size() const { return params_.size(); }

  std::span<float> flat() { return params_; }
  std::span<const float> flat() const { return params_; }

  std::span<float> weights(std::size_t l) { return {params_.data() + offsets_[l], shapes_[l].weights()}; }
  std::span<const float> weights(std::size_t l) const { return {params_.data() + offsets_[l], shapes_[l].weights()}; }
  std::span<float> biases(std::size_t l) {
    return {params_.data() + offsets_[l] + shapes_[l].weights(), shapes_[l].n_out};
  }
  std::span<const float> biases(std::size_t l) const {
    return {params_.data() + offsets_[l] + shapes_[l].weights(), shapes_[l].n_out};
  }
  std::size_t weight_offset(std::size_t l) const { return offsets_[l]; }

  bool operator==(const FlatModel& o) const { return shapes_ == o.shapes_ && params_ == o.params_; }

 private:
  std::vector<LayerShape> shapes_;
  std::vector<std::size_t> offsets_;
  std::vector<float> params_;
};

std::size_t total_weights(std::span<const LayerShape> shapes);
std::size_t total_params(std::span<const LayerShape> shapes);

}  // namespace dadpfl
