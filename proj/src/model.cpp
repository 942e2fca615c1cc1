#include "dadpfl/model.hpp"

namespace dadpfl {

FlatModel::FlatModel(std::vector<LayerShape> shapes) : shapes_(std::move(shapes)) {
  std::size_t off = 0;
  offsets_.reserve(shapes_.size());
  for (const auto& s : shapes_) {
    offsets_.push_back(off);
    off += s.params();
  }
  params_.assign(off, 0.0f);
}

std::size_t total_weights(std::span<const LayerShape> shapes) {
  std::size_t n = 0;
  for (const auto& s : shapes) n += s.weights();
  return n;
}

std::size_t total_params(std::span<const LayerShape> shapes) {
  std::size_t n = 0;
  for (const auto& s : shapes) n += s.params();
  return n;
}

}  // namespace dadpfl
