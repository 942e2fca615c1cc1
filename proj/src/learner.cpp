#include "dadpfl/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dadpfl/errors.hpp"

namespace dadpfl {

std::vector<LayerShape> mlp_shapes(std::size_t input_dim, std::size_t hidden, std::size_t classes) {
  if (input_dim == 0 || hidden == 0 || classes < 2) throw InvalidParameter("mlp: need dim >= 1, hidden >= 1, classes >= 2");
  return {{input_dim, hidden}, {hidden, classes}};
}

FlatModel init_model(std::vector<LayerShape> shapes, Rng& rng) {
  FlatModel m(std::move(shapes));
  for (std::size_t l = 0; l < m.num_layers(); ++l) {
    const auto& s = m.shapes()[l];
    const float bound = static_cast<float>(std::sqrt(6.0 / double(s.n_in + s.n_out)));
    std::uniform_real_distribution<float> u(-bound, bound);
    for (float& w : m.weights(l)) w = u(rng);
  }
  return m;
}

template <std::floating_point T>
double loss_and_gradient(std::span<const LayerShape> shapes, std::span<const T> params, const DataShard& data,
                         std::span<const std::size_t> rows, std::span<T> grad) {
  const std::size_t L = shapes.size();
  if (L == 0 || params.size() != total_params(shapes)) throw InvalidParameter("loss: parameter size mismatch");
  if (shapes.front().n_in != data.dim) throw InvalidParameter("loss: input dimension mismatch");
  const bool want_grad = !grad.empty();
  if (want_grad) {
    if (grad.size() != params.size()) throw InvalidParameter("loss: gradient size mismatch");
    std::fill(grad.begin(), grad.end(), T(0));
  }
  if (rows.empty()) return 0.0;

  std::vector<std::size_t> off(L);
  for (std::size_t l = 0, o = 0; l < L; ++l) {
    off[l] = o;
    o += shapes[l].params();
  }

  // act[0] is the input; act[l+1] is the output of layer l (post-ReLU except last).
  std::vector<std::vector<T>> act(L + 1);
  act[0].resize(data.dim);
  for (std::size_t l = 0; l < L; ++l) act[l + 1].resize(shapes[l].n_out);
  std::vector<T> delta, prev_delta;

  double total_loss = 0.0;
  for (std::size_t r : rows) {
    const auto x = data.row(r);
    for (std::size_t i = 0; i < data.dim; ++i) act[0][i] = T(x[i]);

    for (std::size_t l = 0; l < L; ++l) {
      const auto& s = shapes[l];
      const T* W = params.data() + off[l];
      const T* b = W + s.weights();
      auto& out = act[l + 1];
      std::copy(b, b + s.n_out, out.begin());
      for (std::size_t i = 0; i < s.n_in; ++i) {
        const T a = act[l][i];
        if (a == T(0)) continue;
        const T* row = W + i * s.n_out;
        for (std::size_t j = 0; j < s.n_out; ++j) out[j] += a * row[j];
      }
      if (l + 1 < L)
        for (T& v : out) v = std::max(v, T(0));
    }

    // Softmax cross-entropy with max-shift.
    const auto& logits = act[L];
    const std::uint32_t y = data.labels[r];
    const T mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (T v : logits) z += std::exp(double(v - mx));
    total_loss += std::log(z) - double(logits[y] - mx);

    if (!want_grad) continue;
    delta.assign(logits.size(), T(0));
    for (std::size_t j = 0; j < logits.size(); ++j) delta[j] = T(std::exp(double(logits[j] - mx)) / z);
    delta[y] -= T(1);

    for (std::size_t l = L; l-- > 0;) {
      const auto& s = shapes[l];
      const T* W = params.data() + off[l];
      T* gW = grad.data() + off[l];
      T* gb = gW + s.weights();
      for (std::size_t j = 0; j < s.n_out; ++j) gb[j] += delta[j];
      for (std::size_t i = 0; i < s.n_in; ++i) {
        const T a = act[l][i];
        if (a == T(0)) continue;
        T* grow = gW + i * s.n_out;
        for (std::size_t j = 0; j < s.n_out; ++j) grow[j] += a * delta[j];
      }
      if (l == 0) break;
      prev_delta.assign(s.n_in, T(0));
      for (std::size_t i = 0; i < s.n_in; ++i) {
        if (act[l][i] <= T(0)) continue;  // ReLU derivative
        const T* row = W + i * s.n_out;
        T acc = T(0);
        for (std::size_t j = 0; j < s.n_out; ++j) acc += row[j] * delta[j];
        prev_delta[i] = acc;
      }
      delta.swap(prev_delta);
    }
  }

  const double n = double(rows.size());
  if (want_grad)
    for (T& g : grad) g = T(double(g) / n);
  return total_loss / n;
}

template double loss_and_gradient<float>(std::span<const LayerShape>, std::span<const float>, const DataShard&,
                                         std::span<const std::size_t>, std::span<float>);
template double loss_and_gradient<double>(std::span<const LayerShape>, std::span<const double>, const DataShard&,
                                          std::span<const std::size_t>, std::span<double>);

TrainResult local_train(FlatModel model, const MaskSet& mask, const DataShard& shard, const SgdOptions& opts,
                        Rng& rng) {
  if (mask.shapes() != model.shapes()) throw InvalidParameter("local_train: model and mask are not aligned");
  if (opts.batch_size == 0) throw InvalidParameter("local_train: batch size must be >= 1");
  TrainResult res;
  if (opts.epochs == 0) {
    res.model = std::move(model);
    return res;
  }
  if (shard.empty()) {
    res.model = std::move(model);
    res.mean_loss = std::numeric_limits<double>::quiet_NaN();
    return res;
  }

  const auto flat_mask = mask.flat();
  const float lr = static_cast<float>(opts.lr);
  const float wd = static_cast<float>(opts.weight_decay);
  std::vector<std::size_t> order(shard.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<float> grad(model.size());

  double epoch_loss = 0.0;
  for (std::size_t e = 0; e < opts.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
      const std::size_t len = std::min(opts.batch_size, order.size() - start);
      const std::span<const std::size_t> batch(order.data() + start, len);
      const double l = loss_and_gradient<float>(model.shapes(), model.flat(), shard, batch, grad);
      epoch_loss += l * double(len);
      auto w = model.flat();
      for (std::size_t i = 0; i < w.size(); ++i)
        if (flat_mask[i]) w[i] -= lr * (grad[i] + wd * w[i]);
    }
    epoch_loss /= double(order.size());
  }
  res.mean_loss = epoch_loss;
  res.model = std::move(model);
  return res;
}

std::vector<float> dense_batch_gradient(const FlatModel& model, const DataShard& shard, std::size_t batch_size,
                                        Rng& rng) {
  std::vector<float> grad(model.size(), 0.0f);
  if (shard.empty()) return grad;
  std::vector<std::size_t> order(shard.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(std::min(batch_size, order.size()));
  loss_and_gradient<float>(model.shapes(), model.flat(), shard, order, grad);
  return grad;
}

EvalResult evaluate(const FlatModel& model, const DataShard& shard) {
  if (shard.empty()) throw InvalidParameter("evaluate: empty shard");
  const auto& shapes = model.shapes();
  const std::size_t L = shapes.size();
  std::vector<std::vector<float>> act(L + 1);
  act[0].resize(shard.dim);
  for (std::size_t l = 0; l < L; ++l) act[l + 1].resize(shapes[l].n_out);

  std::size_t correct = 0;
  double loss = 0.0;
  for (std::size_t r = 0; r < shard.size(); ++r) {
    const auto x = shard.row(r);
    std::copy(x.begin(), x.end(), act[0].begin());
    for (std::size_t l = 0; l < L; ++l) {
      const auto W = model.weights(l);
      const auto b = model.biases(l);
      auto& out = act[l + 1];
      std::copy(b.begin(), b.end(), out.begin());
      const std::size_t n_out = shapes[l].n_out;
      for (std::size_t i = 0; i < shapes[l].n_in; ++i) {
        const float a = act[l][i];
        if (a == 0.0f) continue;
        for (std::size_t j = 0; j < n_out; ++j) out[j] += a * W[i * n_out + j];
      }
      if (l + 1 < L)
        for (float& v : out) v = std::max(v, 0.0f);
    }
    const auto& logits = act[L];
    const auto y = shard.labels[r];
    // Ties resolve to the lowest class id.
    const auto best = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (best == y) ++correct;
    const float mx = logits[best];
    double z = 0.0;
    for (float v : logits) z += std::exp(double(v - mx));
    loss += std::log(z) - double(logits[y] - mx);
  }
  const double n = double(shard.size());
  return {double(correct) / n, loss / n};
}

}  // namespace dadpfl
