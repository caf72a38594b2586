#include "theta/net/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>

#include "theta/core/error.hpp"
#include "theta/core/rng.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace theta::net {

namespace {

constexpr double kCodeScale = 32767.5;

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

std::size_t count_correct(const std::vector<BinPrediction>& pred, std::span<const BinLabels> truth) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (std::size_t j = 0; j < kNumJoints; ++j) n += pred[i].bins[j] == truth[i][j];
  return n;
}

// Batch activations run to tens of megabytes. glibc would hand each one back
// to the kernel and fault it in again on the next step; keeping them on the
// heap roughly halves the forward time.
void retain_large_blocks() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace

Freeze Freeze::parse(std::string_view text) {
  if (text == "none") return {};
  constexpr std::string_view prefix = "all_but_last_";
  if (text.substr(0, prefix.size()) == prefix) {
    const auto digits = text.substr(prefix.size());
    int k = 0;
    const auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec == std::errc{} && p == digits.data() + digits.size() && k > 0) return {FreezePolicy::all_but_last_k, k};
  }
  throw ArgumentError("freeze policy must be 'none' or 'all_but_last_<k>', got '" + std::string(text) + "'");
}

std::string Freeze::name() const {
  return policy == FreezePolicy::none ? "none" : "all_but_last_" + std::to_string(k);
}

TensorDataset::TensorDataset(int channels, int height, int width)
    : channels_(channels), height_(height), width_(width),
      stride_(static_cast<std::size_t>(channels) * height * width) {
  if (channels <= 0 || height <= 0 || width <= 0) throw ArgumentError("dataset tensor dimensions must be positive");
}

void TensorDataset::add(const PlanarImage& tensor, const BinLabels& labels, int group) {
  if (tensor.channels != channels_ || tensor.height != height_ || tensor.width != width_) {
    throw ShapeError("dataset tensor: expected (" + std::to_string(channels_) + ", " + std::to_string(height_) + ", " +
                     std::to_string(width_) + "), got (" + std::to_string(tensor.channels) + ", " +
                     std::to_string(tensor.height) + ", " + std::to_string(tensor.width) + ")");
  }
  for (int b : labels) {
    if (b < 0 || b >= static_cast<int>(kNumBins)) throw LabelError("bin label outside 0..9");
  }
  const std::size_t base = codes_.size();
  codes_.resize(base + stride_);
  for (std::size_t i = 0; i < stride_; ++i) {
    const double q = std::round((static_cast<double>(tensor.values[i]) + 1.0) * kCodeScale);
    codes_[base + i] = static_cast<std::uint16_t>(std::clamp(q, 0.0, 65535.0));
  }
  labels_.push_back(labels);
  groups_.push_back(group);
}

Tensor<float> TensorDataset::batch(std::span<const std::size_t> indices) const {
  Tensor<float> x({static_cast<int>(indices.size()), channels_, height_, width_});
  const float scale = static_cast<float>(1.0 / kCodeScale);
  for (std::size_t n = 0; n < indices.size(); ++n) {
    if (indices[n] >= size()) throw ArgumentError("dataset index out of range");
    const std::uint16_t* src = codes_.data() + indices[n] * stride_;
    float* dst = x.data() + n * stride_;
    for (std::size_t i = 0; i < stride_; ++i) dst[i] = static_cast<float>(src[i]) * scale - 1.0f;
  }
  return x;
}

std::vector<BinLabels> TensorDataset::batch_labels(std::span<const std::size_t> indices) const {
  std::vector<BinLabels> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(labels_.at(i));
  return out;
}

Split stratified_split(std::span<const int> groups, double val_fraction, std::uint64_t seed) {
  if (!(val_fraction >= 0.0 && val_fraction <= 1.0)) throw ArgumentError("validation fraction must lie in [0, 1]");
  std::map<int, std::vector<std::size_t>> by_group;
  for (std::size_t i = 0; i < groups.size(); ++i) by_group[groups[i]].push_back(i);
  Split split;
  for (auto& [g, items] : by_group) {
    Rng rng = derive_rng(seed, "net.split", {static_cast<std::uint64_t>(static_cast<std::int64_t>(g))});
    shuffle(items, rng);
    const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(items.size()) * val_fraction));
    split.val.insert(split.val.end(), items.begin(), items.begin() + static_cast<std::ptrdiff_t>(n_val));
    split.train.insert(split.train.end(), items.begin() + static_cast<std::ptrdiff_t>(n_val), items.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  return split;
}

EvalOutput evaluate(Network<float>& net, const TensorDataset& data, std::span<const std::size_t> indices,
                    const ClassWeights& alpha, const TrainOptions& options) {
  EvalOutput out;
  if (indices.empty()) return out;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  const auto bs = static_cast<std::size_t>(std::max(1, options.batch_size));
  for (std::size_t start = 0; start < indices.size(); start += bs) {
    const auto ids = indices.subspan(start, std::min(bs, indices.size() - start));
    const auto labels = data.batch_labels(ids);
    const Tensor<float> logits = net.forward(data.batch(ids), false);
    const Tensor<float> probs = temperature_softmax(logits, options.temperature);
    loss_sum += focal_loss(probs, labels, alpha, options.gamma) * static_cast<double>(ids.size());
    auto pred = predict_from_logits(logits, options.temperature);
    correct += count_correct(pred, labels);
    out.predictions.insert(out.predictions.end(), pred.begin(), pred.end());
  }
  out.loss = loss_sum / static_cast<double>(indices.size());
  out.accuracy = static_cast<double>(correct) / static_cast<double>(indices.size() * kNumJoints);
  return out;
}

TrainResult train(const TensorDataset& data, const Split& split, const NetworkSpec& spec,
                  const TrainOptions& options, const EpochCallback& on_epoch) {
  if (options.epochs < 0) throw ArgumentError("epochs must be non-negative");
  if (options.batch_size < 1) throw ArgumentError("batch size must be positive");
  if (!(options.adam.lr > 0.0)) throw ArgumentError("learning rate must be positive");
  if (split.train.empty()) throw DataError("training split is empty");
  if (split.val.empty()) throw DataError("validation split is empty");
  if (data.channels() != spec.in_channels || data.height() != spec.input_size || data.width() != spec.input_size) {
    throw ShapeError("dataset tensors do not match the network input");
  }

  retain_large_blocks();
  TrainResult result;
  result.net = std::make_unique<Network<float>>(spec);
  Network<float>& net = *result.net;
  net.initialize(options.seed);
  net.set_trainable_tail(options.freeze.trainable_tail());

  const auto train_labels = data.batch_labels(split.train);
  const ClassWeights alpha = inverse_frequency_weights(label_histogram(train_labels), options.weight_floor);
  const auto params = net.parameters(true);
  AdamState adam{options.adam, 0, {}, {}};

  auto best = net.snapshot();
  double best_acc = -std::numeric_limits<double>::infinity();
  const auto bs = static_cast<std::size_t>(options.batch_size);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::vector<std::size_t> order = split.train;
    Rng rng = derive_rng(options.seed, "net.shuffle", {static_cast<std::uint64_t>(epoch)});
    shuffle(order, rng);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::span<const std::size_t> ids(order.data() + start, std::min(bs, order.size() - start));
      const auto labels = data.batch_labels(ids);
      const Tensor<float> logits = net.forward(data.batch(ids), true);
      const auto lg = focal_loss_with_grad(logits, std::span<const BinLabels>(labels), alpha, options.gamma,
                                           options.temperature);
      net.backward(lg.dlogits);
      adam_step(params, adam);
      loss_sum += lg.loss * static_cast<double>(ids.size());
      correct += count_correct(predict_from_logits(logits, options.temperature), labels);
    }

    const EvalOutput val = evaluate(net, data, split.val, alpha, options);
    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.train_loss = loss_sum / static_cast<double>(order.size());
    stats.train_acc = static_cast<double>(correct) / static_cast<double>(order.size() * kNumJoints);
    stats.val_loss = val.loss;
    stats.val_acc = val.accuracy;
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
    if (val.accuracy > best_acc) {
      best_acc = val.accuracy;
      best = net.snapshot();
      result.best_epoch = stats.epoch;
    }
  }
  net.restore(best);
  return result;
}

BinPrediction predict_bins(Network<float>& net, const PlanarImage& fused, double temperature) {
  Tensor<float> x({1, fused.channels, fused.height, fused.width});
  if (fused.values.size() != x.size()) throw ShapeError("fused tensor value count does not match its dimensions");
  std::copy(fused.values.begin(), fused.values.end(), x.data());
  return predict_from_logits(net.forward(x, false), temperature).front();
}

}  // namespace theta::net
