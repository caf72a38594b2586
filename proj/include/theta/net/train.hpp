#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "theta/core/image.hpp"
#include "theta/net/loss.hpp"
#include "theta/net/network.hpp"
#include "theta/net/optim.hpp"

namespace theta::net {

enum class FreezePolicy { none, all_but_last_k };

struct Freeze {
  FreezePolicy policy = FreezePolicy::none;
  int k = 2;

  /// "none" or "all_but_last_<k>". Throws ArgumentError otherwise.
  static Freeze parse(std::string_view text);
  std::string name() const;
  /// Argument for Network::set_trainable_tail.
  int trainable_tail() const { return policy == FreezePolicy::none ? -1 : k; }
};

/// Prepared training tensors kept as 16-bit codes,
/// q = round((x + 1) * 32767.5), to fit a full desk-scale set in memory.
class TensorDataset {
 public:
  TensorDataset(int channels, int height, int width);

  /// Throws ShapeError when the tensor does not match the dataset geometry.
  void add(const PlanarImage& tensor, const BinLabels& labels, int group);

  std::size_t size() const { return labels_.size(); }
  const BinLabels& labels(std::size_t i) const { return labels_.at(i); }
  int group(std::size_t i) const { return groups_.at(i); }
  const std::vector<int>& groups() const { return groups_; }
  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }

  /// Decoded (n, C, H, W) batch.
  Tensor<float> batch(std::span<const std::size_t> indices) const;
  std::vector<BinLabels> batch_labels(std::span<const std::size_t> indices) const;

 private:
  int channels_, height_, width_;
  std::size_t stride_;
  std::vector<std::uint16_t> codes_;
  std::vector<BinLabels> labels_;
  std::vector<int> groups_;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Per group, a seeded shuffle puts round(n * val_fraction) items in the
/// validation set. Both lists come back sorted.
Split stratified_split(std::span<const int> groups, double val_fraction, std::uint64_t seed);

struct TrainOptions {
  int epochs = 10;
  int batch_size = 16;
  AdamConfig adam;
  double temperature = kDefaultTemperature;
  double gamma = kDefaultGamma;
  double weight_floor = 1.0;
  Freeze freeze;
  std::uint64_t seed = 0;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

struct TrainResult {
  std::unique_ptr<Network<float>> net;  // best validation accuracy, earliest on ties
  std::vector<EpochStats> history;
  int best_epoch = -1;  // -1 when no epoch ran
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Adam on focal loss over temperature-scaled logits with inverse-frequency
/// weights from the training labels. Deterministic for a fixed seed. Throws
/// DataError when either split is empty and ArgumentError on bad options.
TrainResult train(const TensorDataset& data, const Split& split, const NetworkSpec& spec,
                  const TrainOptions& options, const EpochCallback& on_epoch = {});

struct EvalOutput {
  std::vector<BinPrediction> predictions;
  double loss = 0.0;
  double accuracy = 0.0;  // per-joint bin accuracy
};

/// Eval-mode pass over the given items, in order.
EvalOutput evaluate(Network<float>& net, const TensorDataset& data, std::span<const std::size_t> indices,
                    const ClassWeights& alpha, const TrainOptions& options);

/// Bins and confidences for one fused (C, H, W) tensor in eval mode.
BinPrediction predict_bins(Network<float>& net, const PlanarImage& fused,
                           double temperature = kDefaultTemperature);

}  // namespace theta::net
