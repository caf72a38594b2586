#pragma once

#include <array>
#include <span>
#include <vector>

#include "theta/core/hand.hpp"
#include "theta/net/tensor.hpp"

namespace theta::net {

inline constexpr double kDefaultTemperature = 2.0;
inline constexpr double kDefaultGamma = 2.0;

using BinCounts = std::array<std::array<double, kNumBins>, kNumJoints>;
/// Per (joint, bin) loss weights; positive, mean 1 per joint.
using ClassWeights = std::array<std::array<double, kNumBins>, kNumJoints>;

ClassWeights uniform_weights();

/// Softmax of z / T over each consecutive group of 10 values (one joint row),
/// with max subtraction. Output has the input's shape. Throws ArgumentError
/// for T <= 0 and ShapeError when the size is not a multiple of 10.
template <typename T>
Tensor<T> temperature_softmax(const Tensor<T>& logits, double temperature = kDefaultTemperature);

/// w = 1 / max(count, floor), rescaled per joint to mean 1. Throws DataError
/// when a joint has no samples at all.
ClassWeights inverse_frequency_weights(const BinCounts& counts, double floor = 1.0);

BinCounts label_histogram(std::span<const BinLabels> labels);

/// Mean over (sample, joint) of -alpha[j][y] (1 - p_y)^gamma ln(p_y), with p_y
/// clamped to at least 1e-12. probabilities is (B, 150) or (B, 15, 10).
/// Throws LabelError for a bin outside 0..9 and ArgumentError for gamma < 0.
template <typename T>
double focal_loss(const Tensor<T>& probabilities, std::span<const BinLabels> labels, const ClassWeights& alpha,
                  double gamma = kDefaultGamma);

template <typename T>
struct LossAndGrad {
  double loss = 0.0;
  Tensor<T> dlogits;
};

/// Focal loss of temperature_softmax(logits) together with its gradient with
/// respect to the logits.
template <typename T>
LossAndGrad<T> focal_loss_with_grad(const Tensor<T>& logits, std::span<const BinLabels> labels,
                                    const ClassWeights& alpha, double gamma = kDefaultGamma,
                                    double temperature = kDefaultTemperature);

struct BinPrediction {
  BinLabels bins{};
  std::array<double, kNumJoints> confidence{};
};

/// Per-joint argmax of temperature_softmax (lowest index on ties) and its
/// probability, one entry per batch row.
template <typename T>
std::vector<BinPrediction> predict_from_logits(const Tensor<T>& logits, double temperature = kDefaultTemperature);

}  // namespace theta::net
