#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "theta/core/hand.hpp"

namespace theta::metrics {

/// Per-joint 10x10 count matrices, rows = true bin, columns = predicted bin.
class ConfusionSet {
 public:
  using Matrix = std::array<std::array<std::uint64_t, kNumBins>, kNumBins>;

  /// Adds one sample (15 predicted and 15 true bins). Throws LabelError on a
  /// bin outside 0..9.
  void add(const BinLabels& predicted, const BinLabels& truth);
  /// Cell-wise sum; accumulation is associative so shards can be merged.
  void merge(const ConfusionSet& other);

  const Matrix& joint(std::size_t j) const { return matrices_[j]; }
  Matrix& joint(std::size_t j) { return matrices_[j]; }
  std::uint64_t samples() const { return samples_; }
  std::uint64_t total() const;

  friend bool operator==(const ConfusionSet&, const ConfusionSet&) = default;

 private:
  std::array<Matrix, kNumJoints> matrices_{};
  std::uint64_t samples_ = 0;
};

ConfusionSet accumulate(std::span<const BinLabels> predicted, std::span<const BinLabels> truth);

struct Summary {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Accuracy over all (sample, joint) cells; precision and recall macro-averaged
/// over bins with a non-zero denominator, then over joints; F1 from the macro P
/// and R. Throws DataError on an empty set.
Summary summarize(const ConfusionSet& cm);

/// Per-joint accuracy (diagonal / row total for that joint).
std::array<double, kNumJoints> joint_accuracy(const ConfusionSet& cm);

}  // namespace theta::metrics
