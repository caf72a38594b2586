#include "theta/metrics/confusion.hpp"

#include <string>

#include "theta/core/error.hpp"

namespace theta::metrics {

namespace {

void check_bin(int bin) {
  if (bin < 0 || bin >= static_cast<int>(kNumBins)) {
    throw LabelError("bin " + std::to_string(bin) + " outside 0..9");
  }
}

}  // namespace

void ConfusionSet::add(const BinLabels& predicted, const BinLabels& truth) {
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    check_bin(predicted[j]);
    check_bin(truth[j]);
  }
  for (std::size_t j = 0; j < kNumJoints; ++j) ++matrices_[j][truth[j]][predicted[j]];
  ++samples_;
}

void ConfusionSet::merge(const ConfusionSet& other) {
  for (std::size_t j = 0; j < kNumJoints; ++j)
    for (std::size_t t = 0; t < kNumBins; ++t)
      for (std::size_t p = 0; p < kNumBins; ++p) matrices_[j][t][p] += other.matrices_[j][t][p];
  samples_ += other.samples_;
}

std::uint64_t ConfusionSet::total() const {
  std::uint64_t n = 0;
  for (const auto& m : matrices_)
    for (const auto& row : m)
      for (auto c : row) n += c;
  return n;
}

ConfusionSet accumulate(std::span<const BinLabels> predicted, std::span<const BinLabels> truth) {
  if (predicted.size() != truth.size()) {
    throw ShapeError("prediction count " + std::to_string(predicted.size()) +
                     " != label count " + std::to_string(truth.size()));
  }
  ConfusionSet cm;
  for (std::size_t i = 0; i < predicted.size(); ++i) cm.add(predicted[i], truth[i]);
  return cm;
}

Summary summarize(const ConfusionSet& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw DataError("cannot summarize empty confusion matrices");

  std::uint64_t diagonal = 0;
  double precision_sum = 0.0;
  double recall_sum = 0.0;
  int joints_with_precision = 0;
  int joints_with_recall = 0;

  for (std::size_t j = 0; j < kNumJoints; ++j) {
    const auto& m = cm.joint(j);
    double p_sum = 0.0, r_sum = 0.0;
    int p_n = 0, r_n = 0;
    for (std::size_t b = 0; b < kNumBins; ++b) {
      const std::uint64_t tp = m[b][b];
      diagonal += tp;
      std::uint64_t row = 0, col = 0;
      for (std::size_t k = 0; k < kNumBins; ++k) {
        row += m[b][k];
        col += m[k][b];
      }
      if (col > 0) {
        p_sum += static_cast<double>(tp) / static_cast<double>(col);
        ++p_n;
      }
      if (row > 0) {
        r_sum += static_cast<double>(tp) / static_cast<double>(row);
        ++r_n;
      }
    }
    if (p_n > 0) {
      precision_sum += p_sum / p_n;
      ++joints_with_precision;
    }
    if (r_n > 0) {
      recall_sum += r_sum / r_n;
      ++joints_with_recall;
    }
  }

  Summary s;
  s.accuracy = static_cast<double>(diagonal) / static_cast<double>(total);
  s.precision = joints_with_precision ? precision_sum / joints_with_precision : 0.0;
  s.recall = joints_with_recall ? recall_sum / joints_with_recall : 0.0;
  s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                                         : 0.0;
  return s;
}

std::array<double, kNumJoints> joint_accuracy(const ConfusionSet& cm) {
  std::array<double, kNumJoints> out{};
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    std::uint64_t diag = 0, n = 0;
    for (std::size_t t = 0; t < kNumBins; ++t)
      for (std::size_t p = 0; p < kNumBins; ++p) {
        n += cm.joint(j)[t][p];
        if (t == p) diag += cm.joint(j)[t][p];
      }
    out[j] = n ? static_cast<double>(diag) / static_cast<double>(n) : 0.0;
  }
  return out;
}

}  // namespace theta::metrics
