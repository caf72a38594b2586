#include "theta/net/loss.hpp"

#include <algorithm>
#include <cmath>

#include "theta/core/error.hpp"

namespace theta::net {

namespace {

constexpr double kProbFloor = 1e-12;

void check_temperature(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw ArgumentError("temperature must be positive");
}

std::size_t row_count(std::size_t size) {
  if (size % kNumBins != 0) throw ShapeError("logit count " + std::to_string(size) + " is not a multiple of 10");
  return size / kNumBins;
}

void check_labels(std::span<const BinLabels> labels, std::size_t rows) {
  if (labels.size() * kNumJoints != rows) {
    throw ShapeError(std::to_string(labels.size()) + " label rows for " + std::to_string(rows / kNumJoints) +
                     " samples");
  }
  for (const auto& l : labels) {
    for (int b : l) {
      if (b < 0 || b >= static_cast<int>(kNumBins)) throw LabelError("bin label " + std::to_string(b) + " outside 0..9");
    }
  }
}

// Softmax of one row into double.
template <typename T>
void softmax_row(const T* z, double temperature, double* p) {
  double m = z[0];
  for (std::size_t k = 1; k < kNumBins; ++k) m = std::max(m, static_cast<double>(z[k]));
  double s = 0.0;
  for (std::size_t k = 0; k < kNumBins; ++k) {
    p[k] = std::exp((z[k] - m) / temperature);
    s += p[k];
  }
  for (std::size_t k = 0; k < kNumBins; ++k) p[k] /= s;
}

double focal_term(double p, double alpha, double gamma) {
  const double pc = std::max(p, kProbFloor);
  return -alpha * std::pow(1.0 - p, gamma) * std::log(pc);
}

}  // namespace

ClassWeights uniform_weights() {
  ClassWeights w;
  for (auto& row : w) row.fill(1.0);
  return w;
}

template <typename T>
Tensor<T> temperature_softmax(const Tensor<T>& logits, double temperature) {
  check_temperature(temperature);
  const std::size_t rows = row_count(logits.size());
  Tensor<T> out(logits.shape());
  double p[kNumBins];
  for (std::size_t r = 0; r < rows; ++r) {
    softmax_row(logits.data() + r * kNumBins, temperature, p);
    for (std::size_t k = 0; k < kNumBins; ++k) out[r * kNumBins + k] = static_cast<T>(p[k]);
  }
  return out;
}

ClassWeights inverse_frequency_weights(const BinCounts& counts, double floor) {
  if (!(floor > 0.0)) throw ArgumentError("weight floor must be positive");
  ClassWeights w{};
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    double total = 0.0;
    for (double c : counts[j]) {
      if (c < 0.0) throw DataError("negative bin count");
      total += c;
    }
    if (total <= 0.0) throw DataError("joint " + std::to_string(j) + " has no labelled samples");
    double mean = 0.0;
    for (std::size_t b = 0; b < kNumBins; ++b) {
      w[j][b] = 1.0 / std::max(counts[j][b], floor);
      mean += w[j][b] / kNumBins;
    }
    for (double& v : w[j]) v /= mean;
  }
  return w;
}

BinCounts label_histogram(std::span<const BinLabels> labels) {
  BinCounts h{};
  for (const auto& l : labels) {
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      if (l[j] < 0 || l[j] >= static_cast<int>(kNumBins)) throw LabelError("bin label outside 0..9");
      h[j][static_cast<std::size_t>(l[j])] += 1.0;
    }
  }
  return h;
}

template <typename T>
double focal_loss(const Tensor<T>& probabilities, std::span<const BinLabels> labels, const ClassWeights& alpha,
                  double gamma) {
  if (!(gamma >= 0.0)) throw ArgumentError("gamma must be non-negative");
  const std::size_t rows = row_count(probabilities.size());
  check_labels(labels, rows);
  double sum = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t j = r % kNumJoints;
    const int y = labels[r / kNumJoints][j];
    sum += focal_term(probabilities[r * kNumBins + y], alpha[j][y], gamma);
  }
  return rows ? sum / static_cast<double>(rows) : 0.0;
}

template <typename T>
LossAndGrad<T> focal_loss_with_grad(const Tensor<T>& logits, std::span<const BinLabels> labels,
                                    const ClassWeights& alpha, double gamma, double temperature) {
  check_temperature(temperature);
  if (!(gamma >= 0.0)) throw ArgumentError("gamma must be non-negative");
  const std::size_t rows = row_count(logits.size());
  check_labels(labels, rows);
  LossAndGrad<T> out;
  out.dlogits = Tensor<T>(logits.shape());
  if (rows == 0) return out;
  const double inv_rows = 1.0 / static_cast<double>(rows);
  double p[kNumBins];
  double sum = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t j = r % kNumJoints;
    const int y = labels[r / kNumJoints][j];
    softmax_row(logits.data() + r * kNumBins, temperature, p);
    const double py = p[y], a = alpha[j][y];
    sum += focal_term(py, a, gamma);
    // p_y * d(term)/d(p_y); the clamp makes the log flat below the floor.
    const double q = 1.0 - py;
    double scaled = 0.0;
    if (gamma > 0.0 && q > 0.0) scaled += gamma * std::pow(q, gamma - 1.0) * py * std::log(std::max(py, kProbFloor));
    if (py >= kProbFloor) scaled -= std::pow(q, gamma);
    scaled *= a * inv_rows / temperature;
    for (std::size_t k = 0; k < kNumBins; ++k) {
      const double d = (static_cast<int>(k) == y ? 1.0 : 0.0) - p[k];
      out.dlogits[r * kNumBins + k] = static_cast<T>(scaled * d);
    }
  }
  out.loss = sum * inv_rows;
  return out;
}

template <typename T>
std::vector<BinPrediction> predict_from_logits(const Tensor<T>& logits, double temperature) {
  check_temperature(temperature);
  const std::size_t rows = row_count(logits.size());
  if (rows % kNumJoints != 0) throw ShapeError("logit rows are not a multiple of 15");
  std::vector<BinPrediction> out(rows / kNumJoints);
  double p[kNumBins];
  for (std::size_t r = 0; r < rows; ++r) {
    softmax_row(logits.data() + r * kNumBins, temperature, p);
    std::size_t best = 0;
    for (std::size_t k = 1; k < kNumBins; ++k) {
      if (p[k] > p[best]) best = k;
    }
    out[r / kNumJoints].bins[r % kNumJoints] = static_cast<int>(best);
    out[r / kNumJoints].confidence[r % kNumJoints] = p[best];
  }
  return out;
}

template Tensor<float> temperature_softmax<float>(const Tensor<float>&, double);
template Tensor<double> temperature_softmax<double>(const Tensor<double>&, double);
template double focal_loss<float>(const Tensor<float>&, std::span<const BinLabels>, const ClassWeights&, double);
template double focal_loss<double>(const Tensor<double>&, std::span<const BinLabels>, const ClassWeights&, double);
template LossAndGrad<float> focal_loss_with_grad<float>(const Tensor<float>&, std::span<const BinLabels>,
                                                        const ClassWeights&, double, double);
template LossAndGrad<double> focal_loss_with_grad<double>(const Tensor<double>&, std::span<const BinLabels>,
                                                          const ClassWeights&, double, double);
template std::vector<BinPrediction> predict_from_logits<float>(const Tensor<float>&, double);
template std::vector<BinPrediction> predict_from_logits<double>(const Tensor<double>&, double);

}  // namespace theta::net
