#include <gtest/gtest.h>

#include "theta/core/error.hpp"
#include "theta/core/rng.hpp"
#include "theta/metrics/confusion.hpp"

using namespace theta;
using namespace theta::metrics;

namespace {

BinLabels all(int b) {
  BinLabels l{};
  l.fill(b);
  return l;
}

// Truth/prediction multiset giving [[8,2],[1,9]] on every joint.
ConfusionSet toy() {
  ConfusionSet cm;
  for (int i = 0; i < 8; ++i) cm.add(all(0), all(0));
  for (int i = 0; i < 2; ++i) cm.add(all(1), all(0));
  for (int i = 0; i < 1; ++i) cm.add(all(0), all(1));
  for (int i = 0; i < 9; ++i) cm.add(all(1), all(1));
  return cm;
}

}  // namespace

TEST(Confusion, TwoBinToy) {
  const ConfusionSet cm = toy();
  EXPECT_EQ(cm.joint(0)[0][0], 8u);
  EXPECT_EQ(cm.joint(0)[0][1], 2u);
  EXPECT_EQ(cm.joint(0)[1][0], 1u);
  EXPECT_EQ(cm.joint(0)[1][1], 9u);

  const double p = (8.0 / 9.0 + 9.0 / 11.0) / 2.0;
  const double r = (8.0 / 10.0 + 9.0 / 10.0) / 2.0;
  const Summary s = summarize(cm);
  EXPECT_NEAR(s.accuracy, 0.85, 1e-12);
  EXPECT_NEAR(s.precision, p, 1e-12);
  EXPECT_NEAR(s.recall, r, 1e-12);
  EXPECT_NEAR(s.f1, 2 * p * r / (p + r), 1e-12);
}

TEST(Confusion, PerfectPredictions) {
  ConfusionSet cm;
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    BinLabels l{};
    for (int& b : l) b = static_cast<int>(rng.below(10));
    cm.add(l, l);
  }
  const Summary s = summarize(cm);
  EXPECT_DOUBLE_EQ(s.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(s.precision, 1.0);
  EXPECT_DOUBLE_EQ(s.recall, 1.0);
  EXPECT_DOUBLE_EQ(s.f1, 1.0);
}

TEST(Confusion, AllWrongGivesZeroF1) {
  ConfusionSet cm;
  cm.add(all(3), all(4));
  cm.add(all(4), all(3));
  const Summary s = summarize(cm);
  EXPECT_EQ(s.accuracy, 0.0);
  EXPECT_EQ(s.f1, 0.0);
}

TEST(Confusion, EmptyAndBadLabels) {
  EXPECT_THROW(summarize(ConfusionSet{}), DataError);
  ConfusionSet cm;
  BinLabels bad = all(0);
  bad[7] = 10;
  EXPECT_THROW(cm.add(bad, all(0)), LabelError);
  bad[7] = -1;
  EXPECT_THROW(cm.add(all(0), bad), LabelError);
  EXPECT_EQ(cm.samples(), 0u);
}

TEST(Confusion, ShapeMismatch) {
  std::vector<BinLabels> a(3, all(0)), b(2, all(0));
  EXPECT_THROW(accumulate(a, b), ShapeError);
}

TEST(Confusion, MergeIsAssociativeAndCountsAdd) {
  Rng rng(9);
  std::vector<BinLabels> pred(90), truth(90);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (int j = 0; j < 15; ++j) {
      pred[i][j] = static_cast<int>(rng.below(10));
      truth[i][j] = static_cast<int>(rng.below(10));
    }
  }
  const std::span<const BinLabels> P(pred), T(truth);
  const ConfusionSet whole = accumulate(P, T);
  ConfusionSet a = accumulate(P.subspan(0, 30), T.subspan(0, 30));
  ConfusionSet b = accumulate(P.subspan(30, 30), T.subspan(30, 30));
  ConfusionSet c = accumulate(P.subspan(60), T.subspan(60));
  ConfusionSet left = a;
  left.merge(b);
  left.merge(c);
  ConfusionSet right = b;
  right.merge(c);
  ConfusionSet right2 = a;
  right2.merge(right);
  EXPECT_EQ(left, whole);
  EXPECT_EQ(right2, whole);
  EXPECT_EQ(whole.total(), 90u * 15u);
  EXPECT_EQ(whole.samples(), 90u);
}

TEST(Confusion, SummaryInUnitInterval) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    ConfusionSet cm;
    for (int i = 0; i < 40; ++i) {
      BinLabels p{}, t{};
      for (int j = 0; j < 15; ++j) {
        t[j] = static_cast<int>(rng.below(10));
        p[j] = rng.uniform() < 0.6 ? t[j] : static_cast<int>(rng.below(10));
      }
      cm.add(p, t);
    }
    const Summary s = summarize(cm);
    for (double v : {s.accuracy, s.precision, s.recall, s.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    const auto ja = joint_accuracy(cm);
    double mean = 0;
    for (double a : ja) mean += a / 15.0;
    EXPECT_NEAR(mean, s.accuracy, 1e-12);
  }
}
