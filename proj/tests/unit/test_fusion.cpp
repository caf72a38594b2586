#include <gtest/gtest.h>

#include "theta/core/error.hpp"
#include "theta/core/rng.hpp"
#include "theta/fusion/fusion.hpp"

using namespace theta;
using namespace theta::fusion;

namespace {

using Streams = std::array<std::vector<TimedFrame<int>>, kStreamCount>;

Streams make(std::initializer_list<double> a, std::initializer_list<double> b, std::initializer_list<double> c) {
  Streams s;
  int id = 0;
  for (double t : a) s[0].push_back({t, id++});
  for (double t : b) s[1].push_back({t, id++});
  for (double t : c) s[2].push_back({t, id++});
  return s;
}

// Largest set of order-preserving, non-overlapping in-window triples; DP over
// stream prefixes.
std::size_t max_matching(const Streams& s, double window) {
  const std::size_t A = s[0].size(), B = s[1].size(), C = s[2].size();
  std::vector<std::size_t> dp((A + 1) * (B + 1) * (C + 1), 0);
  auto at = [&](std::size_t i, std::size_t j, std::size_t k) -> std::size_t& {
    return dp[(i * (B + 1) + j) * (C + 1) + k];
  };
  for (std::size_t i = 0; i <= A; ++i)
    for (std::size_t j = 0; j <= B; ++j)
      for (std::size_t k = 0; k <= C; ++k) {
        std::size_t best = 0;
        if (i) best = std::max(best, at(i - 1, j, k));
        if (j) best = std::max(best, at(i, j - 1, k));
        if (k) best = std::max(best, at(i, j, k - 1));
        if (i && j && k) {
          const double ts[3] = {s[0][i - 1].timestamp_ms, s[1][j - 1].timestamp_ms, s[2][k - 1].timestamp_ms};
          if (*std::max_element(ts, ts + 3) - *std::min_element(ts, ts + 3) <= window)
            best = std::max(best, at(i - 1, j - 1, k - 1) + 1);
        }
        at(i, j, k) = best;
      }
  return at(A, B, C);
}

PlanarImage constant(float v, int h = 4, int w = 5) {
  PlanarImage p;
  p.channels = 3;
  p.height = h;
  p.width = w;
  p.values.assign(static_cast<std::size_t>(3 * h * w), v);
  return p;
}

}  // namespace

TEST(Synchronize, IdenticalTimestamps) {
  const auto r = synchronize(make({0, 33, 66}, {0, 33, 66}, {0, 33, 66}));
  EXPECT_EQ(r.triplets.size(), 3u);
  EXPECT_EQ(r.dropped, 0u);
}

TEST(Synchronize, WindowViolationDropsEverything) {
  const auto r = synchronize(make({0, 33}, {0, 33}, {100}));
  EXPECT_EQ(r.triplets.size(), 0u);
  EXPECT_EQ(r.dropped, 5u);
}

TEST(Synchronize, StaggeredStreamsAgainstExhaustiveOracle) {
  const Streams s = make({0, 33, 66}, {5, 38, 71}, {12, 45, 79});
  EXPECT_EQ(max_matching(s, 16), 3u);
  EXPECT_EQ(max_matching(s, 8), 0u);
  EXPECT_EQ(synchronize(s, 16).triplets.size(), 3u);
  EXPECT_EQ(synchronize(s, 8).triplets.size(), 0u);
  for (const auto& t : synchronize(s, 16).triplets) {
    EXPECT_LE(skew_ms({t[0].timestamp_ms, t[1].timestamp_ms, t[2].timestamp_ms}), 16.0);
  }
}

TEST(Synchronize, NonMonotoneRejected) {
  EXPECT_THROW(synchronize(make({0, 33, 20}, {0}, {0})), StreamError);
  Synchronizer<int> sync;
  sync.push(1, {10, 0});
  EXPECT_THROW(sync.push(1, {9, 0}), StreamError);
}

TEST(Synchronize, RandomCamerasConserveFrames) {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    Streams s;
    const double period = 1000.0 / 30.0;
    const int n = 1 + static_cast<int>(rng.below(12));
    int id = 0;
    for (std::size_t c = 0; c < kStreamCount; ++c) {
      const double offset = rng.uniform(0.0, 20.0);
      for (int i = 0; i < n; ++i) {
        if (rng.uniform() < 0.1) continue;  // missing frame
        s[c].push_back({offset + i * period + rng.uniform(-3.0, 3.0), id++});
      }
    }
    const double window = rng.uniform(4.0, 20.0);
    const auto r = synchronize(s, window);
    const std::size_t total = s[0].size() + s[1].size() + s[2].size();
    EXPECT_EQ(r.dropped + 3 * r.triplets.size(), total);
    EXPECT_LE(r.triplets.size(), max_matching(s, window));
    double last = -1e9;
    for (const auto& t : r.triplets) {
      EXPECT_LE(skew_ms({t[0].timestamp_ms, t[1].timestamp_ms, t[2].timestamp_ms}), window);
      EXPECT_GE(t[0].timestamp_ms, last);
      last = t[0].timestamp_ms;
    }
  }
}

TEST(Synchronizer, BoundedQueuesDropOldest) {
  Synchronizer<int> sync(16.0, 8);
  for (int i = 0; i < 20; ++i) sync.push(0, {i * 33.0, i});
  EXPECT_EQ(sync.queued(0), 8u);
  EXPECT_EQ(sync.dropped(), 12u);
  EXPECT_FALSE(sync.pop().has_value());
  sync.push(1, {19 * 33.0, 100});
  sync.push(2, {19 * 33.0 + 2, 200});
  const auto t = sync.pop();
  ASSERT_TRUE(t.has_value());
  EXPECT_EQ((*t)[0].frame, 19);
  EXPECT_EQ(sync.dropped() + 3 * sync.emitted(), sync.consumed());
}

TEST(Synchronizer, BadArguments) {
  EXPECT_THROW(Synchronizer<int>(-1.0), ArgumentError);
  EXPECT_THROW(Synchronizer<int>(16.0, 0), ArgumentError);
  Synchronizer<int> sync;
  EXPECT_THROW(sync.push(3, {0, 0}), ArgumentError);
}

TEST(Compose, IdenticalViews) {
  Rng rng(2);
  PlanarImage v = constant(0.0f);
  for (float& x : v.values) x = static_cast<float>(rng.uniform(-1, 1));
  const FusedTensor t = compose({v, v, v, {0, 0, 0}});
  ASSERT_EQ(t.values.channels, 9);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 5; ++x) {
        EXPECT_EQ(t.values.at(c, y, x), t.values.at(c + 3, y, x));
        EXPECT_EQ(t.values.at(c, y, x), t.values.at(c + 6, y, x));
      }
}

TEST(Compose, ChannelMeansFollowViewOrder) {
  const FusedTensor t = compose({constant(0.25f), constant(-0.5f), constant(0.75f), {0, 3, 9}});
  const float want[3] = {0.25f, -0.5f, 0.75f};
  const std::size_t plane = 4 * 5;
  for (int c = 0; c < 9; ++c) {
    double sum = 0;
    for (std::size_t i = 0; i < plane; ++i) sum += t.values.values[c * plane + i];
    EXPECT_DOUBLE_EQ(sum / plane, want[c / 3]);
  }
  for (float v : compose({constant(-1), constant(-1), constant(-1), {}}).values.values) EXPECT_EQ(v, -1.0f);
}

TEST(Compose, PermutingViewsPermutesBlocks) {
  Rng rng(6);
  PlanarImage a = constant(0), b = constant(0), c = constant(0);
  for (auto* p : {&a, &b, &c})
    for (float& x : p->values) x = static_cast<float>(rng.uniform(-1, 1));
  const auto abc = compose({a, b, c, {}}).values.values;
  const auto cab = compose({c, a, b, {}}).values.values;
  const std::size_t block = a.values.size();
  for (std::size_t i = 0; i < block; ++i) {
    EXPECT_EQ(abc[i], cab[block + i]);
    EXPECT_EQ(abc[block + i], cab[2 * block + i]);
    EXPECT_EQ(abc[2 * block + i], cab[i]);
  }
}

TEST(Compose, Errors) {
  EXPECT_THROW(compose({constant(0), constant(0), constant(0), {0, 0, 17}}), SyncError);
  EXPECT_NO_THROW(compose({constant(0), constant(0), constant(0), {0, 0, 16}}));
  EXPECT_THROW(compose({constant(0), constant(0, 4, 6), constant(0), {}}), ShapeError);
}
