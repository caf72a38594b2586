#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "theta/core/error.hpp"
#include "theta/core/image.hpp"

namespace theta::fusion {

inline constexpr double kDefaultSyncWindowMs = 16.0;
inline constexpr std::size_t kStreamQueueCapacity = 8;

/// Stream slots in fixed channel order: front, right, left.
inline constexpr std::size_t kStreamCount = 3;

template <typename Payload>
struct TimedFrame {
  double timestamp_ms = 0.0;
  Payload frame;
};

template <typename Payload>
using Matched = std::array<TimedFrame<Payload>, kStreamCount>;

inline double skew_ms(const std::array<double, kStreamCount>& ts) {
  const auto [lo, hi] = std::minmax_element(ts.begin(), ts.end());
  return *hi - *lo;
}

/// Online greedy matcher for three free-running cameras. Each stream is held
/// in a drop-oldest queue; whenever all three heads are present they are
/// either emitted together (span within the window) or the oldest head is
/// dropped, since no later frame of the other streams can bring it back
/// inside the window.
template <typename Payload>
class Synchronizer {
 public:
  explicit Synchronizer(double window_ms = kDefaultSyncWindowMs,
                        std::size_t capacity = kStreamQueueCapacity)
      : window_ms_(window_ms), capacity_(capacity) {
    if (!(window_ms >= 0.0)) throw ArgumentError("sync window must be non-negative");
    if (capacity == 0) throw ArgumentError("stream queue capacity must be positive");
  }

  /// Throws StreamError when a stream's timestamps go backwards.
  void push(std::size_t stream, TimedFrame<Payload> frame) {
    std::lock_guard lock(mutex_);
    if (stream >= kStreamCount) throw ArgumentError("stream index out of range");
    if (last_ts_[stream] && frame.timestamp_ms < *last_ts_[stream]) {
      throw StreamError("stream " + std::to_string(stream) + " timestamp went backwards");
    }
    last_ts_[stream] = frame.timestamp_ms;
    ++consumed_;
    auto& q = queues_[stream];
    if (q.size() == capacity_) {
      q.pop_front();
      ++dropped_;
    }
    q.push_back(std::move(frame));
  }

  /// Next matched triplet, if one can be formed from what has been pushed.
  std::optional<Matched<Payload>> pop() {
    std::lock_guard lock(mutex_);
    while (std::all_of(queues_.begin(), queues_.end(), [](const auto& q) { return !q.empty(); })) {
      std::array<double, kStreamCount> ts{};
      for (std::size_t s = 0; s < kStreamCount; ++s) ts[s] = queues_[s].front().timestamp_ms;
      if (skew_ms(ts) <= window_ms_) {
        Matched<Payload> out;
        for (std::size_t s = 0; s < kStreamCount; ++s) {
          out[s] = std::move(queues_[s].front());
          queues_[s].pop_front();
        }
        ++emitted_;
        return out;
      }
      const auto oldest = static_cast<std::size_t>(std::min_element(ts.begin(), ts.end()) - ts.begin());
      queues_[oldest].pop_front();
      ++dropped_;
    }
    return std::nullopt;
  }

  /// Drops whatever is still queued (end of input).
  void flush() {
    std::lock_guard lock(mutex_);
    for (auto& q : queues_) {
      dropped_ += q.size();
      q.clear();
    }
  }

  double window_ms() const { return window_ms_; }
  std::size_t emitted() const {
    std::lock_guard lock(mutex_);
    return emitted_;
  }
  std::size_t dropped() const {
    std::lock_guard lock(mutex_);
    return dropped_;
  }
  std::size_t consumed() const {
    std::lock_guard lock(mutex_);
    return consumed_;
  }
  std::size_t queued(std::size_t stream) const {
    std::lock_guard lock(mutex_);
    return queues_.at(stream).size();
  }

 private:
  double window_ms_;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::array<std::deque<TimedFrame<Payload>>, kStreamCount> queues_;
  std::array<std::optional<double>, kStreamCount> last_ts_;
  std::size_t emitted_ = 0;
  std::size_t dropped_ = 0;
  std::size_t consumed_ = 0;
};

template <typename Payload>
struct SyncResult {
  std::vector<Matched<Payload>> triplets;
  std::size_t dropped = 0;
};

/// Batch form: matches complete recorded streams. Queue capacity is unbounded
/// here so that nothing is lost to overflow.
template <typename Payload>
SyncResult<Payload> synchronize(const std::array<std::vector<TimedFrame<Payload>>, kStreamCount>& streams,
                                double window_ms = kDefaultSyncWindowMs) {
  std::size_t longest = 1;
  for (const auto& s : streams) longest = std::max(longest, s.size());
  for (const auto& s : streams) {
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (s[i].timestamp_ms < s[i - 1].timestamp_ms) throw StreamError("stream is not monotone");
    }
  }
  Synchronizer<Payload> sync(window_ms, longest);
  SyncResult<Payload> out;
  std::array<std::size_t, kStreamCount> next{};
  // Feed in global timestamp order so the online matcher sees what a live
  // system would.
  for (;;) {
    std::size_t best = kStreamCount;
    for (std::size_t s = 0; s < kStreamCount; ++s) {
      if (next[s] < streams[s].size() &&
          (best == kStreamCount ||
           streams[s][next[s]].timestamp_ms < streams[best][next[best]].timestamp_ms)) {
        best = s;
      }
    }
    if (best == kStreamCount) break;
    sync.push(best, streams[best][next[best]++]);
    while (auto t = sync.pop()) out.triplets.push_back(std::move(*t));
  }
  sync.flush();
  out.dropped = sync.dropped();
  return out;
}

/// Prepared views of one synchronized capture.
struct FrameTriplet {
  PlanarImage front;
  PlanarImage right;
  PlanarImage left;
  std::array<double, kStreamCount> timestamps_ms{};
};

inline constexpr int kFusedChannels = 9;

/// 9 x H x W tensor, channel order [front RGB, right RGB, left RGB].
struct FusedTensor {
  PlanarImage values;
};

/// Channel-stacks the three prepared views. Throws SyncError when the
/// timestamp skew exceeds the window and ShapeError on mismatched views.
FusedTensor compose(const FrameTriplet& triplet, double window_ms = kDefaultSyncWindowMs);

}  // namespace theta::fusion
