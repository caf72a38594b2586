#pragma once

#include <condition_variable>
#include <chrono>
#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "theta/core/error.hpp"

namespace theta::wire {

/// Bounded FIFO that discards its oldest entry on overflow. Push never blocks.
template <typename T>
class DropOldestQueue {
 public:
  explicit DropOldestQueue(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ArgumentError("queue capacity must be positive");
  }

  void push(T value) {
    {
      std::lock_guard lock(mutex_);
      if (items_.size() == capacity_) {
        items_.pop_front();
        ++dropped_;
      }
      items_.push_back(std::move(value));
    }
    ready_.notify_one();
  }

  std::optional<T> try_pop() {
    std::lock_guard lock(mutex_);
    if (items_.empty()) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    return v;
  }

  template <typename Rep, typename Period>
  std::optional<T> pop_for(std::chrono::duration<Rep, Period> timeout) {
    std::unique_lock lock(mutex_);
    if (!ready_.wait_for(lock, timeout, [&] { return !items_.empty(); })) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    return v;
  }

  std::vector<T> drain() {
    std::lock_guard lock(mutex_);
    std::vector<T> out(std::make_move_iterator(items_.begin()),
                       std::make_move_iterator(items_.end()));
    items_.clear();
    return out;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }
  std::size_t capacity() const { return capacity_; }
  std::size_t dropped() const {
    std::lock_guard lock(mutex_);
    return dropped_;
  }

 private:
  const std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<T> items_;
  std::size_t dropped_ = 0;
};

/// In-process publish/subscribe bus. Each subscriber owns a drop-oldest queue;
/// messages published before a subscription exists are not replayed.
template <typename Message>
class TopicBus {
 public:
  using Subscription = std::shared_ptr<DropOldestQueue<Message>>;

  static constexpr std::size_t kDefaultCapacity = 4;

  explicit TopicBus(std::size_t capacity = kDefaultCapacity) : capacity_(capacity) {}

  /// Creates the topic if it does not exist yet.
  Subscription subscribe(const std::string& topic) {
    check_name(topic);
    auto sub = std::make_shared<DropOldestQueue<Message>>(capacity_);
    std::lock_guard lock(mutex_);
    topics_[topic].push_back(sub);
    return sub;
  }

  void publish(const std::string& topic, const Message& message) {
    check_name(topic);
    std::vector<Subscription> targets;
    {
      std::lock_guard lock(mutex_);
      auto it = topics_.find(topic);
      if (it == topics_.end()) {
        topics_.emplace(topic, std::vector<Subscription>{});
        return;
      }
      targets = it->second;
    }
    for (auto& sub : targets) sub->push(message);
  }

  std::size_t subscriber_count(const std::string& topic) const {
    std::lock_guard lock(mutex_);
    auto it = topics_.find(topic);
    return it == topics_.end() ? 0 : it->second.size();
  }

 private:
  static void check_name(const std::string& topic) {
    if (topic.empty()) throw ArgumentError("topic name must be non-empty");
  }

  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<Subscription>> topics_;
};

/// Topic carrying servo command frames between the controller and serial nodes.
inline constexpr const char* kServoCommandTopic = "dexhand_hw_command";

}  // namespace theta::wire
