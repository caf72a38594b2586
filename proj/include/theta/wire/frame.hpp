#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace theta::wire {

inline constexpr std::size_t kNumServos = 15;
inline constexpr int kMaxServoDeg = 180;

/// 15 servo-space commands, each 0..180. Range is enforced at construction.
class ServoFrame {
 public:
  ServoFrame() = default;
  explicit ServoFrame(const std::array<int, kNumServos>& angles);

  const std::array<int, kNumServos>& angles() const { return angles_; }
  int operator[](std::size_t i) const { return angles_[i]; }

  friend bool operator==(const ServoFrame&, const ServoFrame&) = default;

 private:
  std::array<int, kNumServos> angles_{};
};

/// XOR of all bytes; zero for an empty span.
std::uint8_t xor_checksum(std::span<const std::uint8_t> bytes);
std::uint8_t xor_checksum(std::string_view bytes);

/// "S," + comma-joined decimal angles + "*" + two uppercase hex digits + "\n".
/// The checksum covers the bytes between "S," and "*".
std::string encode_frame(const ServoFrame& frame);

struct ParserCounters {
  std::uint64_t frames_ok = 0;
  std::uint64_t frames_bad_checksum = 0;
  std::uint64_t frames_malformed = 0;
  std::uint64_t bytes_discarded = 0;
  // Bytes that belonged to accepted frames.
  std::uint64_t bytes_accepted = 0;

  friend bool operator==(const ParserCounters&, const ParserCounters&) = default;
};

/// Incremental frame parser, written the way it would run on the
/// microcontroller: fixed buffer, no exceptions, errors become counters.
class FrameParser {
 public:
  enum class State : std::uint8_t { seeking_start, reading_payload, reading_checksum };

  static constexpr std::size_t kBufferCapacity = 128;

  /// Consumes a chunk; returns frames completed within it.
  std::vector<ServoFrame> feed(std::span<const std::uint8_t> bytes);
  std::vector<ServoFrame> feed(std::string_view bytes);

  State state() const { return state_; }
  const ParserCounters& counters() const { return counters_; }
  /// Bytes held for the frame currently being assembled.
  std::size_t pending_bytes() const { return pending_; }
  std::size_t buffer_size() const { return payload_len_; }
  /// Largest payload buffer fill observed so far.
  std::size_t buffer_high_water() const { return high_water_; }

 private:
  void consume(std::uint8_t byte, std::vector<ServoFrame>& out);
  void begin_frame();
  void discard_frame(std::uint64_t& counter, std::uint8_t byte);
  bool decode_payload(ServoFrame& frame) const;

  State state_ = State::seeking_start;
  bool comma_seen_ = false;
  std::array<std::uint8_t, kBufferCapacity> payload_{};
  std::size_t payload_len_ = 0;
  std::uint8_t checksum_digits_[2] = {0, 0};
  std::size_t checksum_len_ = 0;
  std::size_t pending_ = 0;
  std::size_t high_water_ = 0;
  ParserCounters counters_;
};

}  // namespace theta::wire
