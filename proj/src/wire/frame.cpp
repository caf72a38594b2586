#include "theta/wire/frame.hpp"

#include <string_view>

#include "theta/core/error.hpp"

namespace theta::wire {

ServoFrame::ServoFrame(const std::array<int, kNumServos>& angles) : angles_(angles) {
  for (std::size_t i = 0; i < kNumServos; ++i) {
    if (angles[i] < 0 || angles[i] > kMaxServoDeg) {
      throw RangeError("servo " + std::to_string(i) + " command " + std::to_string(angles[i]) +
                       " outside 0..180");
    }
  }
}

std::uint8_t xor_checksum(std::span<const std::uint8_t> bytes) {
  std::uint8_t x = 0;
  for (std::uint8_t b : bytes) x ^= b;
  return x;
}

std::uint8_t xor_checksum(std::string_view bytes) {
  std::uint8_t x = 0;
  for (char c : bytes) x ^= static_cast<std::uint8_t>(c);
  return x;
}

namespace {

constexpr char kHex[] = "0123456789ABCDEF";

int hex_value(std::uint8_t c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

bool is_digit(std::uint8_t c) { return c >= '0' && c <= '9'; }

}  // namespace

std::string encode_frame(const ServoFrame& frame) {
  std::string payload;
  payload.reserve(64);
  for (std::size_t i = 0; i < kNumServos; ++i) {
    if (i) payload.push_back(',');
    payload += std::to_string(frame[i]);
  }
  const std::uint8_t sum = xor_checksum(payload);
  std::string out = "S,";
  out += payload;
  out.push_back('*');
  out.push_back(kHex[sum >> 4]);
  out.push_back(kHex[sum & 0x0F]);
  out.push_back('\n');
  return out;
}

std::vector<ServoFrame> FrameParser::feed(std::span<const std::uint8_t> bytes) {
  std::vector<ServoFrame> out;
  for (std::uint8_t b : bytes) consume(b, out);
  return out;
}

std::vector<ServoFrame> FrameParser::feed(std::string_view bytes) {
  return feed(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

void FrameParser::begin_frame() {
  state_ = State::reading_payload;
  comma_seen_ = false;
  payload_len_ = 0;
  checksum_len_ = 0;
  pending_ = 1;
}

void FrameParser::discard_frame(std::uint64_t& counter, std::uint8_t byte) {
  ++counter;
  if (byte == 'S') {
    // The offending byte opens the next frame.
    counters_.bytes_discarded += pending_ - 1;
    begin_frame();
    return;
  }
  counters_.bytes_discarded += pending_;
  pending_ = 0;
  payload_len_ = 0;
  state_ = State::seeking_start;
}

bool FrameParser::decode_payload(ServoFrame& frame) const {
  std::array<int, kNumServos> angles{};
  std::size_t field = 0;
  int value = 0;
  int digits = 0;
  for (std::size_t i = 0; i <= payload_len_; ++i) {
    const bool end = i == payload_len_;
    const std::uint8_t c = end ? ',' : payload_[i];
    if (c == ',') {
      if (digits == 0 || field >= kNumServos || value > kMaxServoDeg) return false;
      angles[field++] = value;
      value = 0;
      digits = 0;
    } else {
      if (++digits > 3) return false;
      value = value * 10 + (c - '0');
    }
  }
  if (field != kNumServos) return false;
  frame = ServoFrame(angles);
  return true;
}

void FrameParser::consume(std::uint8_t byte, std::vector<ServoFrame>& out) {
  switch (state_) {
    case State::seeking_start:
      if (byte == 'S') {
        begin_frame();
      } else {
        ++counters_.bytes_discarded;
      }
      return;

    case State::reading_payload:
      ++pending_;
      if (!comma_seen_) {
        if (byte == ',') {
          comma_seen_ = true;
        } else {
          discard_frame(counters_.frames_malformed, byte);
        }
        return;
      }
      if (byte == '*') {
        state_ = State::reading_checksum;
        return;
      }
      if (!(is_digit(byte) || byte == ',') || payload_len_ == kBufferCapacity) {
        discard_frame(counters_.frames_malformed, byte);
        return;
      }
      payload_[payload_len_++] = byte;
      if (payload_len_ > high_water_) high_water_ = payload_len_;
      return;

    case State::reading_checksum:
      ++pending_;
      if (checksum_len_ < 2) {
        if (hex_value(byte) < 0) {
          discard_frame(counters_.frames_malformed, byte);
          return;
        }
        checksum_digits_[checksum_len_++] = byte;
        return;
      }
      if (byte != '\n') {
        discard_frame(counters_.frames_malformed, byte);
        return;
      }
      {
        const int expected = hex_value(checksum_digits_[0]) * 16 + hex_value(checksum_digits_[1]);
        const std::uint8_t actual = xor_checksum(std::span(payload_.data(), payload_len_));
        if (expected != actual) {
          discard_frame(counters_.frames_bad_checksum, byte);
          return;
        }
        ServoFrame frame;
        if (!decode_payload(frame)) {
          discard_frame(counters_.frames_malformed, byte);
          return;
        }
        ++counters_.frames_ok;
        counters_.bytes_accepted += pending_;
        pending_ = 0;
        payload_len_ = 0;
        state_ = State::seeking_start;
        out.push_back(frame);
      }
      return;
  }
}

}  // namespace theta::wire
