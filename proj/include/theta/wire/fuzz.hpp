#pragma once

#include <cstdint>

#include "theta/wire/frame.hpp"

namespace theta::wire {

struct FuzzOptions {
  std::uint64_t frames = 10000;
  std::uint64_t seed = 0;
  int max_garbage_burst = 48;
  // Chance that a gap between valid frames also carries a frame with one
  // byte flipped, or one cut short.
  double corrupt_probability = 0.25;
  double truncate_probability = 0.1;
  int max_chunk = 64;
};

struct FuzzReport {
  std::uint64_t frames_injected = 0;
  std::uint64_t corrupted_injected = 0;
  std::uint64_t truncated_injected = 0;
  std::uint64_t garbage_bytes = 0;
  std::uint64_t bytes_total = 0;
  std::uint64_t chunks = 0;
  // Emitted frames matched against the injected schedule, in order.
  std::uint64_t frames_matched = 0;
  std::uint64_t corrupt_accepted = 0;
  std::uint64_t frames_missed = 0;
  std::uint64_t buffer_high_water = 0;
  ParserCounters parser;

  friend bool operator==(const FuzzReport&, const FuzzReport&) = default;
};

/// Random valid frames separated by seeded garbage bursts, flipped-byte and
/// truncated frames, fed to a fresh parser in random chunk sizes. Draws from
/// the "wire.fuzz" stream of the seed.
FuzzReport run_protocol_fuzz(const FuzzOptions& options);

}  // namespace theta::wire
