#include "theta/wire/fuzz.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "theta/core/error.hpp"
#include "theta/core/rng.hpp"

namespace theta::wire {

namespace {

ServoFrame random_frame(Rng& rng) {
  std::array<int, kNumServos> a{};
  for (int& v : a) v = static_cast<int>(rng.between(0, kMaxServoDeg));
  return ServoFrame(a);
}

}  // namespace

FuzzReport run_protocol_fuzz(const FuzzOptions& options) {
  if (options.max_garbage_burst < 0 || options.max_chunk < 1) throw ArgumentError("fuzz sizes must be positive");
  Rng rng = derive_rng(options.seed, "wire.fuzz");
  FuzzReport report;
  std::vector<ServoFrame> schedule;
  schedule.reserve(options.frames);
  std::string stream;

  for (std::uint64_t i = 0; i < options.frames; ++i) {
    const auto burst = static_cast<int>(rng.between(0, options.max_garbage_burst));
    for (int k = 0; k < burst; ++k) stream.push_back(static_cast<char>(rng.below(256)));
    report.garbage_bytes += static_cast<std::uint64_t>(burst);

    if (rng.uniform() < options.corrupt_probability) {
      std::string bad = encode_frame(random_frame(rng));
      // Everything up to the checksum; the trailing newline is not covered.
      const std::size_t pos = rng.below(bad.size() - 1);
      const auto flip = static_cast<char>(1 + rng.below(255));
      bad[pos] = static_cast<char>(bad[pos] ^ flip);
      stream += bad;
      ++report.corrupted_injected;
    }
    if (rng.uniform() < options.truncate_probability) {
      const std::string full = encode_frame(random_frame(rng));
      stream += full.substr(0, 1 + rng.below(full.size() - 2));
      ++report.truncated_injected;
    }

    schedule.push_back(random_frame(rng));
    stream += encode_frame(schedule.back());
    ++report.frames_injected;
  }

  FrameParser parser;
  std::vector<ServoFrame> emitted;
  std::size_t pos = 0;
  while (pos < stream.size()) {
    const auto n = std::min<std::size_t>(stream.size() - pos, 1 + rng.below(static_cast<std::uint64_t>(options.max_chunk)));
    for (auto& f : parser.feed(std::string_view(stream).substr(pos, n))) emitted.push_back(f);
    pos += n;
    ++report.chunks;
  }

  std::size_t next = 0;
  for (const auto& f : emitted) {
    if (next < schedule.size() && f == schedule[next]) {
      ++report.frames_matched;
      ++next;
    } else {
      ++report.corrupt_accepted;
    }
  }
  report.frames_missed = schedule.size() - report.frames_matched;
  report.bytes_total = stream.size();
  report.buffer_high_water = parser.buffer_high_water();
  report.parser = parser.counters();
  return report;
}

}  // namespace theta::wire
