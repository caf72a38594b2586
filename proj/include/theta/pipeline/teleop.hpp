#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "theta/core/hand.hpp"
#include "theta/core/image.hpp"
#include "theta/net/network.hpp"
#include "theta/pipeline/config.hpp"
#include "theta/wire/link.hpp"

namespace theta::pipeline {

struct LatencyStats {
  std::size_t count = 0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double max_ms = 0.0;
};

/// Nearest-rank percentiles over the samples (all zero when empty).
LatencyStats summarize_latency(std::vector<double> samples_ms);

struct LatencyReport {
  LatencyStats segment, fuse, infer, encode, transmit, end_to_end;
};

struct TeleopReport {
  LatencyReport latency;
  std::size_t frames_captured = 0;
  std::size_t triplets = 0;
  std::size_t sync_dropped = 0;
  std::size_t frames_encoded = 0;
  wire::ParserCounters parser;
  std::size_t ticks = 0;
  std::size_t settled_ticks = 0;
  std::size_t faithful_ticks = 0;
  double fidelity = 0.0;  // faithful / settled, 0 when nothing settled
  double duration_s = 0.0;
};

/// Timed frames from three cameras plus the pose they show.
class FrameSource {
 public:
  struct Capture {
    std::size_t stream = 0;  // front, right, left
    double time_ms = 0.0;
    std::size_t index = 0;   // source-specific frame key
  };

  virtual ~FrameSource() = default;
  virtual double duration_s() const = 0;
  /// Every capture in time order (ties broken by stream).
  virtual std::vector<Capture> schedule() const = 0;
  virtual RgbImage frame(const Capture& c) const = 0;
  virtual JointAngles truth(double t_s) const = 0;
  /// Start of the pose segment that contains t.
  virtual double segment_start_s(double t_s) const = 0;
};

/// Renders the scripted gestures live. Each camera starts at its configured
/// offset and runs at the rig frame rate; scenes draw from "teleop.scene".
std::unique_ptr<FrameSource> make_script_source(const PipelineConfig& config);
/// Replays a generated dataset: one triplet per frame period, gestures in
/// manifest order, ground truth from the stored jittered angles.
std::unique_ptr<FrameSource> make_recorded_source(const PipelineConfig& config, const std::filesystem::path& dir);

/// Runs capture -> segment -> synchronize -> fuse -> infer -> decode -> map ->
/// encode -> link -> parse -> simulator on a virtual clock ticking at
/// tick_hz. Latencies are wall-clock times of the real work. Throws
/// StreamError when no triplet is formed for starvation_s of virtual time.
TeleopReport run_teleop(const PipelineConfig& config, net::Network<float>& net, const FrameSource& source,
                        wire::Link& link, std::ostream* trace = nullptr);

}  // namespace theta::pipeline
