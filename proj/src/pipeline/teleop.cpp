#include "theta/pipeline/teleop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <numeric>

#include "theta/core/error.hpp"
#include "theta/core/rng.hpp"
#include "theta/dexsim/servo_sim.hpp"
#include "theta/fusion/fusion.hpp"
#include "theta/net/train.hpp"
#include "theta/pipeline/data.hpp"
#include "theta/synthview/render.hpp"
#include "theta/wire/frame.hpp"

namespace theta::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

bool capture_before(const FrameSource::Capture& a, const FrameSource::Capture& b) {
  return a.time_ms != b.time_ms ? a.time_ms < b.time_ms : a.stream < b.stream;
}

// Per-camera capture times offset + k * period that fall inside [0, duration).
std::vector<FrameSource::Capture> camera_schedule(const std::array<double, 3>& offsets_ms, double period_ms,
                                                  double duration_ms) {
  std::vector<FrameSource::Capture> out;
  for (std::size_t s = 0; s < fusion::kStreamCount; ++s) {
    for (std::size_t k = 0;; ++k) {
      const double t = offsets_ms[s] + static_cast<double>(k) * period_ms;
      if (t >= duration_ms) break;
      out.push_back({s, t, k});
    }
  }
  std::sort(out.begin(), out.end(), capture_before);
  return out;
}

class ScriptSource final : public FrameSource {
 public:
  explicit ScriptSource(const PipelineConfig& config) : config_(config) {
    const auto table = config.gesture_table();
    double t = 0.0;
    for (const auto& step : config.teleop.script) {
      const GestureAnnotation* g = find_gesture(table, step.gesture);
      if (!g) throw ConfigError("teleop.script: unknown gesture '" + step.gesture + "'");
      steps_.push_back({t, *g});
      t += step.hold_s;
    }
    if (steps_.empty()) throw ConfigError("teleop.script is empty");
    duration_s_ = t;
  }

  double duration_s() const override { return duration_s_; }

  std::vector<Capture> schedule() const override {
    return camera_schedule(config_.teleop.camera_offsets_ms, 1000.0 / config_.rig.frame_rate_hz,
                           duration_s_ * 1000.0);
  }

  RgbImage frame(const Capture& c) const override {
    const auto& g = step_at(c.time_ms / 1000.0).gesture;
    Rng rng = derive_rng(config_.seed, "teleop.scene", {static_cast<std::uint64_t>(c.stream), c.index});
    return synthview::render_view(g.angles, synthview::kViews[c.stream], config_.hand,
                                  config_.scene.sample(rng), config_.rig);
  }

  JointAngles truth(double t_s) const override { return step_at(t_s).gesture.angles; }
  double segment_start_s(double t_s) const override { return step_at(t_s).start_s; }

 private:
  struct Step {
    double start_s;
    GestureAnnotation gesture;
  };

  const Step& step_at(double t_s) const {
    auto it = std::upper_bound(steps_.begin(), steps_.end(), t_s,
                               [](double t, const Step& s) { return t < s.start_s; });
    return it == steps_.begin() ? steps_.front() : *std::prev(it);
  }

  PipelineConfig config_;
  std::vector<Step> steps_;
  double duration_s_ = 0.0;
};

class RecordedSource final : public FrameSource {
 public:
  RecordedSource(const PipelineConfig& config, const std::filesystem::path& dir)
      : dir_(dir),
        manifest_(synthview::read_manifest(dir / "manifest.json")),
        triplets_(group_triplets(manifest_)),
        offsets_(config.teleop.camera_offsets_ms),
        period_ms_(1000.0 / manifest_.options.rig.frame_rate_hz) {
    if (triplets_.empty()) throw DataError("recorded source " + dir.string() + " holds no samples");
    // Manifest order groups gestures; a segment starts wherever the id changes.
    for (std::size_t i = 0; i < triplets_.size(); ++i) {
      starts_.push_back(i > 0 && triplets_[i].gesture_id == triplets_[i - 1].gesture_id ? starts_.back() : i);
    }
  }

  double duration_s() const override { return static_cast<double>(triplets_.size()) * period_ms_ / 1000.0; }

  std::vector<Capture> schedule() const override {
    std::vector<Capture> out;
    for (std::size_t s = 0; s < fusion::kStreamCount; ++s) {
      for (std::size_t i = 0; i < triplets_.size(); ++i) {
        out.push_back({s, offsets_[s] + static_cast<double>(i) * period_ms_, i});
      }
    }
    std::sort(out.begin(), out.end(), capture_before);
    return out;
  }

  RgbImage frame(const Capture& c) const override { return read_ppm(dir_ / triplets_.at(c.index).views[c.stream]->image_path); }

  JointAngles truth(double t_s) const override { return triplets_[index_at(t_s)].views[0]->jittered_angles; }
  double segment_start_s(double t_s) const override {
    return static_cast<double>(starts_[index_at(t_s)]) * period_ms_ / 1000.0;
  }

 private:
  std::size_t index_at(double t_s) const {
    const auto i = static_cast<std::size_t>(std::max(0.0, std::floor(t_s * 1000.0 / period_ms_)));
    return std::min(i, triplets_.size() - 1);
  }

  std::filesystem::path dir_;
  synthview::DatasetManifest manifest_;
  std::vector<ManifestTriplet> triplets_;
  std::vector<std::size_t> starts_;
  std::array<double, 3> offsets_;
  double period_ms_;
};

struct Prepared {
  PlanarImage image;
  double segment_ms = 0.0;
};

struct PendingCommand {
  double due_ms = 0.0;
  std::string bytes;
  double elapsed_ms = 0.0;  // wall time spent on this triplet so far
};

}  // namespace

LatencyStats summarize_latency(std::vector<double> samples_ms) {
  LatencyStats s;
  s.count = samples_ms.size();
  if (samples_ms.empty()) return s;
  std::sort(samples_ms.begin(), samples_ms.end());
  const auto rank = [&](double p) {
    const auto r = static_cast<std::size_t>(std::ceil(p * static_cast<double>(samples_ms.size())));
    return samples_ms[std::clamp<std::size_t>(r, 1, samples_ms.size()) - 1];
  };
  s.mean_ms = std::accumulate(samples_ms.begin(), samples_ms.end(), 0.0) / static_cast<double>(s.count);
  s.p50_ms = rank(0.50);
  s.p95_ms = rank(0.95);
  s.max_ms = samples_ms.back();
  return s;
}

std::unique_ptr<FrameSource> make_script_source(const PipelineConfig& config) {
  return std::make_unique<ScriptSource>(config);
}

std::unique_ptr<FrameSource> make_recorded_source(const PipelineConfig& config, const std::filesystem::path& dir) {
  return std::make_unique<RecordedSource>(config, dir);
}

TeleopReport run_teleop(const PipelineConfig& config, net::Network<float>& net, const FrameSource& source,
                        wire::Link& link, std::ostream* trace) {
  const int size = net.spec().input_size;
  if (net.spec().in_channels != fusion::kFusedChannels) throw ConfigError("model does not take 9-channel input");
  const segment::HsvMaskProvider provider(config.hsv);
  fusion::Synchronizer<Prepared> sync(config.sync_window_ms);
  wire::FrameParser parser;
  dexsim::HandSimulator sim(config.servo_params(), config.servo.initial_deg);
  std::optional<dexsim::TraceWriter> tracer;
  if (trace) tracer.emplace(*trace);

  std::vector<double> seg_ms, fuse_ms, infer_ms, encode_ms, transmit_ms, e2e_ms;
  std::deque<PendingCommand> pending;
  TeleopReport report;

  const auto captures = source.schedule();
  std::size_t next = 0;
  const double dt = 1.0 / config.teleop.tick_hz;
  const auto ticks = static_cast<std::size_t>(std::ceil(source.duration_s() * config.teleop.tick_hz - 1e-9));
  double last_triplet_s = 0.0;

  for (std::size_t i = 0; i < ticks; ++i) {
    const double t = static_cast<double>(i) * dt;

    // Vision side: everything captured up to now.
    while (next < captures.size() && captures[next].time_ms <= t * 1000.0) {
      const auto& c = captures[next++];
      const RgbImage frame = source.frame(c);
      auto start = Clock::now();
      Prepared p{prepare_view(frame, provider, size), 0.0};
      p.segment_ms = ms_since(start);
      seg_ms.push_back(p.segment_ms);
      ++report.frames_captured;
      sync.push(c.stream, {c.time_ms, std::move(p)});

      while (auto m = sync.pop()) {
        ++report.triplets;
        const auto& views = *m;
        fusion::FrameTriplet ft{views[0].frame.image, views[1].frame.image, views[2].frame.image,
                                {views[0].timestamp_ms, views[1].timestamp_ms, views[2].timestamp_ms}};
        double elapsed = views[0].frame.segment_ms + views[1].frame.segment_ms + views[2].frame.segment_ms;

        start = Clock::now();
        const auto fused = fusion::compose(ft, config.sync_window_ms);
        fuse_ms.push_back(ms_since(start));

        start = Clock::now();
        const auto pred = net::predict_bins(net, fused.values, config.training.temperature);
        JointAngles angles;
        for (std::size_t j = 0; j < kNumJoints; ++j) angles[j] = bin_decode(AngleBin{pred.bins[j]});
        infer_ms.push_back(ms_since(start));

        start = Clock::now();
        std::string bytes = wire::encode_frame(dexsim::map_joint_to_servo(angles, config.calibration));
        encode_ms.push_back(ms_since(start));
        ++report.frames_encoded;

        elapsed += fuse_ms.back() + infer_ms.back() + encode_ms.back();
        const double latest = *std::max_element(ft.timestamps_ms.begin(), ft.timestamps_ms.end());
        pending.push_back({latest + config.teleop.pipeline_delay_ms, std::move(bytes), elapsed});
        last_triplet_s = std::max(last_triplet_s, latest / 1000.0);
      }
    }
    if (t - last_triplet_s > config.teleop.starvation_s) {
      throw StreamError("no synchronized triplet for " + std::to_string(t - last_triplet_s) + " s at t = " +
                        std::to_string(t) + " s");
    }

    // Command side: deliver whatever is due and let the parser drive the hand.
    while (!pending.empty() && pending.front().due_ms <= t * 1000.0) {
      const auto start = Clock::now();
      link.write(pending.front().bytes);
      const auto frames = parser.feed(link.read_available());
      for (const auto& f : frames) sim.command(f);
      transmit_ms.push_back(ms_since(start));
      e2e_ms.push_back(pending.front().elapsed_ms + transmit_ms.back());
      pending.pop_front();
    }

    if (tracer) tracer->record(sim);
    if (t - source.segment_start_s(t) >= config.teleop.settle_s) {
      ++report.settled_ticks;
      const JointAngles truth = source.truth(t);
      const JointAngles shown = dexsim::map_servo_to_joint(sim.current(), config.calibration);
      bool ok = true;
      for (std::size_t j = 0; j < kNumJoints; ++j) ok &= std::abs(shown[j] - truth[j]) <= config.teleop.tolerance_deg;
      report.faithful_ticks += ok;
    }
    sim.step(dt);
    ++report.ticks;
  }

  sync.flush();
  report.sync_dropped = sync.dropped();
  report.parser = parser.counters();
  report.duration_s = static_cast<double>(ticks) * dt;
  report.fidelity = report.settled_ticks ? static_cast<double>(report.faithful_ticks) /
                                               static_cast<double>(report.settled_ticks)
                                         : 0.0;
  report.latency = {summarize_latency(seg_ms),      summarize_latency(fuse_ms),
                    summarize_latency(infer_ms),    summarize_latency(encode_ms),
                    summarize_latency(transmit_ms), summarize_latency(e2e_ms)};
  return report;
}

}  // namespace theta::pipeline
