#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "theta/dexsim/servo_sim.hpp"
#include "theta/net/network.hpp"
#include "theta/net/train.hpp"
#include "theta/segment/segment.hpp"
#include "theta/synthview/dataset.hpp"
#include "theta/synthview/render.hpp"

namespace theta::pipeline {

struct ScriptStep {
  std::string gesture;  // name or numeric id in the gesture table
  double hold_s = 3.0;
  friend bool operator==(const ScriptStep&, const ScriptStep&) = default;
};

struct TrainingSettings {
  int epochs = 10;
  int batch_size = 16;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double temperature = net::kDefaultTemperature;
  double gamma = net::kDefaultGamma;
  double weight_floor = 1.0;
  std::string freeze = "none";
  double val_fraction = 0.2;
};

struct ServoSettings {
  double max_slew_deg_per_s = 300.0;
  double time_constant_s = 0.05;
  bool spring_return_dip = true;
  double spring_target_deg = 0.0;
  double initial_deg = 90.0;
};

struct TeleopSettings {
  double tick_hz = 100.0;
  double settle_s = 1.0;
  double tolerance_deg = 5.0;
  double starvation_s = 2.0;
  // Start delay of each camera; frames then follow at the rig frame rate.
  std::array<double, 3> camera_offsets_ms{0.0, 3.0, 6.0};
  // Virtual time from the last frame of a triplet to its servo command.
  double pipeline_delay_ms = 0.0;
  std::vector<ScriptStep> script{{"Open Palm", 3.0}, {"Closed Fist", 3.0}, {"Number One", 3.0}};
};

/// The pipeline's network. The library default chain stops at 1/8 resolution
/// with a ~35 px receptive field and cannot tell which finger is bent; this
/// one keeps the same stem and block types but reaches 1/32 resolution.
net::NetworkSpec default_network();

/// Everything a command needs, loaded from one JSON document. Missing fields
/// keep the defaults below; unknown keys are rejected.
struct PipelineConfig {
  std::uint64_t seed = 0;
  std::string gestures = "builtin";  // or a path to a gesture CSV
  synthview::CameraRig rig;
  synthview::HandSpec hand;
  synthview::SceneRanges scene;
  int frames_per_gesture_per_view = 50;
  double jitter_deg = 5.0;
  segment::HsvThresholds hsv;
  double sync_window_ms = 16.0;
  net::NetworkSpec network = default_network();
  TrainingSettings training;
  dexsim::CalibrationSet calibration = dexsim::identity_calibration();
  ServoSettings servo;
  std::string link = "loopback";
  TeleopSettings teleop;

  /// Throws ConfigError on any out-of-range value.
  void validate() const;

  std::vector<GestureAnnotation> gesture_table() const;
  synthview::GenerationOptions generation() const;
  net::TrainOptions train_options() const;
  std::array<dexsim::ServoParams, dexsim::kNumServos> servo_params() const;
};

/// Throws ConfigError naming the offending key (dotted path) on unknown keys,
/// wrong types or invalid values.
PipelineConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const PipelineConfig& config);

/// Reads a UTF-8 JSON file (IoError if unreadable, ConfigError if malformed)
/// and applies THETA_SEED from the environment when it is set.
PipelineConfig load_config(const std::filesystem::path& path);
/// Defaults plus THETA_SEED, for commands run without --config.
PipelineConfig default_config();

/// Parses a THETA_SEED value; throws ConfigError unless it is a base-10
/// unsigned 64-bit integer.
std::uint64_t parse_seed(std::string_view text);

}  // namespace theta::pipeline
