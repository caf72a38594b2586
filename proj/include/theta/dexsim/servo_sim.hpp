#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "theta/core/hand.hpp"
#include "theta/wire/frame.hpp"

namespace theta::dexsim {

using wire::kNumServos;
using wire::ServoFrame;

/// Affine joint-space to servo-space map for one channel:
/// cmd = clamp(round(scale * (joint_deg - 90) + offset_deg), 0, 180), mirrored
/// to 180 - cmd when invert is set.
struct ServoCalibration {
  double scale = 1.0;
  double offset_deg = 0.0;
  bool invert = false;

  int to_servo(double joint_deg) const;
  /// Inverse of the unclamped, unrounded map.
  double to_joint(double servo_deg) const;
};

using CalibrationSet = std::array<ServoCalibration, kNumServos>;

CalibrationSet identity_calibration();
/// Throws ArgumentError when a channel has scale 0.
void validate(const CalibrationSet& cal);

/// Joint i drives servo i.
ServoFrame map_joint_to_servo(const JointAngles& angles, const CalibrationSet& cal);
JointAngles map_servo_to_joint(const std::array<double, kNumServos>& servo_deg,
                               const CalibrationSet& cal);

struct ServoParams {
  double max_slew_deg_per_s = 300.0;
  double time_constant_s = 0.05;
  bool spring_return = false;
  double spring_target_deg = 0.0;
};

struct ServoState {
  ServoParams params;
  double commanded_deg = 0.0;
  double current_deg = 0.0;
  bool powered = false;
};

/// Fifteen servo channels with first-order lag and a hard slew limit. DIP-row
/// channels spring back to their rest angle while unpowered.
class HandSimulator {
 public:
  explicit HandSimulator(double initial_deg = 0.0);
  HandSimulator(const std::array<ServoParams, kNumServos>& params, double initial_deg);

  /// Latches new targets and powers every channel; does not move anything.
  void command(const ServoFrame& frame);
  /// Cuts power; spring-return channels start relaxing on the next step.
  void release_all();
  void step(double dt_s);

  const ServoState& channel(std::size_t i) const { return channels_[i]; }
  std::array<double, kNumServos> current() const;
  std::array<double, kNumServos> commanded() const;
  double time_s() const { return time_s_; }

 private:
  std::array<ServoState, kNumServos> channels_;
  double time_s_ = 0.0;
};

/// Default channel parameters: spring return on every DIP row servo.
std::array<ServoParams, kNumServos> default_servo_params();

/// Optional CSV trace: time_s, 15 current_deg columns, 15 commanded_deg columns.
class TraceWriter {
 public:
  explicit TraceWriter(std::ostream& out);
  void record(const HandSimulator& sim);

 private:
  std::ostream& out_;
};

}  // namespace theta::dexsim
