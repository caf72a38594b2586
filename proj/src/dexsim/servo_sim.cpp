#include "theta/dexsim/servo_sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "theta/core/error.hpp"

namespace theta::dexsim {

int ServoCalibration::to_servo(double joint_deg) const {
  const double raw = std::round(scale * (joint_deg - 90.0) + offset_deg);
  const int cmd = static_cast<int>(std::clamp(raw, 0.0, static_cast<double>(wire::kMaxServoDeg)));
  return invert ? wire::kMaxServoDeg - cmd : cmd;
}

double ServoCalibration::to_joint(double servo_deg) const {
  const double s = invert ? wire::kMaxServoDeg - servo_deg : servo_deg;
  return (s - offset_deg) / scale + 90.0;
}

CalibrationSet identity_calibration() {
  CalibrationSet cal;
  cal.fill(ServoCalibration{});
  return cal;
}

void validate(const CalibrationSet& cal) {
  for (std::size_t i = 0; i < cal.size(); ++i) {
    if (cal[i].scale == 0.0 || !std::isfinite(cal[i].scale) || !std::isfinite(cal[i].offset_deg)) {
      throw ArgumentError("servo calibration " + std::to_string(i) + " has invalid scale/offset");
    }
  }
}

ServoFrame map_joint_to_servo(const JointAngles& angles, const CalibrationSet& cal) {
  std::array<int, kNumServos> cmd{};
  for (std::size_t i = 0; i < kNumServos; ++i) cmd[i] = cal[i].to_servo(angles[i]);
  return ServoFrame(cmd);
}

JointAngles map_servo_to_joint(const std::array<double, kNumServos>& servo_deg,
                               const CalibrationSet& cal) {
  JointAngles out;
  for (std::size_t i = 0; i < kNumServos; ++i) out[i] = cal[i].to_joint(servo_deg[i]);
  return out;
}

std::array<ServoParams, kNumServos> default_servo_params() {
  std::array<ServoParams, kNumServos> p{};
  for (std::size_t i = 0; i < kNumServos; ++i) {
    p[i].spring_return = JointId::from_flat(i).joint() == Joint::dip;
  }
  return p;
}

HandSimulator::HandSimulator(double initial_deg)
    : HandSimulator(default_servo_params(), initial_deg) {}

HandSimulator::HandSimulator(const std::array<ServoParams, kNumServos>& params,
                             double initial_deg) {
  for (std::size_t i = 0; i < kNumServos; ++i) {
    if (!(params[i].max_slew_deg_per_s > 0.0) || !(params[i].time_constant_s > 0.0)) {
      throw ArgumentError("servo slew rate and time constant must be positive");
    }
    channels_[i].params = params[i];
    channels_[i].current_deg = std::clamp(initial_deg, 0.0, 180.0);
    channels_[i].commanded_deg = channels_[i].current_deg;
  }
}

void HandSimulator::command(const ServoFrame& frame) {
  for (std::size_t i = 0; i < kNumServos; ++i) {
    channels_[i].commanded_deg = frame[i];
    channels_[i].powered = true;
  }
}

void HandSimulator::release_all() {
  for (auto& ch : channels_) ch.powered = false;
}

void HandSimulator::step(double dt_s) {
  if (!(dt_s > 0.0)) throw ArgumentError("simulation step must be positive");
  for (auto& ch : channels_) {
    double target = ch.current_deg;
    if (ch.powered) {
      target = ch.commanded_deg;
    } else if (ch.params.spring_return) {
      target = ch.params.spring_target_deg;
    }
    const double limit = ch.params.max_slew_deg_per_s * dt_s;
    double delta = (target - ch.current_deg) * (1.0 - std::exp(-dt_s / ch.params.time_constant_s));
    delta = std::clamp(delta, -limit, limit);
    ch.current_deg = std::clamp(ch.current_deg + delta, 0.0, 180.0);
  }
  time_s_ += dt_s;
}

std::array<double, kNumServos> HandSimulator::current() const {
  std::array<double, kNumServos> out{};
  for (std::size_t i = 0; i < kNumServos; ++i) out[i] = channels_[i].current_deg;
  return out;
}

std::array<double, kNumServos> HandSimulator::commanded() const {
  std::array<double, kNumServos> out{};
  for (std::size_t i = 0; i < kNumServos; ++i) out[i] = channels_[i].commanded_deg;
  return out;
}

TraceWriter::TraceWriter(std::ostream& out) : out_(out) {
  out_ << "time_s";
  for (std::size_t i = 0; i < kNumServos; ++i) out_ << ",current_deg_" << i;
  for (std::size_t i = 0; i < kNumServos; ++i) out_ << ",commanded_deg_" << i;
  out_ << '\n';
}

void TraceWriter::record(const HandSimulator& sim) {
  out_ << sim.time_s();
  for (double v : sim.current()) out_ << ',' << v;
  for (double v : sim.commanded()) out_ << ',' << v;
  out_ << '\n';
}

}  // namespace theta::dexsim
