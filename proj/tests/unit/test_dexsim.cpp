#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "theta/core/error.hpp"
#include "theta/core/rng.hpp"
#include "theta/dexsim/servo_sim.hpp"

using namespace theta;
using namespace theta::dexsim;

namespace {

ServoFrame uniform_frame(int v) {
  std::array<int, kNumServos> a{};
  a.fill(v);
  return ServoFrame(a);
}

// Plain scalar recurrence, one channel, no clipping other than slew and range.
double scalar_step(double cur, double target, double dt, double tau, double slew) {
  double d = (target - cur) * (1.0 - std::exp(-dt / tau));
  d = std::clamp(d, -slew * dt, slew * dt);
  return std::clamp(cur + d, 0.0, 180.0);
}

}  // namespace

TEST(Calibration, IdentityEndpoints) {
  const ServoCalibration c;
  EXPECT_EQ(c.to_servo(90.0), 0);
  EXPECT_EQ(c.to_servo(180.0), 90);
}

TEST(Calibration, InvertAndAffine) {
  ServoCalibration inv;
  inv.invert = true;
  EXPECT_EQ(inv.to_servo(90.0), 180);

  ServoCalibration aff{2.0, 10.0, false};
  EXPECT_EQ(aff.to_servo(137.0), 104);
  EXPECT_EQ(aff.to_servo(200.0), 180);
  ServoCalibration neg{-1.0, 0.0, false};
  EXPECT_EQ(neg.to_servo(180.0), 0);
}

TEST(Calibration, ZeroScaleRejected) {
  auto cal = identity_calibration();
  cal[4].scale = 0.0;
  EXPECT_THROW(validate(cal), ArgumentError);
}

TEST(Calibration, IdentityInvertibleWithinHalfDegree) {
  const auto cal = identity_calibration();
  Rng rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    JointAngles j;
    for (double& d : j.deg) d = rng.uniform(90.0, 180.0);
    const ServoFrame f = map_joint_to_servo(j, cal);
    std::array<double, kNumServos> servo{};
    for (std::size_t i = 0; i < kNumServos; ++i) servo[i] = f.angles()[i];
    const JointAngles back = map_servo_to_joint(servo, cal);
    for (std::size_t i = 0; i < kNumServos; ++i) EXPECT_LE(std::abs(back.deg[i] - j.deg[i]), 0.5);
  }
}

TEST(Calibration, InverseUndoesMirroredAffine) {
  ServoCalibration c{1.5, 20.0, true};
  for (double j = 90.0; j <= 180.0; j += 7.5) {
    const double raw = 1.5 * (j - 90.0) + 20.0;
    if (raw > 180.0) continue;
    EXPECT_LE(std::abs(c.to_joint(c.to_servo(j)) - j), 0.5 / 1.5 + 1e-12);
  }
}

TEST(HandSimulator, CommandDoesNotMove) {
  HandSimulator sim;
  sim.command(uniform_frame(120));
  for (double c : sim.current()) EXPECT_EQ(c, 0.0);
  sim.command(uniform_frame(60));
  for (double c : sim.commanded()) EXPECT_EQ(c, 60.0);
}

TEST(HandSimulator, FixedPoint) {
  HandSimulator sim(45.0);
  sim.command(uniform_frame(45));
  sim.step(0.01);
  for (double c : sim.current()) EXPECT_EQ(c, 45.0);
}

TEST(HandSimulator, SlewClipExample) {
  // First-order term 180 * (1 - e^-0.2) is far above the 3 degree bound.
  EXPECT_GT(180.0 * (1.0 - std::exp(-0.2)), 32.0);
  HandSimulator sim;
  sim.command(uniform_frame(180));
  sim.step(0.01);
  for (double c : sim.current()) EXPECT_DOUBLE_EQ(c, 3.0);
}

TEST(HandSimulator, NonPositiveDtRejected) {
  HandSimulator sim;
  EXPECT_THROW(sim.step(0.0), ArgumentError);
  EXPECT_THROW(sim.step(-0.01), ArgumentError);
}

TEST(HandSimulator, MatchesScalarRecurrence) {
  HandSimulator sim(10.0);
  sim.command(uniform_frame(170));
  double ref = 10.0;
  int steps_to_settle = -1;
  for (int k = 0; k < 200; ++k) {
    const double before = std::abs(sim.current()[0] - 170.0);
    sim.step(0.01);
    ref = scalar_step(ref, 170.0, 0.01, 0.05, 300.0);
    for (double c : sim.current()) EXPECT_NEAR(c, ref, 1e-12);
    const double after = std::abs(sim.current()[0] - 170.0);
    EXPECT_LE(after, before);
    if (steps_to_settle < 0 && after <= 0.5) steps_to_settle = k + 1;
  }
  int oracle_steps = 0;
  for (double x = 10.0; std::abs(x - 170.0) > 0.5; ++oracle_steps) x = scalar_step(x, 170.0, 0.01, 0.05, 300.0);
  EXPECT_EQ(steps_to_settle, oracle_steps);
}

TEST(HandSimulator, SpringReturnOnlyOnDistalRow) {
  HandSimulator sim(default_servo_params(), 0.0);
  sim.command(uniform_frame(150));
  for (int k = 0; k < 300; ++k) sim.step(0.01);
  sim.release_all();
  for (int k = 0; k < 300; ++k) sim.step(0.01);
  const auto cur = sim.current();
  for (std::size_t i = 0; i < kNumServos; ++i) {
    if (i % 3 == 2) {
      EXPECT_LT(cur[i], 0.5) << i;
    } else {
      EXPECT_NEAR(cur[i], 150.0, 0.5) << i;
    }
  }
}

TEST(HandSimulator, RandomScheduleRespectsSlew) {
  HandSimulator sim(default_servo_params(), 90.0);
  Rng rng(77);
  auto prev = sim.current();
  for (int k = 0; k < 1000; ++k) {
    if (k % 25 == 0) {
      std::array<int, kNumServos> a{};
      for (int& v : a) v = static_cast<int>(rng.between(0, 180));
      sim.command(ServoFrame(a));
    }
    if (k % 200 == 199) sim.release_all();
    sim.step(0.01);
    const auto cur = sim.current();
    for (std::size_t i = 0; i < kNumServos; ++i) {
      EXPECT_LE(std::abs(cur[i] - prev[i]), 300.0 * 0.01 + 1e-9);
      EXPECT_GE(cur[i], 0.0);
      EXPECT_LE(cur[i], 180.0);
    }
    prev = cur;
  }
  EXPECT_NEAR(sim.time_s(), 10.0, 1e-9);
}

TEST(TraceWriter, OneRowPerRecord) {
  std::ostringstream out;
  TraceWriter w(out);
  HandSimulator sim;
  w.record(sim);
  sim.step(0.01);
  w.record(sim);
  std::istringstream in(out.str());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 30);
  }
  EXPECT_EQ(rows, 3);  // header plus two samples
}
