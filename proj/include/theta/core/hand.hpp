#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "theta/core/rng.hpp"

namespace theta {

inline constexpr std::size_t kNumFingers = 5;
inline constexpr std::size_t kJointsPerFinger = 3;
inline constexpr std::size_t kNumJoints = kNumFingers * kJointsPerFinger;
inline constexpr std::size_t kNumBins = 10;

enum class Finger : std::uint8_t { thumb, index, middle, ring, pinky };
enum class Joint : std::uint8_t { mcp, pip, dip };

std::string_view finger_name(Finger f);
std::string_view joint_name(Joint j);

/// Flat joint index: finger * 3 + joint, so the 15 slots run
/// thumb MCP/PIP/DIP, index MCP/PIP/DIP, ... pinky DIP. The thumb's CMC/MCP/IP
/// occupy its MCP/PIP/DIP slots.
class JointId {
 public:
  constexpr JointId(Finger finger, Joint joint) : finger_(finger), joint_(joint) {}

  static JointId from_flat(std::size_t flat);

  constexpr Finger finger() const { return finger_; }
  constexpr Joint joint() const { return joint_; }
  constexpr std::size_t flat() const {
    return static_cast<std::size_t>(finger_) * kJointsPerFinger + static_cast<std::size_t>(joint_);
  }

  friend constexpr bool operator==(JointId, JointId) = default;

 private:
  Finger finger_;
  Joint joint_;
};

/// 15 flexion angles in degrees. 180 is fully extended, 90 fully flexed.
struct JointAngles {
  std::array<double, kNumJoints> deg{};

  static JointAngles filled(double value) {
    JointAngles a;
    a.deg.fill(value);
    return a;
  }

  double& operator[](std::size_t i) { return deg[i]; }
  double operator[](std::size_t i) const { return deg[i]; }
  double at(Finger f, Joint j) const { return deg[JointId(f, j).flat()]; }

  friend bool operator==(const JointAngles&, const JointAngles&) = default;
};

inline constexpr double kMinAnnotatedDeg = 90.0;
inline constexpr double kMaxAnnotatedDeg = 180.0;
inline constexpr double kMinEncodableDeg = 85.0;
inline constexpr double kMaxEncodableDeg = 185.0;
inline constexpr double kBinWidthDeg = 10.0;

struct AngleBin {
  int index = 0;

  double center_deg() const { return kMinAnnotatedDeg + kBinWidthDeg * index; }
  friend bool operator==(AngleBin, AngleBin) = default;
};

/// Nearest bin center; ties round away from zero. Throws RangeError outside
/// [85, 185].
AngleBin bin_encode(double angle_deg);
double bin_decode(AngleBin bin);

using BinLabels = std::array<int, kNumJoints>;
BinLabels encode_all(const JointAngles& angles);

struct GestureAnnotation {
  int gesture_id = 0;
  std::string gesture_name;
  JointAngles angles;
};

/// Header row of gesture_angles.csv.
std::string_view gesture_table_header();

/// Parses gesture_angles.csv. Errors carry the 1-based line number.
std::vector<GestureAnnotation> parse_gesture_table(std::istream& in);
std::vector<GestureAnnotation> load_gesture_table(const std::string& path);
void write_gesture_table(std::ostream& out, std::span<const GestureAnnotation> table);

/// The 40-gesture table shipped with the project (data/gesture_angles.csv).
const std::vector<GestureAnnotation>& builtin_gestures();

const GestureAnnotation* find_gesture(std::span<const GestureAnnotation> table,
                                      std::string_view name_or_id);

/// Adds independent uniform noise on [-amplitude, +amplitude] to every joint.
JointAngles jitter(const JointAngles& angles, double amplitude_deg, Rng& rng);

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(Vec3, Vec3) = default;
};

double dot(Vec3 a, Vec3 b);
double norm(Vec3 a);

inline constexpr double kDegenerateSegment = 1e-9;

/// Interior angle at b between segments b->a and b->c, in degrees [0, 180].
double joint_angle_from_points(Vec3 a, Vec3 b, Vec3 c);

}  // namespace theta
