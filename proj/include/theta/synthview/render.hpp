#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "theta/core/hand.hpp"
#include "theta/core/image.hpp"
#include "theta/core/rng.hpp"
#include "theta/segment/segment.hpp"

namespace theta::synthview {

enum class View : std::uint8_t { front, right, left };
inline constexpr std::array<View, 3> kViews{View::front, View::right, View::left};

std::string_view view_name(View v);
View parse_view(std::string_view name);

/// Three cameras on a circle around the hand, 120 degrees apart.
struct CameraRig {
  double radius_mm = 228.6;
  int width = 640;
  int height = 480;
  double frame_rate_hz = 30.0;
  // Orthographic scale is focal_px / radius_mm pixels per millimetre.
  double focal_px = 440.0;

  /// front 0, right +120, left -120 degrees about the vertical axis.
  static double azimuth_deg(View v);
  double pixels_per_mm() const { return focal_px / radius_mm; }
  void validate() const;
};

/// Schematic hand. The palm lies in the z = 0 plane with the knuckle line on
/// y = 0 and fingers extending toward +y; flexion curls toward +z, the side
/// facing the front camera.
struct HandSpec {
  double palm_width_mm = 90.0;
  double palm_height_mm = 100.0;
  // (proximal, middle, distal) per finger, thumb first.
  std::array<std::array<double, 3>, kNumFingers> phalanx_mm{{
      {40.0, 32.0, 25.0},
      {45.0, 28.0, 22.0},
      {45.0, 28.0, 22.0},
      {45.0, 28.0, 22.0},
      {45.0, 28.0, 22.0},
  }};
  double finger_radius_mm = 8.0;
  double thumb_radius_mm = 9.0;
  Rgb hand_color{255, 0, 0};
  std::array<Vec3, kNumFingers> knuckle_base_points{{
      {-50.0, -55.0, 0.0},
      {-33.75, 0.0, 0.0},
      {-11.25, 0.0, 0.0},
      {11.25, 0.0, 0.0},
      {33.75, 0.0, 0.0},
  }};
  // Unit extension direction of each finger in the palm plane.
  std::array<Vec3, kNumFingers> extension_dirs{{
      {-0.7071067811865476, 0.7071067811865476, 0.0},
      {0.0, 1.0, 0.0},
      {0.0, 1.0, 0.0},
      {0.0, 1.0, 0.0},
      {0.0, 1.0, 0.0},
  }};

  /// Throws ArgumentError unless lengths are positive and non-increasing
  /// proximal to distal.
  void validate() const;
};

struct SceneParams {
  Rgb background{0, 0, 0};
  double brightness_scale = 1.0;  // [0.5, 1.5]
  double noise_density = 0.0;     // [0, 0.05], fraction of pixels replaced
  std::uint64_t seed = 0;

  void validate() const;
};

/// Ranges scene parameters are drawn from during dataset generation.
struct SceneRanges {
  double brightness_min = 0.7;
  double brightness_max = 1.3;
  double noise_min = 0.0;
  double noise_max = 0.02;

  void validate() const;
  /// Background hue avoids the red band; brightness and noise are uniform.
  SceneParams sample(Rng& rng) const;
};

using ChainPoints = std::array<Vec3, 4>;  // knuckle, PIP, DIP, tip

/// Planar forward kinematics: each segment turns by the cumulative flexion
/// (180 - joint angle) from the extension direction toward the palm normal.
ChainPoints finger_chain_points(const std::array<double, 3>& angles_deg, const HandSpec& spec,
                                Finger finger);
std::array<double, 3> finger_angles(const JointAngles& angles, Finger finger);

/// Point one unit behind the knuckle along the extension direction; the MCP
/// angle is measured at the knuckle between it and the PIP point.
Vec3 knuckle_reference_point(const HandSpec& spec, Finger finger);

struct Projected {
  double x = 0.0;  // pixel column
  double y = 0.0;  // pixel row
  double depth = 0.0;  // toward the camera is positive
};

Projected project(Vec3 p, View view, const CameraRig& rig, const HandSpec& spec);

struct RenderResult {
  RgbImage frame;
  segment::BinaryMask silhouette;  // hand pixels before brightness/noise
};

RenderResult render_view_with_mask(const JointAngles& angles, View view, const HandSpec& spec,
                                   const SceneParams& scene, const CameraRig& rig = {});

inline RgbImage render_view(const JointAngles& angles, View view, const HandSpec& spec,
                            const SceneParams& scene, const CameraRig& rig = {}) {
  return render_view_with_mask(angles, view, spec, scene, rig).frame;
}

}  // namespace theta::synthview
