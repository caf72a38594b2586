#include "theta/synthview/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "theta/core/error.hpp"

namespace theta::synthview {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr Vec3 kPalmNormal{0.0, 0.0, 1.0};

}  // namespace

std::string_view view_name(View v) {
  switch (v) {
    case View::front: return "front";
    case View::right: return "right";
    case View::left: return "left";
  }
  return "?";
}

View parse_view(std::string_view name) {
  for (View v : kViews) {
    if (view_name(v) == name) return v;
  }
  throw ParseError("unknown view '" + std::string(name) + "'");
}

double CameraRig::azimuth_deg(View v) {
  switch (v) {
    case View::front: return 0.0;
    case View::right: return 120.0;
    case View::left: return -120.0;
  }
  return 0.0;
}

void CameraRig::validate() const {
  if (width <= 0 || height <= 0) throw ArgumentError("rig image size must be positive");
  if (!(radius_mm > 0.0) || !(focal_px > 0.0) || !(frame_rate_hz > 0.0)) {
    throw ArgumentError("rig radius, focal length and frame rate must be positive");
  }
}

void HandSpec::validate() const {
  if (!(palm_width_mm > 0.0) || !(palm_height_mm > 0.0)) {
    throw ArgumentError("palm dimensions must be positive");
  }
  if (!(finger_radius_mm > 0.0) || !(thumb_radius_mm > 0.0)) {
    throw ArgumentError("finger radii must be positive");
  }
  for (std::size_t f = 0; f < kNumFingers; ++f) {
    const auto& l = phalanx_mm[f];
    if (!(l[0] > 0.0 && l[1] > 0.0 && l[2] > 0.0)) {
      throw ArgumentError("phalanx lengths must be positive");
    }
    if (!(l[2] <= l[1] && l[1] <= l[0])) {
      throw ArgumentError("phalanx lengths must satisfy distal <= middle <= proximal");
    }
    if (std::abs(norm(extension_dirs[f]) - 1.0) > 1e-9 ||
        std::abs(dot(extension_dirs[f], kPalmNormal)) > 1e-9) {
      throw ArgumentError("finger extension directions must be unit vectors in the palm plane");
    }
  }
}

void SceneParams::validate() const {
  if (!(brightness_scale >= 0.5 && brightness_scale <= 1.5)) {
    throw ArgumentError("brightness_scale must lie in [0.5, 1.5]");
  }
  if (!(noise_density >= 0.0 && noise_density <= 0.05)) {
    throw ArgumentError("noise_density must lie in [0, 0.05]");
  }
}

void SceneRanges::validate() const {
  if (!(brightness_min >= 0.5 && brightness_max <= 1.5 && brightness_min <= brightness_max)) {
    throw ArgumentError("brightness range must lie within [0.5, 1.5]");
  }
  if (!(noise_min >= 0.0 && noise_max <= 0.05 && noise_min <= noise_max)) {
    throw ArgumentError("noise range must lie within [0, 0.05]");
  }
}

namespace {

Rgb hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) {
    r = c; g = x;
  } else if (hp < 2) {
    r = x; g = c;
  } else if (hp < 3) {
    g = c; b = x;
  } else if (hp < 4) {
    g = x; b = c;
  } else if (hp < 5) {
    r = x; b = c;
  } else {
    r = c; b = x;
  }
  const double m = v - c;
  auto to8 = [](double u) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(u * 255.0), 0L, 255L));
  };
  return {to8(r + m), to8(g + m), to8(b + m)};
}

}  // namespace

SceneParams SceneRanges::sample(Rng& rng) const {
  SceneParams p;
  const double hue = rng.uniform(70.0, 290.0);
  const double sat = rng.uniform(0.0, 0.8);
  const double val = rng.uniform(0.1, 0.9);
  p.background = hsv_to_rgb(hue, sat, val);
  p.brightness_scale = rng.uniform(brightness_min, brightness_max);
  p.noise_density = rng.uniform(noise_min, noise_max);
  p.seed = rng.next_u64();
  return p;
}

std::array<double, 3> finger_angles(const JointAngles& angles, Finger finger) {
  return {angles.at(finger, Joint::mcp), angles.at(finger, Joint::pip),
          angles.at(finger, Joint::dip)};
}

ChainPoints finger_chain_points(const std::array<double, 3>& angles_deg, const HandSpec& spec,
                                Finger finger) {
  const auto f = static_cast<std::size_t>(finger);
  const Vec3 u = spec.extension_dirs[f];
  ChainPoints pts;
  pts[0] = spec.knuckle_base_points[f];
  double flexion = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    flexion += (180.0 - angles_deg[k]) * kDegToRad;
    const Vec3 dir = std::cos(flexion) * u + std::sin(flexion) * kPalmNormal;
    pts[k + 1] = pts[k] + spec.phalanx_mm[f][k] * dir;
  }
  return pts;
}

Vec3 knuckle_reference_point(const HandSpec& spec, Finger finger) {
  const auto f = static_cast<std::size_t>(finger);
  return spec.knuckle_base_points[f] - spec.extension_dirs[f];
}

namespace {

double vertical_center_mm(const HandSpec& spec) {
  const auto& mid = spec.phalanx_mm[static_cast<std::size_t>(Finger::middle)];
  return (mid[0] + mid[1] + mid[2] - spec.palm_height_mm) / 2.0;
}

}  // namespace

Projected project(Vec3 p, View view, const CameraRig& rig, const HandSpec& spec) {
  const double az = CameraRig::azimuth_deg(view) * kDegToRad;
  const Vec3 right{std::cos(az), 0.0, -std::sin(az)};
  const Vec3 toward{std::sin(az), 0.0, std::cos(az)};
  const double s = rig.pixels_per_mm();
  return {rig.width / 2.0 + s * dot(p, right),
          rig.height / 2.0 - s * (p.y - vertical_center_mm(spec)), dot(p, toward)};
}

namespace {

struct Capsule {
  Projected a, b;
  double radius_px;
  double depth() const { return 0.5 * (a.depth + b.depth); }
};

void fill_capsule(segment::BinaryMask& mask, const Capsule& c) {
  const double r = c.radius_px;
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(c.a.x, c.b.x) - r)));
  const int x1 = std::min(mask.width - 1, static_cast<int>(std::ceil(std::max(c.a.x, c.b.x) + r)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(c.a.y, c.b.y) - r)));
  const int y1 = std::min(mask.height - 1, static_cast<int>(std::ceil(std::max(c.a.y, c.b.y) + r)));
  const double dx = c.b.x - c.a.x, dy = c.b.y - c.a.y;
  const double len2 = dx * dx + dy * dy;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5 - c.a.x, py = y + 0.5 - c.a.y;
      double t = len2 > 0.0 ? (px * dx + py * dy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double ex = px - t * dx, ey = py - t * dy;
      if (ex * ex + ey * ey <= r * r) mask.bits[static_cast<std::size_t>(y) * mask.width + x] = 1;
    }
  }
}

void fill_convex_quad(segment::BinaryMask& mask, const std::array<Projected, 4>& q) {
  double minx = q[0].x, maxx = q[0].x, miny = q[0].y, maxy = q[0].y;
  for (const auto& p : q) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  const int x0 = std::max(0, static_cast<int>(std::floor(minx)));
  const int x1 = std::min(mask.width - 1, static_cast<int>(std::ceil(maxx)));
  const int y0 = std::max(0, static_cast<int>(std::floor(miny)));
  const int y1 = std::min(mask.height - 1, static_cast<int>(std::ceil(maxy)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      bool pos = false, neg = false;
      for (std::size_t i = 0; i < 4; ++i) {
        const auto& a = q[i];
        const auto& b = q[(i + 1) % 4];
        const double cross = (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
        pos |= cross > 0.0;
        neg |= cross < 0.0;
      }
      if (!(pos && neg)) mask.bits[static_cast<std::size_t>(y) * mask.width + x] = 1;
    }
  }
}

}  // namespace

RenderResult render_view_with_mask(const JointAngles& angles, View view, const HandSpec& spec,
                                   const SceneParams& scene, const CameraRig& rig) {
  rig.validate();
  scene.validate();

  RenderResult out{RgbImage(rig.width, rig.height, scene.background),
                   segment::BinaryMask(rig.width, rig.height)};

  // The hand is a single flat colour, so the silhouette is the union of all
  // primitives; capsules are still ordered back to front.
  const double half_w = spec.palm_width_mm / 2.0;
  fill_convex_quad(out.silhouette, {project({-half_w, 0.0, 0.0}, view, rig, spec),
                                    project({half_w, 0.0, 0.0}, view, rig, spec),
                                    project({half_w, -spec.palm_height_mm, 0.0}, view, rig, spec),
                                    project({-half_w, -spec.palm_height_mm, 0.0}, view, rig, spec)});

  std::vector<Capsule> capsules;
  const double s = rig.pixels_per_mm();
  for (std::size_t f = 0; f < kNumFingers; ++f) {
    const auto finger = static_cast<Finger>(f);
    const auto pts = finger_chain_points(finger_angles(angles, finger), spec, finger);
    const double r = (finger == Finger::thumb ? spec.thumb_radius_mm : spec.finger_radius_mm) * s;
    for (std::size_t k = 0; k < 3; ++k) {
      capsules.push_back(
          {project(pts[k], view, rig, spec), project(pts[k + 1], view, rig, spec), r});
    }
  }
  std::stable_sort(capsules.begin(), capsules.end(),
                   [](const Capsule& a, const Capsule& b) { return a.depth() < b.depth(); });
  for (const auto& c : capsules) fill_capsule(out.silhouette, c);

  auto& px = out.frame.bytes();
  for (std::size_t i = 0; i < out.silhouette.bits.size(); ++i) {
    if (out.silhouette.bits[i]) {
      px[3 * i] = spec.hand_color.r;
      px[3 * i + 1] = spec.hand_color.g;
      px[3 * i + 2] = spec.hand_color.b;
    }
  }

  if (scene.brightness_scale != 1.0) {
    std::array<std::uint8_t, 256> lut{};
    for (int v = 0; v < 256; ++v) {
      lut[v] = static_cast<std::uint8_t>(
          std::clamp(std::lround(v * scene.brightness_scale), 0L, 255L));
    }
    for (auto& b : px) b = lut[b];
  }

  if (scene.noise_density > 0.0) {
    Rng rng(scene.seed);
    const auto n = static_cast<std::size_t>(
        std::llround(scene.noise_density * static_cast<double>(out.frame.pixel_count())));
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = rng.below(out.frame.pixel_count());
      const std::uint64_t bits = rng.next_u64();
      px[3 * i] = static_cast<std::uint8_t>(bits);
      px[3 * i + 1] = static_cast<std::uint8_t>(bits >> 8);
      px[3 * i + 2] = static_cast<std::uint8_t>(bits >> 16);
    }
  }
  return out;
}

}  // namespace theta::synthview
