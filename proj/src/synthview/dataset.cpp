#include "theta/synthview/dataset.hpp"

#include <fstream>
#include <system_error>

#include <json.hpp>

#include "theta/core/error.hpp"

namespace theta::synthview {

using nlohmann::json;

std::map<std::pair<int, View>, int> DatasetManifest::counts() const {
  std::map<std::pair<int, View>, int> out;
  for (const auto& s : samples) ++out[{s.gesture_id, s.view}];
  return out;
}

JointAngles frame_pose(const GestureAnnotation& gesture, int frame_index,
                       const GenerationOptions& options) {
  Rng rng = derive_rng(options.seed, "synthview.jitter",
                       {static_cast<std::uint64_t>(gesture.gesture_id),
                        static_cast<std::uint64_t>(frame_index)});
  return jitter(gesture.angles, options.jitter_deg, rng);
}

SceneParams frame_scene(const GestureAnnotation& gesture, View view, int frame_index,
                        const GenerationOptions& options) {
  Rng rng = derive_rng(options.seed, "synthview.scene",
                       {static_cast<std::uint64_t>(gesture.gesture_id),
                        static_cast<std::uint64_t>(view), static_cast<std::uint64_t>(frame_index)});
  return options.scene.sample(rng);
}

namespace {

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create directory " + dir.string() + (ec ? ": " + ec.message() : ""));
  }
}

}  // namespace

DatasetManifest generate_dataset(std::span<const GestureAnnotation> table,
                                 const GenerationOptions& options,
                                 const std::filesystem::path& out_dir) {
  if (table.empty()) throw ArgumentError("gesture table is empty");
  if (options.frames_per_gesture_per_view < 1) {
    throw ArgumentError("frames per gesture per view must be at least 1");
  }
  if (!(options.jitter_deg >= 0.0)) throw ArgumentError("jitter amplitude must be non-negative");
  options.rig.validate();
  options.hand.validate();
  options.scene.validate();

  ensure_directory(out_dir);
  DatasetManifest manifest;
  manifest.options = options;

  for (const auto& g : table) {
    const BinLabels labels = encode_all(g.angles);
    for (View view : kViews) {
      ensure_directory(out_dir / ("g" + std::to_string(g.gesture_id)) / std::string(view_name(view)));
    }
    for (int f = 0; f < options.frames_per_gesture_per_view; ++f) {
      const JointAngles pose = frame_pose(g, f, options);
      for (View view : kViews) {
        const std::string rel = "g" + std::to_string(g.gesture_id) + "/" +
                                std::string(view_name(view)) + "/f" + std::to_string(f) + ".ppm";
        const RgbImage frame =
            render_view(pose, view, options.hand, frame_scene(g, view, f, options), options.rig);
        write_ppm(out_dir / rel, frame);
        manifest.samples.push_back({g.gesture_id, view, f, rel, labels, pose});
      }
    }
  }
  write_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

namespace {

json vec3_json(Vec3 v) { return json::array({v.x, v.y, v.z}); }
Vec3 vec3_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

json options_json(const DatasetManifest& m) {
  const auto& o = m.options;
  json hand;
  hand["palm_width_mm"] = o.hand.palm_width_mm;
  hand["palm_height_mm"] = o.hand.palm_height_mm;
  hand["phalanx_mm"] = o.hand.phalanx_mm;
  hand["finger_radius_mm"] = o.hand.finger_radius_mm;
  hand["thumb_radius_mm"] = o.hand.thumb_radius_mm;
  hand["hand_color"] = {o.hand.hand_color.r, o.hand.hand_color.g, o.hand.hand_color.b};
  hand["knuckle_base_points"] = json::array();
  hand["extension_dirs"] = json::array();
  for (std::size_t f = 0; f < kNumFingers; ++f) {
    hand["knuckle_base_points"].push_back(vec3_json(o.hand.knuckle_base_points[f]));
    hand["extension_dirs"].push_back(vec3_json(o.hand.extension_dirs[f]));
  }
  return {
      {"schema_version", m.schema_version},
      {"seed", o.seed},
      {"frames_per_gesture_per_view", o.frames_per_gesture_per_view},
      {"jitter_deg", o.jitter_deg},
      {"rig",
       {{"radius_mm", o.rig.radius_mm},
        {"width", o.rig.width},
        {"height", o.rig.height},
        {"frame_rate_hz", o.rig.frame_rate_hz},
        {"focal_px", o.rig.focal_px},
        {"views",
         {{"front", CameraRig::azimuth_deg(View::front)},
          {"right", CameraRig::azimuth_deg(View::right)},
          {"left", CameraRig::azimuth_deg(View::left)}}}}},
      {"spec", hand},
      {"scene_ranges",
       {{"brightness_min", o.scene.brightness_min},
        {"brightness_max", o.scene.brightness_max},
        {"noise_min", o.scene.noise_min},
        {"noise_max", o.scene.noise_max}}},
  };
}

}  // namespace

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  json samples = json::array();
  for (const auto& s : manifest.samples) {
    samples.push_back({{"gesture_id", s.gesture_id},
                       {"view", view_name(s.view)},
                       {"frame_index", s.frame_index},
                       {"image_path", s.image_path},
                       {"label_bins", s.label_bins},
                       {"jittered_angles", s.jittered_angles.deg}});
  }
  json counts = json::array();
  for (const auto& [key, n] : manifest.counts()) {
    counts.push_back({{"gesture_id", key.first}, {"view", view_name(key.second)}, {"count", n}});
  }
  const json doc{{"header", options_json(manifest)}, {"counts", counts}, {"samples", samples}};

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << doc.dump(1) << '\n';
  if (!out) throw IoError("short write to " + path.string());
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  DatasetManifest m;
  try {
    const json doc = json::parse(in);
    const json& h = doc.at("header");
    m.schema_version = h.at("schema_version").get<int>();
    if (m.schema_version != 1) throw FormatError("unsupported manifest schema_version");
    auto& o = m.options;
    o.seed = h.at("seed").get<std::uint64_t>();
    o.frames_per_gesture_per_view = h.at("frames_per_gesture_per_view").get<int>();
    o.jitter_deg = h.at("jitter_deg").get<double>();
    const json& rig = h.at("rig");
    o.rig.radius_mm = rig.at("radius_mm").get<double>();
    o.rig.width = rig.at("width").get<int>();
    o.rig.height = rig.at("height").get<int>();
    o.rig.frame_rate_hz = rig.at("frame_rate_hz").get<double>();
    o.rig.focal_px = rig.at("focal_px").get<double>();
    const json& hand = h.at("spec");
    o.hand.palm_width_mm = hand.at("palm_width_mm").get<double>();
    o.hand.palm_height_mm = hand.at("palm_height_mm").get<double>();
    o.hand.phalanx_mm = hand.at("phalanx_mm").get<std::array<std::array<double, 3>, kNumFingers>>();
    o.hand.finger_radius_mm = hand.at("finger_radius_mm").get<double>();
    o.hand.thumb_radius_mm = hand.at("thumb_radius_mm").get<double>();
    const auto color = hand.at("hand_color").get<std::array<int, 3>>();
    o.hand.hand_color = {static_cast<std::uint8_t>(color[0]), static_cast<std::uint8_t>(color[1]),
                         static_cast<std::uint8_t>(color[2])};
    for (std::size_t f = 0; f < kNumFingers; ++f) {
      o.hand.knuckle_base_points[f] = vec3_from(hand.at("knuckle_base_points").at(f));
      o.hand.extension_dirs[f] = vec3_from(hand.at("extension_dirs").at(f));
    }
    const json& sc = h.at("scene_ranges");
    o.scene.brightness_min = sc.at("brightness_min").get<double>();
    o.scene.brightness_max = sc.at("brightness_max").get<double>();
    o.scene.noise_min = sc.at("noise_min").get<double>();
    o.scene.noise_max = sc.at("noise_max").get<double>();

    for (const json& s : doc.at("samples")) {
      Sample sample;
      sample.gesture_id = s.at("gesture_id").get<int>();
      sample.view = parse_view(s.at("view").get<std::string>());
      sample.frame_index = s.at("frame_index").get<int>();
      sample.image_path = s.at("image_path").get<std::string>();
      sample.label_bins = s.at("label_bins").get<BinLabels>();
      sample.jittered_angles.deg = s.at("jittered_angles").get<std::array<double, kNumJoints>>();
      m.samples.push_back(std::move(sample));
    }
  } catch (const json::exception& e) {
    throw FormatError("malformed manifest " + path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw FormatError("malformed manifest " + path.string() + ": " + e.what());
  }
  return m;
}

}  // namespace theta::synthview
