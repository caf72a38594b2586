#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "theta/core/hand.hpp"
#include "theta/synthview/render.hpp"

namespace theta::synthview {

struct Sample {
  int gesture_id = 0;
  View view = View::front;
  int frame_index = 0;
  std::string image_path;  // relative to the dataset root
  BinLabels label_bins{};
  JointAngles jittered_angles;
};

struct GenerationOptions {
  int frames_per_gesture_per_view = 50;
  CameraRig rig;
  HandSpec hand;
  SceneRanges scene;
  double jitter_deg = 5.0;
  std::uint64_t seed = 0;
};

struct DatasetManifest {
  int schema_version = 1;
  GenerationOptions options;
  std::vector<Sample> samples;

  /// Per (gesture_id, view) sample counts.
  std::map<std::pair<int, View>, int> counts() const;
};

/// Renders every gesture from every view `frames_per_gesture_per_view` times
/// and writes `<out>/g<id>/<view>/f<index>.ppm` plus `<out>/manifest.json`.
/// All views of one frame index share the same jittered pose.
DatasetManifest generate_dataset(std::span<const GestureAnnotation> table,
                                 const GenerationOptions& options,
                                 const std::filesystem::path& out_dir);

/// Jittered pose used for a given gesture and frame index.
JointAngles frame_pose(const GestureAnnotation& gesture, int frame_index,
                       const GenerationOptions& options);
/// Scene parameters used for a given gesture, view and frame index.
SceneParams frame_scene(const GestureAnnotation& gesture, View view, int frame_index,
                        const GenerationOptions& options);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace theta::synthview
