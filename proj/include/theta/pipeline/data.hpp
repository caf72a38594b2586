#pragma once

#include <filesystem>
#include <vector>

#include "theta/core/image.hpp"
#include "theta/fusion/fusion.hpp"
#include "theta/net/train.hpp"
#include "theta/pipeline/config.hpp"
#include "theta/segment/segment.hpp"
#include "theta/synthview/dataset.hpp"

namespace theta::pipeline {

/// provider -> threshold 0.5 -> morph_refine -> prepare at size x size.
PlanarImage prepare_view(const RgbImage& frame, const segment::SoftMaskProvider& provider, int size);

/// The three views of one (gesture, frame index), front/right/left.
struct ManifestTriplet {
  int gesture_id = 0;
  int frame_index = 0;
  std::array<const synthview::Sample*, fusion::kStreamCount> views{};
};

/// Groups manifest samples into complete triplets ordered by (gesture, frame).
/// Throws DataError when a view is missing or labels disagree across views.
std::vector<ManifestTriplet> group_triplets(const synthview::DatasetManifest& manifest);

struct PreparedData {
  synthview::DatasetManifest manifest;
  std::vector<ManifestTriplet> triplets;  // pointers into manifest.samples
  net::TensorDataset tensors;             // one entry per triplet, group = gesture id
};

/// Reads <dir>/manifest.json (IoError when absent), segments and fuses every
/// triplet at the given input size. Throws DataError when there are none.
PreparedData load_prepared(const std::filesystem::path& data_dir, const segment::HsvThresholds& hsv,
                           int input_size, double sync_window_ms);

}  // namespace theta::pipeline
