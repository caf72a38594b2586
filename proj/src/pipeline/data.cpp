#include "theta/pipeline/data.hpp"

#include <map>

#include "theta/core/error.hpp"

namespace theta::pipeline {

PlanarImage prepare_view(const RgbImage& frame, const segment::SoftMaskProvider& provider, int size) {
  const auto mask = segment::morph_refine(segment::threshold(provider.mask(frame), 0.5));
  return segment::apply_and_prepare(frame, mask, size, size);
}

std::vector<ManifestTriplet> group_triplets(const synthview::DatasetManifest& manifest) {
  std::map<std::pair<int, int>, ManifestTriplet> by_key;
  for (const auto& s : manifest.samples) {
    auto& t = by_key[{s.gesture_id, s.frame_index}];
    t.gesture_id = s.gesture_id;
    t.frame_index = s.frame_index;
    auto& slot = t.views[static_cast<std::size_t>(s.view)];
    if (slot) {
      throw DataError("duplicate view for gesture " + std::to_string(s.gesture_id) + " frame " +
                      std::to_string(s.frame_index));
    }
    slot = &s;
  }
  std::vector<ManifestTriplet> out;
  out.reserve(by_key.size());
  for (auto& [key, t] : by_key) {
    for (const auto* v : t.views) {
      if (!v) {
        throw DataError("gesture " + std::to_string(key.first) + " frame " + std::to_string(key.second) +
                        " lacks a view");
      }
      if (v->label_bins != t.views[0]->label_bins) {
        throw DataError("views of gesture " + std::to_string(key.first) + " frame " +
                        std::to_string(key.second) + " carry different labels");
      }
    }
    out.push_back(t);
  }
  return out;
}

PreparedData load_prepared(const std::filesystem::path& data_dir, const segment::HsvThresholds& hsv,
                           int input_size, double sync_window_ms) {
  PreparedData data{synthview::read_manifest(data_dir / "manifest.json"), {},
                    net::TensorDataset(fusion::kFusedChannels, input_size, input_size)};
  data.triplets = group_triplets(data.manifest);
  if (data.triplets.empty()) throw DataError("dataset " + data_dir.string() + " holds no samples");

  const segment::HsvMaskProvider provider(hsv);
  const double period_ms = 1000.0 / data.manifest.options.rig.frame_rate_hz;
  for (const auto& t : data.triplets) {
    fusion::FrameTriplet ft;
    std::array<PlanarImage*, fusion::kStreamCount> dst{&ft.front, &ft.right, &ft.left};
    for (std::size_t v = 0; v < fusion::kStreamCount; ++v) {
      *dst[v] = prepare_view(read_ppm(data_dir / t.views[v]->image_path), provider, input_size);
      ft.timestamps_ms[v] = t.frame_index * period_ms;
    }
    data.tensors.add(fusion::compose(ft, sync_window_ms).values, t.views[0]->label_bins, t.gesture_id);
  }
  return data;
}

}  // namespace theta::pipeline
