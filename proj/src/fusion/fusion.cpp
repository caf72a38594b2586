#include "theta/fusion/fusion.hpp"

#include <algorithm>

namespace theta::fusion {

FusedTensor compose(const FrameTriplet& triplet, double window_ms) {
  const double skew = skew_ms(triplet.timestamps_ms);
  if (skew > window_ms) {
    throw SyncError("triplet skew " + std::to_string(skew) + " ms exceeds window " +
                    std::to_string(window_ms) + " ms");
  }
  const PlanarImage* views[kStreamCount] = {&triplet.front, &triplet.right, &triplet.left};
  const int h = triplet.front.height, w = triplet.front.width;
  for (const PlanarImage* v : views) {
    if (v->channels != 3 || v->height != h || v->width != w) {
      throw ShapeError("triplet views must all be 3 x " + std::to_string(h) + " x " +
                       std::to_string(w));
    }
  }
  FusedTensor out{PlanarImage(kFusedChannels, h, w)};
  const std::size_t plane = static_cast<std::size_t>(3) * h * w;
  for (std::size_t s = 0; s < kStreamCount; ++s) {
    std::copy(views[s]->values.begin(), views[s]->values.end(),
              out.values.values.begin() + static_cast<std::ptrdiff_t>(s * plane));
  }
  return out;
}

}  // namespace theta::fusion
