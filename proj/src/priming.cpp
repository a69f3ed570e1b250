#include "mzen/priming.hpp"

#include <cmath>

namespace mzen {

namespace {

constexpr int kMatchResolution = 64;

int nearest_even(double x) { return 2 * static_cast<int>(std::llround(x / 2.0)); }

Image match_scale(const Image& img) {
  if (img.width <= kMatchResolution && img.height <= kMatchResolution) return img;
  return resize_bilinear(img, kMatchResolution, kMatchResolution);
}

}  // namespace

Image make_surrogate(const Image& wide, double zoom) {
  if (!(zoom >= 1.0)) throw data_error("make_surrogate: zoom must be >= 1");
  if (zoom == 1.0) return wide;
  int cw = std::min(nearest_even(wide.width / zoom), wide.width);
  int ch = std::min(nearest_even(wide.height / zoom), wide.height);
  if (cw < 2 || ch < 2)
    throw data_error("make_surrogate: crop for zoom " + std::to_string(zoom) +
                     " would be smaller than 2x2");
  return resize_bilinear(center_crop(wide, cw, ch), wide.width, wide.height);
}

SurrogateMatch match_wide_field(const Image& zoomin, const std::vector<Image>& wide_set,
                                double zoom) {
  if (wide_set.empty()) throw data_error("match_wide_field: wide-field set is empty");
  const Image query = match_scale(zoomin);
  SurrogateMatch best;
  for (int g = 0; g < static_cast<int>(wide_set.size()); ++g) {
    if (!wide_set[g].same_size(zoomin))
      throw data_error("match_wide_field: wide image " + std::to_string(g) +
                       " differs in size from the query");
    Image surrogate = make_surrogate(wide_set[g], zoom);
    const double mse = mean_squared_error(query, match_scale(surrogate));
    if (best.wide_index < 0 || mse < best.mse) {
      best.wide_index = g;
      best.mse = mse;
      best.surrogate = std::move(surrogate);
    }
  }
  return best;
}

CameraPose prime_pose(const SurrogateMatch& match, const std::vector<CameraPose>& wide_poses,
                      double dial_zoom) {
  if (match.wide_index < 0 || match.wide_index >= static_cast<int>(wide_poses.size()))
    throw data_error("prime_pose: match index out of range");
  CameraPose primed = wide_poses[match.wide_index];
  primed.zoom = dial_zoom;
  return primed;
}

}  // namespace mzen
