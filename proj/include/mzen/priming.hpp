#pragma once

#include <vector>

#include "mzen/camera.hpp"
#include "mzen/common.hpp"
#include "mzen/image.hpp"
#include "mzen/training.hpp"

namespace mzen {

struct SurrogateMatch {
  int wide_index = -1;
  double mse = 0.0;
  Image surrogate;
};

// Zoom-consistent surrogate: centered 1/xi crop (dimensions rounded to the
// nearest even integer) bilinearly resized back to native resolution.
// xi = 1 returns the input bit-exactly.
Image make_surrogate(const Image& wide, double zoom);

// Nearest wide-field view by RGB mean-squared error against each surrogate.
// Ties break to the lowest index. Matching runs at a <= 64x64 working
// resolution when the images are larger.
SurrogateMatch match_wide_field(const Image& zoomin, const std::vector<Image>& wide_set,
                                double zoom);

// Copies (R, t) and the shared intrinsics from the matched wide-field pose;
// the zoom scalar starts at the dial reading.
CameraPose prime_pose(const SurrogateMatch& match, const std::vector<CameraPose>& wide_poses,
                      double dial_zoom);

}  // namespace mzen
