#include "doctest.h"
#include "mzen/datagen.hpp"
#include "mzen/priming.hpp"
#include "oracles.hpp"

using namespace mzen;

namespace {

// Smooth analytic test pattern evaluated at arbitrary (possibly fractional)
// pixel coordinates, so zoomed views can be produced exactly.
double pattern(double u, double v, int channel) {
  return 0.5 + 0.25 * std::sin(u + 0.3 * channel) * std::cos(0.7 * v - channel) + 0.2 * u * v;
}

Image pattern_image(int size, double zoom) {
  Image img(size, size);
  const double c = (size - 1) / 2.0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      for (int ch = 0; ch < 3; ++ch) {
        // Zooming by xi samples the pattern at c + (p - c)/xi.
        const double u = (c + (x - c) / zoom) / size * 2.0;
        const double v = (c + (y - c) / zoom) / size * 2.0;
        img.at(y, x, ch) = pattern(u, v, ch);
      }
  return img;
}

}  // namespace

TEST_SUITE("priming") {

TEST_CASE("surrogate at zoom 1 is the input, bit for bit") {
  Rng rng(3);
  const Image img = oracle::random_image(16, 16, rng);
  const Image surrogate = make_surrogate(img, 1.0);
  CHECK(surrogate.data == img.data);
}

TEST_CASE("zoom-2 surrogate of a 4x4 image crops the central 2x2 block") {
  Image img(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = y * 4 + x;
  const Image crop = center_crop(img, 2, 2);
  CHECK(crop.at(0, 0, 0) == 5.0);
  CHECK(crop.at(0, 1, 0) == 6.0);
  CHECK(crop.at(1, 0, 0) == 9.0);
  CHECK(crop.at(1, 1, 0) == 10.0);
  const Image surrogate = make_surrogate(img, 2.0);
  CHECK(surrogate.data == resize_bilinear(crop, 4, 4).data);
}

TEST_CASE("zoom-4 surrogate of a smooth image matches the analytic re-render") {
  const Image wide = pattern_image(64, 1.0);
  const Image zoomed = pattern_image(64, 4.0);
  const Image surrogate = make_surrogate(wide, 4.0);
  double worst = 0.0;
  for (size_t i = 0; i < zoomed.data.size(); ++i)
    worst = std::max(worst, std::fabs(surrogate.data[i] - zoomed.data[i]));
  CHECK(worst < 0.02);
}

TEST_CASE("crop-too-small raises a structured error") {
  Rng rng(4);
  const Image img = oracle::random_image(4, 4, rng);
  CHECK_THROWS_AS(make_surrogate(img, 8.0), Error);
  CHECK_THROWS_AS(make_surrogate(img, 0.5), Error);
}

TEST_CASE("matching: exact self-match and tie-breaking") {
  Rng rng(5);
  std::vector<Image> wide_set;
  for (int g = 0; g < 4; ++g) wide_set.push_back(oracle::random_image(16, 16, rng));

  const Image query = make_surrogate(wide_set[2], 2.0);
  const SurrogateMatch match = match_wide_field(query, wide_set, 2.0);
  CHECK(match.wide_index == 2);
  CHECK(match.mse == 0.0);

  // Single candidate always wins.
  const std::vector<Image> one = {wide_set[0]};
  CHECK(match_wide_field(query, one, 2.0).wide_index == 0);

  // Identical candidates: lowest index wins.
  const std::vector<Image> twins = {wide_set[1], wide_set[1]};
  CHECK(match_wide_field(query, twins, 2.0).wide_index == 0);

  CHECK_THROWS_AS(match_wide_field(query, {}, 2.0), Error);
}

TEST_CASE("matching picks the true source camera on a rendered scene") {
  const AnalyticScene scene = default_scene(7);
  CameraRingSpec ring;
  ring.count = 5;
  RenderConfig rc;
  rc.n_samples = 48;
  Rng rng(11);
  const MultiZoomDataset ds =
      generate_scene_dataset(scene, ring, {1.0, 2.0}, 48, 48, rc, rng, "match-test");

  std::vector<Image> wide;
  std::vector<int> wide_cams;
  for (const DatasetImage& img : ds.images)
    if (img.dial_zoom == 1.0) {
      wide.push_back(img.image);
      wide_cams.push_back(img.camera);
    }
  int correct = 0, total = 0;
  for (const DatasetImage& img : ds.images)
    if (img.dial_zoom > 1.0) {
      const SurrogateMatch m = match_wide_field(img.image, wide, img.dial_zoom);
      if (wide_cams[m.wide_index] == img.camera) ++correct;
      ++total;
    }
  CHECK(total == 5);
  CHECK(correct == 5);
}

TEST_CASE("prime_pose copies the matched pose and installs the dial zoom") {
  std::vector<CameraPose> poses(3);
  poses[1].rotation = Eigen::Vector3d(0.1, 0.2, 0.3);
  poses[1].translation = Eigen::Vector3d(-1, 2, 0.5);
  poses[1].focal = Eigen::Vector2d(77, 78);
  poses[1].principal = Eigen::Vector2d(31.5, 30.5);

  SurrogateMatch match;
  match.wide_index = 1;

  const CameraPose at_dial_one = prime_pose(match, poses, 1.0);
  CHECK(at_dial_one.rotation == poses[1].rotation);
  CHECK(at_dial_one.translation == poses[1].translation);
  CHECK(at_dial_one.focal == poses[1].focal);
  CHECK(at_dial_one.principal == poses[1].principal);
  CHECK(at_dial_one.zoom == 1.0);

  const CameraPose primed = prime_pose(match, poses, 3.5);
  CHECK(primed.zoom == 3.5);
  CHECK(primed.rotation == poses[1].rotation);  // only the zoom field differs
  CHECK(primed.translation == poses[1].translation);

  match.wide_index = 9;
  CHECK_THROWS_AS(prime_pose(match, poses, 2.0), Error);
}

}  // TEST_SUITE
