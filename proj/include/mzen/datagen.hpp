#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mzen/camera.hpp"
#include "mzen/common.hpp"
#include "mzen/image.hpp"
#include "mzen/render.hpp"

namespace mzen {

struct Primitive {
  enum class Kind { kSphere, kBox };
  Kind kind = Kind::kSphere;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Ones();  // radius in x for spheres, half extents for boxes
  Eigen::Vector3d albedo = Eigen::Vector3d::Ones();
  double density = 10.0;

  bool contains(const Eigen::Vector3d& x) const;
  double volume() const;
};

struct AnalyticScene {
  std::vector<Primitive> primitives;
  Eigen::AlignedBox3d bounds{Eigen::Vector3d(-1.2, -1.2, -1.2), Eigen::Vector3d(1.2, 1.2, 1.2)};
};

// View-independent emission: the innermost (smallest-volume) containing
// primitive supplies color and density; empty space has sigma = 0.
void analytic_field(const AnalyticScene& scene, const Eigen::Vector3d& x,
                    const Eigen::Vector3d& d, Eigen::Vector3d* rgb, double* sigma);

FieldEval analytic_field_eval(const AnalyticScene& scene);

// Ground-truth render through the regular render module; the depth output
// is the composited expected depth and doubles as the depth prior.
void render_ground_truth(const AnalyticScene& scene, const CameraPose& pose, int height,
                         int width, const RenderConfig& cfg, const Rng& rng, Image* image,
                         DepthMap* depth);

// Multi-zoom triplet synthesis from a single high-resolution master:
// 1x = bicubic downscale, 2x = center half crop downscaled, 4x = pure center
// quarter crop. A 1440x1040 master reproduces the 390x260 / 720x520-crop /
// 360x260-crop geometry exactly.
std::array<Image, 3> synthesize_zoom_triplet(const Image& hr);

struct DatasetImage {
  int camera = 0;
  double dial_zoom = 1.0;
  Image image;
  std::optional<CameraPose> gt_pose;
  std::optional<DepthMap> gt_depth;  // depth prior (true depth, optionally noised)
};

struct MultiZoomDataset {
  std::string scene_name = "scene";
  int width = 64;
  int height = 64;
  std::vector<double> zoom_levels;
  Eigen::AlignedBox3d world_bounds;
  double near = 0.1;
  double far = 6.0;
  std::vector<DatasetImage> images;
  std::vector<int> train_indices;
  std::vector<int> test_indices;

  int count_wide(double dial_threshold = 1.5) const;
};

struct CameraRingSpec {
  int count = 6;
  double distance = 3.0;     // ring plane at z = -distance
  double radius = 0.25;
  double look_z = 0.5;       // aim point (0, 0, look_z)
  double jitter_rot = 0.02;  // per-camera axis-angle noise, radians
  double jitter_trans = 0.03;
  double focal_scale = 1.8;  // ground-truth f = focal_scale * width
  double dial_noise = 0.0;   // relative noise on recorded dial readings
  double depth_noise = 0.0;  // multiplicative noise on stored depth priors
};

// Forward-facing ring; every camera is rendered at every zoom level with
// identical extrinsics. Zoom levels must include 1.
MultiZoomDataset generate_scene_dataset(const AnalyticScene& scene, const CameraRingSpec& ring,
                                        const std::vector<double>& zoom_levels, int height,
                                        int width, const RenderConfig& cfg, Rng& rng,
                                        const std::string& name = "scene");

// Random disjoint split; returns a human-readable warning when the training
// half ends up with no wide-field image (Phase A would be impossible).
std::string split_train_test(MultiZoomDataset& ds, double train_fraction, uint64_t seed);

void save_dataset(const MultiZoomDataset& ds, const std::string& dir);
MultiZoomDataset load_dataset(const std::string& dir);

// Desk-scale scenes.
AnalyticScene default_scene(uint64_t seed = 7);
AnalyticScene one_sphere_scene();

}  // namespace mzen
