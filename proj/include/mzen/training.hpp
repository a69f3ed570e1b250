#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "mzen/camera.hpp"
#include "mzen/common.hpp"
#include "mzen/image.hpp"
#include "mzen/render.hpp"

namespace mzen {

enum class Reduction { kSum, kMean };
enum class PhaseKind { kA, kB, kC };

inline char phase_letter(PhaseKind p) {
  return p == PhaseKind::kA ? 'A' : (p == PhaseKind::kB ? 'B' : 'C');
}

// Squared-L2 photometric error over all pixels and channels. kSum matches
// the ||.||_2^2 objective; kMean divides by pixel*channel count.
double photometric_loss(const Image& rendered, const Image& observed, Reduction reduction);

// L1 depth-consistency residual sum |D_hat - (a * D_prior + b)|.
double depth_loss(const DepthMap& rendered, const DepthMap& prior, double a, double b);

// Per-image optimizable state. The zoom scalar multiplies the shared focal;
// (depth_a, depth_b) is the per-image affine fit of the depth prior.
struct PoseState {
  Eigen::Vector3d rotation = Eigen::Vector3d::Zero();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double zoom = 1.0;
  double depth_a = 1.0;
  double depth_b = 0.0;

  CameraPose camera(const Eigen::Vector2d& focal, const Eigen::Vector2d& principal) const {
    CameraPose p;
    p.rotation = rotation;
    p.translation = translation;
    p.focal = focal;
    p.principal = principal;
    p.zoom = zoom;
    return p;
  }
};

// Everything the optimizer can touch: field weights, per-image poses, and
// the shared intrinsics (the principal point stays fixed).
struct SceneParams {
  RadianceFieldParams field;
  std::vector<PoseState> poses;
  Eigen::Vector2d focal = Eigen::Vector2d(64.0, 64.0);
  Eigen::Vector2d principal = Eigen::Vector2d::Zero();
};

// One image the trainer can draw rays from.
struct TrainView {
  const Image* image = nullptr;
  const DepthMap* depth_prior = nullptr;  // optional
  double dial_zoom = 1.0;
  bool wide = true;
};

// Which parameter groups receive gradients.
struct GroupPolicy {
  bool field = false;
  bool wide_pose = false;
  bool zoom_pose = false;
  bool focal = false;
  bool wide_zoom = false;
  bool zoom_zoom = false;
  bool depth_affine = false;
};

GroupPolicy policy_for_phase(PhaseKind phase, bool learn_wide_zoom);

struct LossConfig {
  Reduction reduction = Reduction::kMean;
  bool depth_enabled = false;
  double depth_weight = 2e-5;
  RenderConfig render;
  double wide_dial_threshold = 1.5;
};

struct RayBatchItem {
  int image_index = 0;
  std::vector<double> xs, ys;
};

// Graph plus the learnable leaf handles the optimizer needs. Frozen groups
// are bound as tape constants, so their gradients are identically zero and
// their bytes cannot change.
struct PhaseGraph {
  ad::Tape tape;
  ad::Var loss;
  std::vector<ad::Var> field_weights;  // empty when the field is frozen
  std::vector<ad::Var> field_biases;
  struct ImageVars {
    int image_index = -1;
    ad::Var rotation, translation, zoom;  // invalid when frozen
    ad::Var depth_a, depth_b;
    bool pose_learnable = false;
    bool zoom_learnable = false;
    bool affine_learnable = false;
  };
  std::vector<ImageVars> images;
  ad::Var focal;  // invalid when frozen
  bool focal_learnable = false;
  int total_rays = 0;
};

// Assembles render + photometric (+ optional depth) loss for a ray batch
// under an explicit freeze policy. `rng` seeds the per-ray depth jitter.
PhaseGraph build_loss_graph(const GroupPolicy& policy, const std::vector<RayBatchItem>& batch,
                            const SceneParams& params, const std::vector<TrainView>& views,
                            const LossConfig& cfg, const Rng& rng);

// Phase objective with batch-legality checks: Phase A accepts wide-field
// images only, Phase B zoom-in images only, Phase C anything.
PhaseGraph phase_loss(PhaseKind phase, const std::vector<RayBatchItem>& batch,
                      const SceneParams& params, const std::vector<TrainView>& views,
                      const LossConfig& cfg, const Rng& rng, bool learn_wide_zoom = true);

// All pixels of one image as a batch item.
RayBatchItem full_image_batch(int image_index, int width, int height);

}  // namespace mzen
