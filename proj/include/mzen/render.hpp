#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "mzen/camera.hpp"
#include "mzen/common.hpp"
#include "mzen/encoding.hpp"
#include "mzen/field.hpp"
#include "mzen/image.hpp"

namespace mzen {

struct RenderConfig {
  double near = 0.1;
  double far = 6.0;
  int n_samples = 64;
  bool jitter = true;  // stratified when true, bin centers when false
  Eigen::Vector3d background = Eigen::Vector3d::Zero();
  Backbone backbone = Backbone::kPlain;
  double barf_alpha_pos = 1.0;
  double barf_alpha_dir = 1.0;
  int chunk = 1024;  // rays per tape chunk when rendering the MLP
};

// Depth samples for one ray. deltas[k] = depths[k+1] - depths[k] with the
// last entry fixed to (far - near) / n. mids/sigma_t2 describe the sample
// interval [depths[k], depths[k] + deltas[k]] for integrated encoding.
struct RaySampleBatch {
  Eigen::VectorXd depths;
  Eigen::VectorXd deltas;
  Eigen::VectorXd mids;
  Eigen::VectorXd sigma_t2;
};

// One uniform draw per equal-width bin; deterministic given the rng state.
RaySampleBatch stratified_samples(double near, double far, int n, Rng& rng, bool jitter = true);

struct CompositeResult {
  Eigen::Vector3d rgb;
  double depth = 0.0;
  Eigen::VectorXd weights;
};

// Emission-absorption quadrature: w_i = T_i (1 - exp(-sigma_i delta_i)),
// T_i = exp(-sum_{k<i} sigma_k delta_k). No background term.
CompositeResult composite(const Eigen::MatrixX3d& rgbs, const Eigen::VectorXd& sigmas,
                          const Eigen::VectorXd& deltas, const Eigen::VectorXd& depths);

// Pointwise scene evaluator used for ground-truth rendering and oracles.
using FieldEval = std::function<void(const Eigen::MatrixX3d& positions,
                                     const Eigen::MatrixX3d& directions, Eigen::MatrixX3d* rgb,
                                     Eigen::VectorXd* sigma)>;

// Renders via pixel_ray -> samples -> eval -> composite. Each pixel uses the
// rng fork keyed by its linear index, so results do not depend on chunking
// and a full image equals per-pixel renders stitched together.
void render_image(const FieldEval& eval, const CameraPose& pose, int height, int width,
                  const RenderConfig& cfg, const Rng& rng, Image* image, DepthMap* depth);

// Same contract for the MLP field; runs through the autodiff graph with all
// parameters bound as constants.
void render_image(const RadianceFieldParams& params, const CameraPose& pose, int height,
                  int width, const RenderConfig& cfg, const Rng& rng, Image* image,
                  DepthMap* depth);

// Single-ray render with an explicit rng; render_image(pixel p) equals this
// with rng = base.fork(p_linear_index).
void render_ray(const RadianceFieldParams& params, const CameraPose& pose, double i, double j,
                const RenderConfig& cfg, Rng rng, Eigen::Vector3d* rgb, double* depth);

// Graph-side compositing over blocks of n samples per ray.
struct CompositeNodes {
  ad::Var rgb;      // Bx3
  ad::Var depth;    // Bx1
  ad::Var wsum;     // Bx1
  ad::Var weights;  // (B*n)x1
};

CompositeNodes composite_graph(ad::Tape& tape, ad::Var rgbs, ad::Var sigmas,
                               const Eigen::VectorXd& deltas, const Eigen::VectorXd& depths,
                               int n);

// Graph assembly shared by training and MLP rendering.
struct RenderGraph {
  ad::Var rgb;    // Bx3
  ad::Var depth;  // Bx1
  ad::Var wsum;   // Bx1
  int n_rays = 0;
};

RenderGraph build_render_graph(ad::Tape& tape, const FieldNodes& field, const PoseNodes& pose,
                               const std::vector<double>& is, const std::vector<double>& js,
                               const std::vector<RaySampleBatch>& samples,
                               const RenderConfig& cfg);

}  // namespace mzen
