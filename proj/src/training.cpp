#include "mzen/training.hpp"

#include <cmath>

namespace mzen {

double photometric_loss(const Image& rendered, const Image& observed, Reduction reduction) {
  if (!rendered.same_size(observed))
    throw data_error("photometric_loss: image dimensions differ (" +
                     std::to_string(rendered.width) + "x" + std::to_string(rendered.height) +
                     " vs " + std::to_string(observed.width) + "x" +
                     std::to_string(observed.height) + ")");
  double acc = 0.0;
  for (size_t i = 0; i < rendered.data.size(); ++i) {
    const double d = rendered.data[i] - observed.data[i];
    acc += d * d;
  }
  if (reduction == Reduction::kMean) acc /= static_cast<double>(rendered.data.size());
  return acc;
}

double depth_loss(const DepthMap& rendered, const DepthMap& prior, double a, double b) {
  if (rendered.width != prior.width || rendered.height != prior.height)
    throw data_error("depth_loss: depth map dimensions differ");
  double acc = 0.0;
  for (size_t i = 0; i < rendered.data.size(); ++i)
    acc += std::fabs(rendered.data[i] - (a * prior.data[i] + b));
  return acc;
}

GroupPolicy policy_for_phase(PhaseKind phase, bool learn_wide_zoom) {
  GroupPolicy p;
  switch (phase) {
    case PhaseKind::kA:
      p.field = true;
      p.wide_pose = true;
      p.focal = true;
      p.wide_zoom = learn_wide_zoom;
      break;
    case PhaseKind::kB:
      p.zoom_pose = true;
      p.zoom_zoom = true;
      break;
    case PhaseKind::kC:
      p.field = true;
      p.wide_pose = true;
      p.zoom_pose = true;
      p.focal = true;
      p.wide_zoom = learn_wide_zoom;
      p.zoom_zoom = true;
      p.depth_affine = true;
      break;
  }
  return p;
}

RayBatchItem full_image_batch(int image_index, int width, int height) {
  RayBatchItem item;
  item.image_index = image_index;
  item.xs.reserve(static_cast<size_t>(width) * height);
  item.ys.reserve(static_cast<size_t>(width) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      item.xs.push_back(x);
      item.ys.push_back(y);
    }
  return item;
}

PhaseGraph build_loss_graph(const GroupPolicy& policy, const std::vector<RayBatchItem>& batch,
                            const SceneParams& params, const std::vector<TrainView>& views,
                            const LossConfig& cfg, const Rng& rng) {
  if (batch.empty()) throw usage_error("build_loss_graph: empty batch");
  PhaseGraph g;
  ad::Tape& tape = g.tape;

  const FieldNodes field = bind_field(tape, params.field, policy.field);
  if (policy.field) {
    g.field_weights = field.weights;
    g.field_biases = field.biases;
  }

  const ad::Var focal = policy.focal ? tape.leaf(params.focal, "focal")
                                     : tape.constant(Eigen::MatrixXd(params.focal));
  g.focal = policy.focal ? focal : ad::Var{};
  g.focal_learnable = policy.focal;

  ad::Var total;  // photometric sum
  ad::Var depth_total;
  int total_rays = 0;

  for (const RayBatchItem& item : batch) {
    if (item.image_index < 0 || item.image_index >= static_cast<int>(views.size()))
      throw usage_error("build_loss_graph: image index out of range");
    const TrainView& view = views[item.image_index];
    const PoseState& ps = params.poses[item.image_index];
    const int b = static_cast<int>(item.xs.size());
    if (b == 0 || item.ys.size() != item.xs.size())
      throw usage_error("build_loss_graph: bad pixel list");
    total_rays += b;

    const bool pose_learnable = view.wide ? policy.wide_pose : policy.zoom_pose;
    const bool zoom_learnable = view.wide ? policy.wide_zoom : policy.zoom_zoom;
    const std::string prefix = "pose" + std::to_string(item.image_index) + ".";

    PhaseGraph::ImageVars iv;
    iv.image_index = item.image_index;
    iv.pose_learnable = pose_learnable;
    iv.zoom_learnable = zoom_learnable;

    PoseNodes pose;
    pose.rotation = pose_learnable ? tape.leaf(ps.rotation, prefix + "rotation")
                                   : tape.constant(Eigen::MatrixXd(ps.rotation));
    pose.translation = pose_learnable ? tape.leaf(ps.translation, prefix + "translation")
                                      : tape.constant(Eigen::MatrixXd(ps.translation));
    Eigen::MatrixXd z(1, 1);
    z(0, 0) = ps.zoom;
    pose.zoom = zoom_learnable ? tape.leaf(z, prefix + "zoom") : tape.constant(z);
    pose.focal = focal;
    pose.principal = params.principal;
    if (pose_learnable) {
      iv.rotation = pose.rotation;
      iv.translation = pose.translation;
    }
    if (zoom_learnable) iv.zoom = pose.zoom;

    // Depth jitter streams keyed by (image, pixel) so batches of any shape
    // draw identical samples for the same ray.
    const Rng image_rng = rng.fork(static_cast<uint64_t>(item.image_index));
    std::vector<RaySampleBatch> samples;
    samples.reserve(b);
    const int width = view.image->width;
    for (int r = 0; r < b; ++r) {
      Rng child = image_rng.fork(static_cast<uint64_t>(item.ys[r]) * width +
                                 static_cast<uint64_t>(item.xs[r]));
      samples.push_back(
          stratified_samples(cfg.render.near, cfg.render.far, cfg.render.n_samples, child,
                             cfg.render.jitter));
    }

    const RenderGraph render = build_render_graph(tape, field, pose, item.xs, item.ys, samples,
                                                  cfg.render);

    Eigen::MatrixXd target(b, 3);
    for (int r = 0; r < b; ++r)
      for (int c = 0; c < 3; ++c)
        target(r, c) = view.image->at(static_cast<int>(item.ys[r]),
                                      static_cast<int>(item.xs[r]), c);
    const ad::Var diff = tape.sub(render.rgb, tape.constant(std::move(target)));
    const ad::Var sq = tape.sum_all(tape.mul(diff, diff));
    total = total.valid() ? tape.add(total, sq) : sq;

    if (cfg.depth_enabled) {
      if (!view.depth_prior)
        throw data_error("build_loss_graph: depth term enabled but image " +
                         std::to_string(item.image_index) + " has no depth prior");
      Eigen::MatrixXd prior(b, 1);
      for (int r = 0; r < b; ++r)
        prior(r, 0) = view.depth_prior->at(static_cast<int>(item.ys[r]),
                                           static_cast<int>(item.xs[r]));
      Eigen::MatrixXd a_mat(1, 1), b_mat(1, 1);
      a_mat(0, 0) = ps.depth_a;
      b_mat(0, 0) = ps.depth_b;
      const ad::Var a_var = policy.depth_affine ? tape.leaf(a_mat, prefix + "depth_a")
                                                : tape.constant(a_mat);
      const ad::Var b_var = policy.depth_affine ? tape.leaf(b_mat, prefix + "depth_b")
                                                : tape.constant(b_mat);
      iv.affine_learnable = policy.depth_affine;
      if (policy.depth_affine) {
        iv.depth_a = a_var;
        iv.depth_b = b_var;
      }
      const ad::Var prior_c = tape.constant(std::move(prior));
      const ad::Var fitted = tape.add(tape.mul_scalar(prior_c, a_var),
                                      tape.mul_scalar(tape.constant(Eigen::MatrixXd::Ones(b, 1)),
                                                      b_var));
      const ad::Var resid = tape.abs(tape.sub(render.depth, fitted));
      const ad::Var dsum = tape.sum_all(resid);
      depth_total = depth_total.valid() ? tape.add(depth_total, dsum) : dsum;
    }

    g.images.push_back(iv);
  }

  g.total_rays = total_rays;
  ad::Var loss = total;
  if (cfg.reduction == Reduction::kMean) loss = tape.scale(loss, 1.0 / (3.0 * total_rays));
  if (depth_total.valid()) {
    ad::Var dterm = tape.scale(depth_total, cfg.depth_weight);
    if (cfg.reduction == Reduction::kMean) dterm = tape.scale(dterm, 1.0 / total_rays);
    loss = tape.add(loss, dterm);
  }
  g.loss = loss;
  return g;
}

PhaseGraph phase_loss(PhaseKind phase, const std::vector<RayBatchItem>& batch,
                      const SceneParams& params, const std::vector<TrainView>& views,
                      const LossConfig& cfg, const Rng& rng, bool learn_wide_zoom) {
  for (const RayBatchItem& item : batch) {
    if (item.image_index < 0 || item.image_index >= static_cast<int>(views.size()))
      throw usage_error("phase_loss: image index out of range");
    const TrainView& view = views[item.image_index];
    if (phase == PhaseKind::kA && !view.wide)
      throw data_error("phase_loss: Phase A batch contains zoom-in image " +
                       std::to_string(item.image_index) + " (dial " +
                       std::to_string(view.dial_zoom) + ")");
    if (phase == PhaseKind::kB && view.wide)
      throw data_error("phase_loss: Phase B batch contains wide-field image " +
                       std::to_string(item.image_index));
  }
  GroupPolicy policy = policy_for_phase(phase, learn_wide_zoom);
  if (!cfg.depth_enabled) policy.depth_affine = false;
  return build_loss_graph(policy, batch, params, views, cfg, rng);
}

}  // namespace mzen
