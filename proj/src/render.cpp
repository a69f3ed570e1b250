#include "mzen/render.hpp"

#include <cmath>

namespace mzen {

RaySampleBatch stratified_samples(double near, double far, int n, Rng& rng, bool jitter) {
  if (!(near < far)) throw usage_error("stratified_samples: near must be < far");
  if (n < 1) throw usage_error("stratified_samples: need at least one sample");
  RaySampleBatch out;
  out.depths.resize(n);
  out.deltas.resize(n);
  out.mids.resize(n);
  out.sigma_t2.resize(n);
  const double w = (far - near) / n;
  for (int k = 0; k < n; ++k) {
    const double u = jitter ? rng.uniform() : 0.5;
    out.depths[k] = near + (k + u) * w;
  }
  for (int k = 0; k + 1 < n; ++k) out.deltas[k] = out.depths[k + 1] - out.depths[k];
  out.deltas[n - 1] = w;
  for (int k = 0; k < n; ++k) {
    out.mids[k] = out.depths[k] + 0.5 * out.deltas[k];
    out.sigma_t2[k] = out.deltas[k] * out.deltas[k] / 12.0;
  }
  return out;
}

CompositeResult composite(const Eigen::MatrixX3d& rgbs, const Eigen::VectorXd& sigmas,
                          const Eigen::VectorXd& deltas, const Eigen::VectorXd& depths) {
  const auto n = sigmas.size();
  if (rgbs.rows() != n || deltas.size() != n || depths.size() != n)
    throw usage_error("composite: input lengths differ");
  CompositeResult out;
  out.weights.resize(n);
  out.rgb.setZero();
  double transmittance = 1.0;
  double depth = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double a = 1.0 - std::exp(-sigmas[k] * deltas[k]);
    const double w = transmittance * a;
    out.weights[k] = w;
    out.rgb += w * rgbs.row(k).transpose();
    depth += w * depths[k];
    transmittance *= 1.0 - a;
  }
  out.depth = depth;
  return out;
}

namespace {

std::vector<RaySampleBatch> samples_for_pixels(const RenderConfig& cfg, const Rng& base,
                                               const std::vector<uint64_t>& pixel_ids) {
  std::vector<RaySampleBatch> out;
  out.reserve(pixel_ids.size());
  for (uint64_t id : pixel_ids) {
    Rng child = base.fork(id);
    out.push_back(stratified_samples(cfg.near, cfg.far, cfg.n_samples, child, cfg.jitter));
  }
  return out;
}

}  // namespace

CompositeNodes composite_graph(ad::Tape& tape, ad::Var rgbs, ad::Var sigmas,
                               const Eigen::VectorXd& deltas, const Eigen::VectorXd& depths,
                               int n) {
  const ad::Var delta_c = tape.constant(deltas);
  const ad::Var sd = tape.mul(sigmas, delta_c);
  const ad::Var transmittance = tape.exp(tape.scale(tape.seg_cumsum_exclusive(sd, n), -1.0));
  const ad::Var alpha = tape.offset(tape.scale(tape.exp(tape.scale(sd, -1.0)), -1.0), 1.0);
  const ad::Var w = tape.mul(transmittance, alpha);
  CompositeNodes out;
  out.weights = w;
  out.wsum = tape.seg_sum(w, n);
  out.depth = tape.seg_sum(tape.mul(w, tape.constant(depths)), n);
  out.rgb = tape.seg_sum(tape.mul_col(rgbs, w), n);
  return out;
}

RenderGraph build_render_graph(ad::Tape& tape, const FieldNodes& field, const PoseNodes& pose,
                               const std::vector<double>& is, const std::vector<double>& js,
                               const std::vector<RaySampleBatch>& samples,
                               const RenderConfig& cfg) {
  const int b = static_cast<int>(is.size());
  if (samples.size() != is.size() || js.size() != is.size())
    throw usage_error("build_render_graph: per-ray input sizes differ");
  if (b == 0) throw usage_error("build_render_graph: empty batch");
  const int n = static_cast<int>(samples[0].depths.size());
  const bool ipe = cfg.backbone == Backbone::kIpe || cfg.backbone == Backbone::kCamp;
  const bool barf = cfg.backbone == Backbone::kBarf;
  const EncodingConfig& enc = field.cfg->enc;

  const RayNodes rays = build_ray_graph(tape, pose, is, js);

  // Per-sample constants, rays stacked in blocks of n rows.
  Eigen::VectorXd t_strat(b * n), delta(b * n), mid(b * n), sig_t2(b * n);
  for (int r = 0; r < b; ++r) {
    if (samples[r].depths.size() != n)
      throw usage_error("build_render_graph: rays disagree on sample count");
    t_strat.segment(static_cast<Eigen::Index>(r) * n, n) = samples[r].depths;
    delta.segment(static_cast<Eigen::Index>(r) * n, n) = samples[r].deltas;
    mid.segment(static_cast<Eigen::Index>(r) * n, n) = samples[r].mids;
    sig_t2.segment(static_cast<Eigen::Index>(r) * n, n) = samples[r].sigma_t2;
  }
  // IPE queries interval means; the plain pipeline uses the stratified draws.
  const Eigen::VectorXd& t_query = ipe ? mid : t_strat;
  const ad::Var tq_c = tape.constant(t_query);

  const ad::Var origins_rep = tape.repeat_rows(rays.origins, n);
  const ad::Var dirs_rep = tape.repeat_rows(rays.directions, n);
  const ad::Var positions = tape.add(origins_rep, tape.mul_col(dirs_rep, tq_c));

  ad::Var x_enc;
  if (!ipe) {
    x_enc = positional_encode(tape, positions, 3, enc.levels_position);
    if (barf) x_enc = barf_gate(tape, x_enc, 3, enc.levels_position, cfg.barf_alpha_pos);
  } else {
    // Diagonal Gaussian footprint: variance along the ray from the sample
    // interval, lateral variance from the pixel footprint radius
    // r = 1/(xi f_x) per unit depth.
    const ad::Var fx = tape.slice_rows(pose.focal, 0, 1);         // 1x1
    const ad::Var radius = tape.reciprocal(tape.mul(fx, pose.zoom));
    const ad::Var rho = tape.mul_scalar(tape.constant(mid), radius);  // (B*n)x1
    const ad::Var sig_r2 = tape.scale(tape.mul(rho, rho), 0.25);
    const ad::Var d2 = tape.mul(dirs_rep, dirs_rep);              // (B*n)x3
    const ad::Var along = tape.mul_col(d2, tape.constant(sig_t2));
    const ad::Var ortho = tape.mul_col(tape.offset(tape.scale(d2, -1.0), 1.0), sig_r2);
    const ad::Var sigma2 = tape.add(along, ortho);
    const ad::Var bands = integrated_encode(tape, positions, sigma2, 3, enc.levels_position);
    const ad::Var parts[] = {positions, bands};  // raw slots stay unattenuated
    x_enc = tape.hcat(parts);
  }

  ad::Var d_enc = positional_encode(tape, dirs_rep, 3, enc.levels_direction);
  if (barf) d_enc = barf_gate(tape, d_enc, 3, enc.levels_direction, cfg.barf_alpha_dir);

  const FieldOutput f = field_forward(tape, field, x_enc, d_enc);

  const CompositeNodes comp = composite_graph(tape, f.rgb, f.sigma, delta, t_query, n);

  RenderGraph out;
  out.n_rays = b;
  out.wsum = comp.wsum;
  out.depth = comp.depth;
  ad::Var rgb = comp.rgb;
  if (!cfg.background.isZero()) {
    Eigen::MatrixXd bg(b, 3);
    bg.rowwise() = cfg.background.transpose();
    const ad::Var residual = tape.offset(tape.scale(out.wsum, -1.0), 1.0);
    rgb = tape.add(rgb, tape.mul_col(tape.constant(std::move(bg)), residual));
  }
  out.rgb = rgb;
  return out;
}

void render_image(const FieldEval& eval, const CameraPose& pose, int height, int width,
                  const RenderConfig& cfg, const Rng& rng, Image* image, DepthMap* depth) {
  validate(pose);
  if (image) *image = Image(width, height);
  if (depth) *depth = DepthMap(width, height);
  const int n = cfg.n_samples;

  const int chunk = std::max(1, cfg.chunk);
  std::vector<double> is, js;
  std::vector<uint64_t> ids;
  auto flush = [&]() {
    if (is.empty()) return;
    const int b = static_cast<int>(is.size());
    const auto samples = samples_for_pixels(cfg, rng, ids);
    Eigen::MatrixX3d origins, dirs;
    rays_for_pixels(pose, is, js, &origins, &dirs);

    Eigen::MatrixX3d positions(b * n, 3), dirs_rep(b * n, 3);
    for (int r = 0; r < b; ++r)
      for (int k = 0; k < n; ++k) {
        positions.row(static_cast<Eigen::Index>(r) * n + k) =
            origins.row(r) + samples[r].depths[k] * dirs.row(r);
        dirs_rep.row(static_cast<Eigen::Index>(r) * n + k) = dirs.row(r);
      }

    Eigen::MatrixX3d rgb_samples;
    Eigen::VectorXd sigma_samples;
    eval(positions, dirs_rep, &rgb_samples, &sigma_samples);

    for (int r = 0; r < b; ++r) {
      const CompositeResult res = composite(
          rgb_samples.middleRows(static_cast<Eigen::Index>(r) * n, n),
          sigma_samples.segment(static_cast<Eigen::Index>(r) * n, n), samples[r].deltas,
          samples[r].depths);
      const int x = static_cast<int>(ids[r]) % width;
      const int y = static_cast<int>(ids[r]) / width;
      const double residual = 1.0 - res.weights.sum();
      const Eigen::Vector3d c = res.rgb + residual * cfg.background;
      if (image)
        for (int ch = 0; ch < 3; ++ch) image->at(y, x, ch) = c[ch];
      if (depth) depth->at(y, x) = res.depth;
    }
    is.clear();
    js.clear();
    ids.clear();
  };

  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      is.push_back(x);
      js.push_back(y);
      ids.push_back(static_cast<uint64_t>(y) * width + x);
      if (static_cast<int>(is.size()) >= chunk) flush();
    }
  flush();
}

void render_image(const RadianceFieldParams& params, const CameraPose& pose, int height,
                  int width, const RenderConfig& cfg, const Rng& rng, Image* image,
                  DepthMap* depth) {
  validate(pose);
  if (image) *image = Image(width, height);
  if (depth) *depth = DepthMap(width, height);

  const int chunk = std::max(1, cfg.chunk);
  std::vector<double> is, js;
  std::vector<uint64_t> ids;
  auto flush = [&]() {
    if (is.empty()) return;
    ad::Tape tape;
    const FieldNodes field = bind_field(tape, params, /*learnable=*/false);
    const PoseNodes pose_nodes = bind_pose(tape, pose, /*learnable=*/false);
    const auto samples = samples_for_pixels(cfg, rng, ids);
    const RenderGraph graph = build_render_graph(tape, field, pose_nodes, is, js, samples, cfg);
    const Eigen::MatrixXd& rgb = tape.value(graph.rgb);
    const Eigen::MatrixXd& d = tape.value(graph.depth);
    for (size_t r = 0; r < ids.size(); ++r) {
      const int x = static_cast<int>(ids[r]) % width;
      const int y = static_cast<int>(ids[r]) / width;
      if (image)
        for (int ch = 0; ch < 3; ++ch) image->at(y, x, ch) = rgb(static_cast<Eigen::Index>(r), ch);
      if (depth) depth->at(y, x) = d(static_cast<Eigen::Index>(r), 0);
    }
    is.clear();
    js.clear();
    ids.clear();
  };

  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      is.push_back(x);
      js.push_back(y);
      ids.push_back(static_cast<uint64_t>(y) * width + x);
      if (static_cast<int>(is.size()) >= chunk) flush();
    }
  flush();
}

void render_ray(const RadianceFieldParams& params, const CameraPose& pose, double i, double j,
                const RenderConfig& cfg, Rng rng, Eigen::Vector3d* rgb, double* depth) {
  ad::Tape tape;
  const FieldNodes field = bind_field(tape, params, /*learnable=*/false);
  const PoseNodes pose_nodes = bind_pose(tape, pose, /*learnable=*/false);
  std::vector<RaySampleBatch> samples{
      stratified_samples(cfg.near, cfg.far, cfg.n_samples, rng, cfg.jitter)};
  const RenderGraph graph =
      build_render_graph(tape, field, pose_nodes, {i}, {j}, samples, cfg);
  if (rgb) *rgb = tape.value(graph.rgb).row(0).transpose();
  if (depth) *depth = tape.value(graph.depth)(0, 0);
}

}  // namespace mzen
