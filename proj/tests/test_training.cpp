#include "doctest.h"
#include "mzen/datagen.hpp"
#include "mzen/schedule.hpp"
#include "mzen/training.hpp"
#include "oracles.hpp"

using namespace mzen;

namespace {

// Tiny two-view sphere dataset shared by the loss tests.
MultiZoomDataset tiny_dataset(int size = 16, const std::vector<double>& zooms = {1.0}) {
  const AnalyticScene scene = one_sphere_scene();
  CameraRingSpec ring;
  ring.count = 2;
  ring.distance = 2.5;
  ring.radius = 0.15;
  ring.look_z = 0.5;
  ring.jitter_rot = 0.0;
  ring.jitter_trans = 0.0;
  ring.focal_scale = 1.0;
  RenderConfig rc;
  rc.n_samples = 48;
  Rng rng(123);
  return generate_scene_dataset(scene, ring, zooms, size, size, rc, rng, "tiny");
}

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.field = FieldConfig::desk_scale();
  cfg.field.trunk_width = 16;
  cfg.field.feature_width = 8;
  cfg.field.color_hidden = 8;
  cfg.render.n_samples = 12;
  cfg.rays_per_step = 128;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("photometric loss basics and brute-force equality") {
  Image a(2, 2, 0.25), b(2, 2, 0.25);
  CHECK(photometric_loss(a, b, Reduction::kSum) == 0.0);

  for (double& v : b.data) v += 1.0;
  CHECK(photometric_loss(a, b, Reduction::kSum) == doctest::Approx(12.0));  // 4 px * 3 ch
  CHECK(photometric_loss(a, b, Reduction::kMean) == doctest::Approx(1.0));

  Rng rng(17);
  const Image x = oracle::random_image(9, 7, rng);
  const Image y = oracle::random_image(9, 7, rng);
  double brute = 0.0;
  for (int yy = 0; yy < 7; ++yy)
    for (int xx = 0; xx < 9; ++xx)
      for (int c = 0; c < 3; ++c) {
        const double d = x.at(yy, xx, c) - y.at(yy, xx, c);
        brute += d * d;
      }
  CHECK(std::fabs(photometric_loss(x, y, Reduction::kSum) - brute) < 1e-12);

  Image wrong(3, 3);
  CHECK_THROWS_AS(photometric_loss(x, wrong, Reduction::kSum), Error);
}

TEST_CASE("depth loss basics") {
  DepthMap d(2, 2, 1.0), prior(2, 2, 2.0);
  CHECK(depth_loss(d, prior, 0.5, 0.0) == doctest::Approx(0.0));  // exact affine fit
  CHECK(depth_loss(d, prior, 1.0, -0.5) == doctest::Approx(2.0));  // gap 0.5 on 4 pixels
  DepthMap wrong(3, 1);
  CHECK_THROWS_AS(depth_loss(d, wrong, 1.0, 0.0), Error);
}

TEST_CASE("phase legality") {
  MultiZoomDataset ds = tiny_dataset(16, {1.0, 2.0});
  const auto views = views_from_dataset(ds, false, 1.5);
  TrainConfig tc = tiny_config();
  SceneParams params = init_scene_params(ds, tc);
  LossConfig lc;
  lc.render.n_samples = 4;

  int zoom_idx = -1, wide_idx = -1;
  for (size_t i = 0; i < views.size(); ++i)
    (views[i].wide ? wide_idx : zoom_idx) = static_cast<int>(i);
  REQUIRE(zoom_idx >= 0);
  REQUIRE(wide_idx >= 0);

  RayBatchItem zoom_item;
  zoom_item.image_index = zoom_idx;
  zoom_item.xs = {1.0};
  zoom_item.ys = {1.0};
  RayBatchItem wide_item;
  wide_item.image_index = wide_idx;
  wide_item.xs = {1.0};
  wide_item.ys = {1.0};

  CHECK_THROWS_AS(phase_loss(PhaseKind::kA, {zoom_item}, params, views, lc, Rng(1)), Error);
  CHECK_THROWS_AS(phase_loss(PhaseKind::kB, {wide_item}, params, views, lc, Rng(1)), Error);
  CHECK_NOTHROW(phase_loss(PhaseKind::kA, {wide_item}, params, views, lc, Rng(1)));
  CHECK_NOTHROW(phase_loss(PhaseKind::kC, {zoom_item, wide_item}, params, views, lc, Rng(1)));
}

TEST_CASE("phase B freezes the field and focal") {
  MultiZoomDataset ds = tiny_dataset(16, {1.0, 2.0});
  const auto views = views_from_dataset(ds, false, 1.5);
  TrainConfig tc = tiny_config();
  SceneParams params = init_scene_params(ds, tc);
  LossConfig lc;
  lc.render.n_samples = 4;

  // Nudge the density head so the random field is not all-dead along the
  // probe rays.
  params.field.biases[4].setConstant(0.5);

  int zoom_idx = -1;
  for (size_t i = 0; i < views.size(); ++i)
    if (!views[i].wide) zoom_idx = static_cast<int>(i);

  RayBatchItem item;
  item.image_index = zoom_idx;
  Rng pix(6);
  for (int r = 0; r < 32; ++r) {
    item.xs.push_back(pix.uniform_int(16));
    item.ys.push_back(pix.uniform_int(16));
  }
  PhaseGraph g = phase_loss(PhaseKind::kB, {item}, params, views, lc, Rng(2));
  CHECK(g.field_weights.empty());     // frozen: bound as constants
  CHECK_FALSE(g.focal_learnable);
  REQUIRE(g.images.size() == 1);
  CHECK(g.images[0].pose_learnable);
  CHECK(g.images[0].zoom_learnable);
  g.tape.backward(g.loss);
  CHECK(g.tape.grad(g.images[0].rotation).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("phase C full-image loss equals summed photometric losses") {
  MultiZoomDataset ds = tiny_dataset(12, {1.0});
  const auto views = views_from_dataset(ds, false, 1.5);
  TrainConfig tc = tiny_config();
  SceneParams params = init_scene_params(ds, tc);

  LossConfig lc;
  lc.reduction = Reduction::kSum;
  lc.render.n_samples = 10;
  lc.render.jitter = false;  // render_image and phase_loss then sample identically

  std::vector<RayBatchItem> batch = {full_image_batch(0, 12, 12), full_image_batch(1, 12, 12)};
  PhaseGraph g = phase_loss(PhaseKind::kC, batch, params, views, lc, Rng(3));

  RenderConfig rc = lc.render;
  double expected = 0.0;
  for (int i = 0; i < 2; ++i) {
    const CameraPose cam = params.poses[i].camera(params.focal, params.principal);
    Image rendered;
    render_image(params.field, cam, 12, 12, rc, Rng(9), &rendered, nullptr);
    expected += photometric_loss(rendered, ds.images[i].image, Reduction::kSum);
  }
  CHECK(g.tape.value(g.loss)(0, 0) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("depth term gradients match finite differences") {
  MultiZoomDataset ds = tiny_dataset(12, {1.0});
  const auto views = views_from_dataset(ds, true, 1.5);
  TrainConfig tc = tiny_config();
  tc.depth_prior = true;
  SceneParams params = init_scene_params(ds, tc);
  params.poses[0].depth_a = 1.3;
  params.poses[0].depth_b = -0.2;

  LossConfig lc;
  lc.depth_enabled = true;
  lc.depth_weight = 1e-2;
  lc.render.n_samples = 8;

  GroupPolicy policy = policy_for_phase(PhaseKind::kC, true);
  RayBatchItem item;
  item.image_index = 0;
  Rng rng(4);
  for (int r = 0; r < 24; ++r) {
    item.xs.push_back(rng.uniform_int(12));
    item.ys.push_back(rng.uniform_int(12));
  }
  PhaseGraph g = build_loss_graph(policy, {item}, params, views, lc, Rng(5));
  g.tape.backward(g.loss);
  REQUIRE(g.images[0].affine_learnable);
  const std::vector<ad::Var> leaves = {g.images[0].depth_a, g.images[0].depth_b};
  std::vector<Eigen::MatrixXd> analytic;
  for (ad::Var leaf : leaves) analytic.push_back(g.tape.grad(leaf));
  for (size_t i = 0; i < leaves.size(); ++i) {
    const Eigen::MatrixXd fd = oracle::fd_gradient(g.tape, g.loss, leaves[i]);
    CHECK(oracle::grad_max_error(analytic[i], fd) <= 1.0);
  }
}

TEST_CASE("missing depth prior is a structured error") {
  MultiZoomDataset ds = tiny_dataset(12, {1.0});
  for (auto& img : ds.images) img.gt_depth.reset();
  const auto views = views_from_dataset(ds, true, 1.5);
  TrainConfig tc = tiny_config();
  SceneParams params = init_scene_params(ds, tc);
  LossConfig lc;
  lc.depth_enabled = true;
  lc.render.n_samples = 4;
  RayBatchItem item;
  item.image_index = 0;
  item.xs = {1.0};
  item.ys = {1.0};
  CHECK_THROWS_AS(build_loss_graph(policy_for_phase(PhaseKind::kC, true), {item}, params, views,
                                   lc, Rng(1)),
                  Error);
}

}  // TEST_SUITE
