#include <Eigen/Geometry>

#include "doctest.h"
#include "mzen/camera.hpp"
#include "oracles.hpp"

using namespace mzen;

TEST_SUITE("camera") {

TEST_CASE("rotation_from_axis_angle basics") {
  CHECK(rotation_from_axis_angle(Eigen::Vector3d::Zero())
            .isApprox(Eigen::Matrix3d::Identity(), 1e-15));

  const Eigen::Matrix3d half_turn = rotation_from_axis_angle(Eigen::Vector3d(0, 0, M_PI));
  Eigen::Matrix3d expected;
  expected << -1, 0, 0, 0, -1, 0, 0, 0, 1;
  CHECK((half_turn - expected).cwiseAbs().maxCoeff() < 1e-12);

  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
    v = 0.3 * v.normalized();
    const Eigen::Matrix3d r = rotation_from_axis_angle(v);
    CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-9));
    // Agrees with an independent implementation.
    const Eigen::Matrix3d ref = Eigen::AngleAxisd(v.norm(), v.normalized()).toRotationMatrix();
    CHECK((r - ref).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("axis angle round trip") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
    v *= rng.uniform(0.0, 0.9);
    const Eigen::Vector3d back = axis_angle_from_rotation(rotation_from_axis_angle(v));
    CHECK((back - v).norm() < 1e-9);
  }
}

TEST_CASE("effective_intrinsics") {
  CameraPose pose;
  pose.focal = Eigen::Vector2d(100, 100);
  pose.principal = Eigen::Vector2d(50, 50);
  pose.zoom = 1.0;
  Eigen::Matrix3d k = effective_intrinsics(pose);
  CHECK(k(0, 0) == 100.0);
  CHECK(k(1, 1) == 100.0);
  CHECK(k(2, 2) == 1.0);
  CHECK(k(0, 2) == 50.0);
  CHECK(k(1, 2) == 50.0);
  CHECK(k(0, 1) == 0.0);

  pose.zoom = 4.0;
  k = effective_intrinsics(pose);
  CHECK(k(0, 0) == 400.0);
  CHECK(k(1, 1) == 400.0);

  pose.zoom = 2.5;
  pose.focal = Eigen::Vector2d(80, 120);
  k = effective_intrinsics(pose);
  CHECK(k(0, 0) == doctest::Approx(200.0));
  CHECK(k(1, 1) == doctest::Approx(300.0));
}

TEST_CASE("pixel_ray basics") {
  CameraPose pose;
  pose.focal = Eigen::Vector2d(100, 100);
  pose.principal = Eigen::Vector2d(50, 50);

  const Ray center = pixel_ray(pose, 50, 50);
  CHECK(center.origin.norm() == 0.0);
  CHECK((center.direction - Eigen::Vector3d(0, 0, 1)).norm() < 1e-15);

  // Doubling the zoom halves the off-axis slope of the ray.
  pose.zoom = 1.0;
  const Ray wide = pixel_ray(pose, 70, 50);
  pose.zoom = 2.0;
  const Ray tele = pixel_ray(pose, 70, 50);
  CHECK(tele.direction.x() / tele.direction.z() ==
        doctest::Approx(0.5 * wide.direction.x() / wide.direction.z()).epsilon(1e-12));
}

TEST_CASE("pixel_ray under a half-turn matches the matrix-vector oracle") {
  CameraPose pose;
  pose.rotation = Eigen::Vector3d(0, 0, M_PI);
  pose.focal = Eigen::Vector2d(100, 100);
  pose.principal = Eigen::Vector2d(50, 50);
  const Ray ray = pixel_ray(pose, 60, 50);

  // Independent oracle: R * d_cam with Eigen's AngleAxis.
  const Eigen::Matrix3d r = Eigen::AngleAxisd(M_PI, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const Eigen::Vector3d expected = (r * Eigen::Vector3d(0.1, 0.0, 1.0)).normalized();
  CHECK((ray.direction - expected).norm() < 1e-12);
  CHECK(ray.direction.x() == doctest::Approx(-0.1 / std::sqrt(1.01)));
}

TEST_CASE("ray directions are unit length") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    CameraPose pose;
    pose.rotation = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()) * 0.5;
    pose.translation = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    pose.focal = Eigen::Vector2d(rng.uniform(40, 200), rng.uniform(40, 200));
    pose.principal = Eigen::Vector2d(32, 32);
    pose.zoom = rng.uniform(1.0, 8.0);
    const Ray ray = pixel_ray(pose, rng.uniform(0, 64), rng.uniform(0, 64));
    CHECK(std::fabs(ray.direction.norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("zoom-crop consistency") {
  // With identical (R, t, f, c), the zoomed camera sees the wide camera's
  // pixel p at the magnified location c + xi (p - c): those two pixels share
  // a ray. This is the geometric fact pose priming relies on.
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    CameraPose pose;
    pose.rotation = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()) * 0.4;
    pose.translation = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    pose.focal = Eigen::Vector2d(120, 90);
    pose.principal = Eigen::Vector2d(31.5, 31.5);
    const double xi = rng.uniform(1.0, 6.0);
    const double px = rng.uniform(20, 44);
    const double py = rng.uniform(20, 44);

    pose.zoom = 1.0;
    const Ray wide = pixel_ray(pose, px, py);
    pose.zoom = xi;
    const Ray zoomed = pixel_ray(pose, pose.principal.x() + xi * (px - pose.principal.x()),
                                 pose.principal.y() + xi * (py - pose.principal.y()));
    CHECK((zoomed.direction - wide.direction).norm() < 1e-7);
    CHECK((zoomed.origin - wide.origin).norm() == 0.0);
  }
}

TEST_CASE("ray graph matches pixel_ray and its gradients match finite differences") {
  Rng rng(17);
  CameraPose pose;
  pose.rotation = Eigen::Vector3d(0.2, -0.1, 0.3);
  pose.translation = Eigen::Vector3d(0.5, -0.25, -2.0);
  pose.focal = Eigen::Vector2d(90, 110);
  pose.principal = Eigen::Vector2d(31.5, 31.5);
  pose.zoom = 2.0;

  ad::Tape tape;
  const PoseNodes nodes = bind_pose(tape, pose, /*learnable=*/true);
  const std::vector<double> is = {3.0, 10.5, 40.0, 63.0};
  const std::vector<double> js = {60.0, 31.5, 7.25, 0.0};
  const RayNodes rays = build_ray_graph(tape, nodes, is, js);

  for (size_t k = 0; k < is.size(); ++k) {
    const Ray expected = pixel_ray(pose, is[k], js[k]);
    CHECK((tape.value(rays.directions).row(k).transpose() - expected.direction).norm() < 1e-13);
    CHECK((tape.value(rays.origins).row(k).transpose() - expected.origin).norm() < 1e-13);
  }

  // Weighted scalar of both outputs so every pose field matters.
  Eigen::MatrixXd wd(4, 3), wo(4, 3);
  for (Eigen::Index i = 0; i < wd.size(); ++i) {
    wd.data()[i] = rng.uniform(0.25, 1.0);
    wo.data()[i] = rng.uniform(0.25, 1.0);
  }
  const ad::Var loss =
      tape.add(tape.sum_all(tape.mul(rays.directions, tape.constant(wd))),
               tape.sum_all(tape.mul(rays.origins, tape.constant(wo))));
  tape.backward(loss);
  const std::vector<ad::Var> leaves = {nodes.rotation, nodes.translation, nodes.focal,
                                       nodes.zoom};
  std::vector<Eigen::MatrixXd> analytic;
  for (ad::Var leaf : leaves) analytic.push_back(tape.grad(leaf));
  for (size_t i = 0; i < leaves.size(); ++i) {
    const Eigen::MatrixXd fd = oracle::fd_gradient(tape, loss, leaves[i]);
    CHECK(oracle::grad_max_error(analytic[i], fd) <= 1.0);
  }
}

TEST_CASE("validate rejects bad poses") {
  CameraPose pose;
  pose.zoom = 0.5;
  CHECK_THROWS_AS(validate(pose), Error);
  pose.zoom = 1.0;
  pose.focal = Eigen::Vector2d(0.0, 100.0);
  CHECK_THROWS_AS(validate(pose), Error);
  pose.focal = Eigen::Vector2d(100.0, 100.0);
  CHECK_NOTHROW(validate(pose));
}

}  // TEST_SUITE
