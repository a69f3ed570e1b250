#include "doctest.h"
#include "mzen/optimize.hpp"
#include "oracles.hpp"

using namespace mzen;

TEST_SUITE("optimize") {

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(2, 2, 3.0);
  AdamState st;
  adam_step(p, Eigen::MatrixXd::Zero(2, 2), st, 0.1);
  CHECK((p.array() == 3.0).all());
}

TEST_CASE("adam: three steps match a hand-rolled oracle") {
  // Independent re-implementation of the bias-corrected update.
  double m = 0, v = 0, theta = 1.0;
  const double g[3] = {0.4, -0.3, 0.25};
  const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int t = 1; t <= 3; ++t) {
    m = b1 * m + (1 - b1) * g[t - 1];
    v = b2 * v + (1 - b2) * g[t - 1] * g[t - 1];
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    theta -= lr * mh / (std::sqrt(vh) + eps);
  }

  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(1, 1, 1.0);
  AdamState st;
  for (int t = 0; t < 3; ++t) {
    Eigen::MatrixXd grad = Eigen::MatrixXd::Constant(1, 1, g[t]);
    adam_step(p, grad, st, lr);
  }
  CHECK(std::fabs(p(0, 0) - theta) < 1e-12);
}

TEST_CASE("adam: constant gradient drives per-step displacement toward lr") {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(1, 1);
  AdamState st;
  const Eigen::MatrixXd g = Eigen::MatrixXd::Constant(1, 1, 0.37);
  double prev = 0.0, step = 0.0;
  for (int t = 0; t < 500; ++t) {
    adam_step(p, g, st, 0.01);
    step = std::fabs(p(0, 0) - prev);
    prev = p(0, 0);
  }
  CHECK(step == doctest::Approx(0.01).epsilon(0.01));
}

TEST_CASE("adam: asymptotic displacement is invariant to gradient scale") {
  auto last_step = [](double scale) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(1, 1);
    AdamState st;
    const Eigen::MatrixXd g = Eigen::MatrixXd::Constant(1, 1, scale);
    double prev = 0, step = 0;
    for (int t = 0; t < 400; ++t) {
      adam_step(p, g, st, 0.02);
      step = std::fabs(p(0, 0) - prev);
      prev = p(0, 0);
    }
    return step;
  };
  CHECK(last_step(1e-3) == doctest::Approx(last_step(1e3)).epsilon(1e-6));
}

TEST_CASE("adam: NaN gradients raise a numeric error naming the group") {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(1, 1);
  AdamState st;
  Eigen::MatrixXd g = Eigen::MatrixXd::Constant(1, 1, std::nan(""));
  try {
    adam_step(p, g, st, 0.1, {}, "pose3.rotation");
    FAIL("expected a numeric error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNumeric);
    CHECK(std::string(e.what()).find("pose3.rotation") != std::string::npos);
  }
}

TEST_CASE("step_lr schedule") {
  CHECK(step_lr(0.1, 0, 0.5, 100) == doctest::Approx(0.1));
  CHECK(step_lr(0.1, 99, 0.5, 100) == doctest::Approx(0.1));
  CHECK(step_lr(0.1, 100, 0.5, 100) == doctest::Approx(0.05));
  CHECK(step_lr(0.1, 300, 0.1, 100) == doctest::Approx(0.1 * 1e-3));
  CHECK_THROWS_AS(step_lr(0.1, 0, 0.5, 0), Error);
  CHECK_THROWS_AS(step_lr(0.1, 0, 1.5, 10), Error);
}

TEST_CASE("inverse square root of a PSD matrix") {
  CHECK(inverse_sqrt_psd(Eigen::MatrixXd::Identity(6, 6))
            .isApprox(Eigen::MatrixXd::Identity(6, 6), 1e-12));

  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = 4.0;
  d(1, 1) = 9.0;
  const Eigen::MatrixXd p = inverse_sqrt_psd(d);
  CHECK(p(0, 0) == doctest::Approx(0.5));
  CHECK(p(1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(std::fabs(p(0, 1)) < 1e-15);
}

TEST_CASE("pose preconditioner: P Sigma P = I against a finite-difference Jacobian") {
  CameraPose pose;
  pose.rotation = Eigen::Vector3d(0.1, -0.2, 0.05);
  pose.translation = Eigen::Vector3d(0.2, 0.1, -3.0);
  pose.focal = Eigen::Vector2d(80, 80);
  pose.principal = Eigen::Vector2d(32, 32);
  pose.zoom = 1.5;
  const Eigen::AlignedBox3d bounds(Eigen::Vector3d(-1, -1, -1), Eigen::Vector3d(1, 1, 1));
  const int n_r = 64;

  Rng rng(21);
  const PosePreconditioner pc = build_preconditioner(pose, bounds, rng, n_r, 0.0, 0.0);

  // Independent Sigma: finite-difference the projection over the same points.
  Rng rng2(21);  // same stream as the constructor used for sampling
  auto project = [&](const Eigen::Matrix<double, 6, 1>& p6, const Eigen::Vector3d& point) {
    CameraPose q = pose;
    q.rotation = p6.head<3>();
    q.translation = p6.tail<3>();
    const Eigen::Vector3d cam = q.rotation_matrix().transpose() * (point - q.translation);
    return Eigen::Vector2d(q.zoom * q.focal.x() * cam.x() / cam.z(),
                           q.zoom * q.focal.y() * cam.y() / cam.z());
  };
  Eigen::Matrix<double, 6, 1> base;
  base << pose.rotation, pose.translation;
  Eigen::MatrixXd j(2 * n_r, 6);
  for (int s = 0; s < n_r; ++s) {
    Eigen::Vector3d point;
    for (;;) {
      point = Eigen::Vector3d(rng2.uniform(-1, 1), rng2.uniform(-1, 1), rng2.uniform(-1, 1));
      const Eigen::Vector3d cam =
          pose.rotation_matrix().transpose() * (point - pose.translation);
      if (cam.z() > 1e-3) break;
    }
    for (int k = 0; k < 6; ++k) {
      Eigen::Matrix<double, 6, 1> up = base, down = base;
      up[k] += 1e-6;
      down[k] -= 1e-6;
      const Eigen::Vector2d d = (project(up, point) - project(down, point)) / 2e-6;
      j(2 * s, k) = d.x();
      j(2 * s + 1, k) = d.y();
    }
  }
  const Eigen::MatrixXd sigma_fd = (j.transpose() * j) / n_r;
  const Eigen::MatrixXd should_be_i = pc.p * sigma_fd * pc.p;
  CHECK((should_be_i - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("pose preconditioner: symmetry and positive definiteness with damping") {
  CameraPose pose;
  pose.translation = Eigen::Vector3d(0, 0, -3.0);
  pose.focal = Eigen::Vector2d(64, 64);
  pose.principal = Eigen::Vector2d(32, 32);
  const Eigen::AlignedBox3d bounds(Eigen::Vector3d(-1, -1, -1), Eigen::Vector3d(1, 1, 1));
  Rng rng(33);
  const PosePreconditioner pc = build_preconditioner(pose, bounds, rng, 128, 1e-3, 1e-4);
  CHECK((pc.p - pc.p.transpose()).cwiseAbs().maxCoeff() < 1e-9);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pc.p);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("preconditioned pose step") {
  Eigen::Matrix<double, 6, 1> pose6 = Eigen::Matrix<double, 6, 1>::Ones();
  Eigen::Matrix<double, 6, 1> grad6 = Eigen::Matrix<double, 6, 1>::Ones();

  PosePreconditioner identity;
  const auto plain = preconditioned_pose_step(pose6, grad6, identity, 0.1);
  CHECK((plain - (pose6 - 0.1 * grad6)).cwiseAbs().maxCoeff() < 1e-15);

  const auto frozen = preconditioned_pose_step(pose6, Eigen::Matrix<double, 6, 1>::Zero(),
                                               identity, 0.1);
  CHECK((frozen - pose6).cwiseAbs().maxCoeff() == 0.0);

  PosePreconditioner doubled;
  doubled.p = 2.0 * Eigen::Matrix<double, 6, 6>::Identity();
  const auto stepped = preconditioned_pose_step(pose6, grad6, doubled, 0.1);
  CHECK((stepped - (pose6.array() - 0.2).matrix()).cwiseAbs().maxCoeff() < 1e-15);
}

}  // TEST_SUITE
