#pragma once

#include <Eigen/Dense>
#include <string>

#include "mzen/camera.hpp"
#include "mzen/common.hpp"

namespace mzen {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;
  long t = 0;

  bool initialized() const { return m.size() > 0; }
};

// Bias-corrected Adam update, in place. Throws a numeric error naming the
// parameter group when the gradient contains NaN/Inf.
void adam_step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad, AdamState& state, double lr,
               const AdamConfig& cfg = {}, const std::string& group = "param");

// StepLR: lr0 * gamma^floor(step / period).
double step_lr(double lr0, long step, double gamma, long period);

// Per-camera ZCA whitening of the 6-dof pose gradient.
// Sigma = (J^T J)/n_r + lambda diag(J^T J) + mu I over the Jacobian of the
// pixel projection of n_r random scene points; P = Sigma^{-1/2}.
struct PosePreconditioner {
  Eigen::Matrix<double, 6, 6> p = Eigen::Matrix<double, 6, 6>::Identity();
};

PosePreconditioner build_preconditioner(const CameraPose& pose, const Eigen::AlignedBox3d& bounds,
                                        Rng& rng, int n_r, double lambda, double mu);

// p_new = p - lr * P * grad, applied to the stacked (rotation, translation)
// 6-vector. Zoom and focal stay on their Adam route.
Eigen::Matrix<double, 6, 1> preconditioned_pose_step(const Eigen::Matrix<double, 6, 1>& pose6,
                                                     const Eigen::Matrix<double, 6, 1>& grad6,
                                                     const PosePreconditioner& pc, double lr);

// Symmetric inverse square root with an eigenvalue floor; exposed for tests.
Eigen::MatrixXd inverse_sqrt_psd(const Eigen::MatrixXd& sym, double eig_floor = 1e-12);

}  // namespace mzen
