#include "mzen/optimize.hpp"

#include <cmath>

#include "mzen/tape.hpp"

namespace mzen {

void adam_step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad, AdamState& state, double lr,
               const AdamConfig& cfg, const std::string& group) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols())
    throw usage_error("adam_step: parameter/gradient shape mismatch for '" + group + "'");
  if (!grad.allFinite())
    throw numeric_error("adam_step: non-finite gradient in parameter group '" + group + "'");
  if (!state.initialized()) {
    state.m = Eigen::MatrixXd::Zero(param.rows(), param.cols());
    state.v = Eigen::MatrixXd::Zero(param.rows(), param.cols());
    state.t = 0;
  }
  state.t += 1;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  const Eigen::ArrayXXd m_hat = state.m.array() / bc1;
  const Eigen::ArrayXXd v_hat = state.v.array() / bc2;
  param.array() -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
}

double step_lr(double lr0, long step, double gamma, long period) {
  if (period < 1) throw usage_error("step_lr: period must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw usage_error("step_lr: gamma must be in (0, 1]");
  return lr0 * std::pow(gamma, static_cast<double>(step / period));
}

Eigen::MatrixXd inverse_sqrt_psd(const Eigen::MatrixXd& sym, double eig_floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success)
    throw numeric_error("inverse_sqrt_psd: eigendecomposition failed");
  Eigen::VectorXd inv_sqrt = eig.eigenvalues();
  for (Eigen::Index i = 0; i < inv_sqrt.size(); ++i)
    inv_sqrt[i] = 1.0 / std::sqrt(std::max(inv_sqrt[i], eig_floor));
  return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
}

PosePreconditioner build_preconditioner(const CameraPose& pose, const Eigen::AlignedBox3d& bounds,
                                        Rng& rng, int n_r, double lambda, double mu) {
  if (n_r < 1) throw usage_error("build_preconditioner: n_r must be >= 1");
  if (lambda < 0.0 || mu < 0.0)
    throw usage_error("build_preconditioner: damping must be non-negative");

  // Jacobian of the pixel projection w.r.t. the (rotation, translation)
  // 6-vector, computed with the autodiff engine point by point.
  Eigen::MatrixXd j(2 * n_r, 6);
  const Eigen::Matrix3d r = pose.rotation_matrix();
  int row = 0;
  int guard = 0;
  for (int s = 0; s < n_r; ++s) {
    Eigen::Vector3d point;
    for (;;) {
      point = Eigen::Vector3d(rng.uniform(bounds.min().x(), bounds.max().x()),
                              rng.uniform(bounds.min().y(), bounds.max().y()),
                              rng.uniform(bounds.min().z(), bounds.max().z()));
      const Eigen::Vector3d cam = r.transpose() * (point - pose.translation);
      if (cam.z() > 1e-3) break;
      if (++guard > 100 * n_r)
        throw numeric_error("build_preconditioner: scene box is behind the camera");
    }

    ad::Tape tape;
    const ad::Var rot = tape.leaf(Eigen::MatrixXd(pose.rotation), "rotation");
    const ad::Var trans = tape.leaf(Eigen::MatrixXd(pose.translation), "translation");
    const ad::Var rmat = tape.axis_angle_to_matrix(rot);
    const ad::Var cam =
        tape.matmul(tape.transpose(rmat),
                    tape.sub(tape.constant(Eigen::MatrixXd(point)), trans));  // 3x1
    const ad::Var inv_z = tape.reciprocal(tape.slice_rows(cam, 2, 1));
    const double fx = pose.zoom * pose.focal.x();
    const double fy = pose.zoom * pose.focal.y();
    const ad::Var u = tape.scale(tape.mul(tape.slice_rows(cam, 0, 1), inv_z), fx);
    const ad::Var v = tape.scale(tape.mul(tape.slice_rows(cam, 1, 1), inv_z), fy);

    for (int axis = 0; axis < 2; ++axis) {
      tape.backward(axis == 0 ? u : v);
      const Eigen::MatrixXd gr = tape.grad(rot);
      const Eigen::MatrixXd gt = tape.grad(trans);
      if (!gr.allFinite() || !gt.allFinite())
        throw numeric_error("build_preconditioner: non-finite projection Jacobian");
      j.row(row) << gr(0, 0), gr(1, 0), gr(2, 0), gt(0, 0), gt(1, 0), gt(2, 0);
      ++row;
    }
  }

  const Eigen::Matrix<double, 6, 6> jtj = j.transpose() * j;
  Eigen::Matrix<double, 6, 6> sigma =
      jtj / static_cast<double>(n_r) + lambda * Eigen::Matrix<double, 6, 6>(
                                                    jtj.diagonal().asDiagonal()) +
      mu * Eigen::Matrix<double, 6, 6>::Identity();

  PosePreconditioner out;
  out.p = inverse_sqrt_psd(sigma);
  return out;
}

Eigen::Matrix<double, 6, 1> preconditioned_pose_step(const Eigen::Matrix<double, 6, 1>& pose6,
                                                     const Eigen::Matrix<double, 6, 1>& grad6,
                                                     const PosePreconditioner& pc, double lr) {
  return pose6 - lr * (pc.p * grad6);
}

}  // namespace mzen
