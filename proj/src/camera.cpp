#include "mzen/camera.hpp"

#include <cmath>

namespace mzen {

Eigen::Matrix3d CameraPose::rotation_matrix() const { return rotation_from_axis_angle(rotation); }

Eigen::Matrix3d rotation_from_axis_angle(const Eigen::Vector3d& v) { return ad::rodrigues(v); }

Eigen::Vector3d axis_angle_from_rotation(const Eigen::Matrix3d& r) {
  Eigen::AngleAxisd aa(r);
  double angle = aa.angle();
  Eigen::Vector3d axis = aa.axis();
  // Keep the representative in (-pi, pi].
  if (angle > M_PI) {
    angle = 2.0 * M_PI - angle;
    axis = -axis;
  }
  return angle * axis;
}

Eigen::Matrix3d effective_intrinsics(const CameraPose& pose) {
  Eigen::Matrix3d k = Eigen::Matrix3d::Zero();
  k(0, 0) = pose.zoom * pose.focal.x();
  k(1, 1) = pose.zoom * pose.focal.y();
  k(0, 2) = pose.principal.x();
  k(1, 2) = pose.principal.y();
  k(2, 2) = 1.0;
  return k;
}

void validate(const CameraPose& pose) {
  if (!(pose.zoom >= kZoomMin))
    throw data_error("camera: zoom must be >= 1, got " + std::to_string(pose.zoom));
  if (!(pose.focal.x() > 0.0) || !(pose.focal.y() > 0.0))
    throw data_error("camera: focal components must be strictly positive");
  if (!pose.rotation.allFinite() || !pose.translation.allFinite())
    throw data_error("camera: extrinsics contain non-finite values");
}

Ray pixel_ray(const CameraPose& pose, double i, double j) {
  const Eigen::Vector3d d_cam((i - pose.principal.x()) / (pose.zoom * pose.focal.x()),
                              (j - pose.principal.y()) / (pose.zoom * pose.focal.y()), 1.0);
  const Eigen::Vector3d d_world = pose.rotation_matrix() * d_cam;
  return Ray{pose.translation, d_world.normalized()};
}

void rays_for_pixels(const CameraPose& pose, const std::vector<double>& is,
                     const std::vector<double>& js, Eigen::MatrixX3d* origins,
                     Eigen::MatrixX3d* directions) {
  const Eigen::Matrix3d r = pose.rotation_matrix();
  const auto n = static_cast<Eigen::Index>(is.size());
  origins->resize(n, 3);
  directions->resize(n, 3);
  const double inv_fx = 1.0 / (pose.zoom * pose.focal.x());
  const double inv_fy = 1.0 / (pose.zoom * pose.focal.y());
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Vector3d d_cam((is[k] - pose.principal.x()) * inv_fx,
                                (js[k] - pose.principal.y()) * inv_fy, 1.0);
    directions->row(k) = (r * d_cam).normalized();
    origins->row(k) = pose.translation;
  }
}

PoseNodes bind_pose(ad::Tape& tape, const CameraPose& pose, bool learnable,
                    const std::string& prefix) {
  auto put = [&](Eigen::MatrixXd m, const char* nm) {
    return learnable ? tape.leaf(std::move(m), prefix + nm) : tape.constant(std::move(m));
  };
  PoseNodes out;
  out.rotation = put(pose.rotation, "rotation");
  out.translation = put(pose.translation, "translation");
  out.focal = put(pose.focal, "focal");
  Eigen::MatrixXd z(1, 1);
  z(0, 0) = pose.zoom;
  out.zoom = put(z, "zoom");
  out.principal = pose.principal;
  return out;
}

RayNodes build_ray_graph(ad::Tape& tape, const PoseNodes& pose, const std::vector<double>& is,
                         const std::vector<double>& js) {
  if (is.size() != js.size()) throw usage_error("build_ray_graph: pixel list size mismatch");
  const auto n = static_cast<Eigen::Index>(is.size());

  // Constant pixel grid, principal point already subtracted.
  Eigen::MatrixXd pix(n, 3);
  for (Eigen::Index k = 0; k < n; ++k) {
    pix(k, 0) = is[k] - pose.principal.x();
    pix(k, 1) = js[k] - pose.principal.y();
    pix(k, 2) = 1.0;
  }
  const ad::Var pix_c = tape.constant(std::move(pix));

  // d_cam = ((i - c_x)/(xi f_x), (j - c_y)/(xi f_y), 1)
  const ad::Var fxz = tape.mul_scalar(pose.focal, pose.zoom);             // 2x1
  const ad::Var inv_f = tape.transpose(tape.reciprocal(fxz));             // 1x2
  const ad::Var one = tape.constant(Eigen::MatrixXd::Ones(1, 1));
  const ad::Var parts[] = {inv_f, one};
  const ad::Var scale_row = tape.hcat(parts);                             // 1x3
  const ad::Var d_cam = tape.mul_row(pix_c, scale_row);                   // Bx3

  const ad::Var rot = tape.axis_angle_to_matrix(pose.rotation);
  const ad::Var d_world = tape.matmul(d_cam, tape.transpose(rot));        // rows = R * d_cam

  const ad::Var norm2 = tape.row_sum(tape.mul(d_world, d_world));
  const ad::Var inv_norm = tape.reciprocal(tape.sqrt(norm2));
  const ad::Var dirs = tape.mul_col(d_world, inv_norm);

  const ad::Var zeros = tape.constant(Eigen::MatrixXd::Zero(n, 3));
  const ad::Var origins = tape.add_row(zeros, tape.transpose(pose.translation));

  return RayNodes{origins, dirs};
}

}  // namespace mzen
