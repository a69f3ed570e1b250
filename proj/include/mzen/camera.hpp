#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mzen/common.hpp"
#include "mzen/tape.hpp"

namespace mzen {

// Zoom-aware pinhole camera. Extrinsics are camera-to-world: a camera-space
// direction d maps to rotation * d, and the optical center sits at
// `translation`. The zoom scalar multiplies the shared focal length.
struct CameraPose {
  Eigen::Vector3d rotation = Eigen::Vector3d::Zero();     // axis-angle, so(3)
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();  // world units
  Eigen::Vector2d focal = Eigen::Vector2d(100.0, 100.0);  // (f_x, f_y), pixels
  Eigen::Vector2d principal = Eigen::Vector2d(50.0, 50.0);
  double zoom = 1.0;

  Eigen::Matrix3d rotation_matrix() const;
};

struct Ray {
  Eigen::Vector3d origin;
  Eigen::Vector3d direction;  // unit length
};

constexpr double kZoomMin = 1.0;
constexpr double kZoomMax = 64.0;

// Rodrigues exponential map; v = 0 is handled by a Taylor branch.
Eigen::Matrix3d rotation_from_axis_angle(const Eigen::Vector3d& v);

// Log map, the inverse of the above. Used by the scene generator to express
// look-at rotations in the optimizer's coordinates.
Eigen::Vector3d axis_angle_from_rotation(const Eigen::Matrix3d& r);

// K_eff = diag(zoom * f_x, zoom * f_y, 1) with the principal point in the
// third column.
Eigen::Matrix3d effective_intrinsics(const CameraPose& pose);

// Throws if the pose violates its invariants (zoom >= 1, positive focal,
// rotation parameterization finite).
void validate(const CameraPose& pose);

// Ray through pixel (i, j); i is the column and j the row, both may be
// fractional. Pixel centers sit at integer coordinates.
Ray pixel_ray(const CameraPose& pose, double i, double j);

// Bulk version; one ray per entry of (is, js), same convention.
void rays_for_pixels(const CameraPose& pose, const std::vector<double>& is,
                     const std::vector<double>& js, Eigen::MatrixX3d* origins,
                     Eigen::MatrixX3d* directions);

// Graph-side camera: pose components as tape nodes so gradients flow into
// rotation, translation, focal, and zoom.
struct PoseNodes {
  ad::Var rotation;     // 3x1
  ad::Var translation;  // 3x1
  ad::Var focal;        // 2x1
  ad::Var zoom;         // 1x1
  Eigen::Vector2d principal = Eigen::Vector2d::Zero();
};

struct RayNodes {
  ad::Var origins;     // Bx3
  ad::Var directions;  // Bx3, unit rows
};

PoseNodes bind_pose(ad::Tape& tape, const CameraPose& pose, bool learnable,
                    const std::string& name_prefix = {});

RayNodes build_ray_graph(ad::Tape& tape, const PoseNodes& pose, const std::vector<double>& is,
                         const std::vector<double>& js);

}  // namespace mzen
