#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "mzen/common.hpp"
#include "mzen/image.hpp"

namespace mzen {

constexpr double kPsnrSentinel = 99.0;  // returned when MSE is exactly zero

struct MetricScores {
  double psnr = 0.0;
  double ssim = 0.0;
  double gss = 0.0;
  double lss = 0.0;
};

// -10 log10(MSE) for [0,1] images (peak 1); identical inputs return the
// 99 dB sentinel.
double psnr(const Image& ref, const Image& test);

// Mean local SSIM with the standard constants (K1 = 0.01, K2 = 0.03) and an
// 11x11 Gaussian window (sigma 1.5), evaluated per channel over valid window
// positions and averaged.
double ssim(const Image& ref, const Image& test);

// Unweighted RGB mean.
Eigen::MatrixXd to_gray(const Image& img);

// Separable 5x5 Gaussian with zero padding; output has the input size and
// the kernel is normalized to unit sum.
Eigen::MatrixXd gaussian_smooth(const Eigen::MatrixXd& img, double sigma = 1.0);

// Three-point second-difference gradient magnitude on the interior;
// the one-pixel margin is set to zero.
Eigen::MatrixXd gradient_magnitude(const Eigen::MatrixXd& smoothed);

// Four-neighbor Laplacian divided by (1 + I_s), interior only.
Eigen::MatrixXd laplacian_normalized(const Eigen::MatrixXd& smoothed);

// Bounded [0,1] similarity of Gaussian-smoothed gradient fields:
// 1 - sum|G - G'| / sum(|G| + |G'|), with 0/0 -> 1.
double gss(const Image& ref, const Image& test);

// Same functional form over normalized Laplacian fields.
double lss(const Image& ref, const Image& test);

MetricScores score_pair(const Image& ref, const Image& test);

}  // namespace mzen
