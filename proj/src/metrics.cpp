#include "mzen/metrics.hpp"

#include <cmath>

namespace mzen {

namespace {

void require_same_size(const char* what, const Image& a, const Image& b) {
  if (!a.same_size(b))
    throw data_error(std::string(what) + ": image dimensions differ (" + std::to_string(a.width) +
                     "x" + std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                     std::to_string(b.height) + ")");
}

Eigen::VectorXd gaussian_kernel(int radius, double sigma) {
  Eigen::VectorXd k(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  return k / k.sum();
}

// The zero-padded smoothing perturbs a 2-pixel band at the border and the
// difference stencil adds one more, so the scores compare fields on the
// region the padding cannot reach. Constant images then map to exactly-zero
// fields.
constexpr int kScoreMargin = 3;

double field_similarity(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double num = 0.0, den = 0.0;
  for (Eigen::Index y = kScoreMargin; y + kScoreMargin < a.rows(); ++y)
    for (Eigen::Index x = kScoreMargin; x + kScoreMargin < a.cols(); ++x) {
      num += std::fabs(a(y, x) - b(y, x));
      den += std::fabs(a(y, x)) + std::fabs(b(y, x));
    }
  if (den == 0.0) return 1.0;  // two structure-free fields are maximally similar
  return 1.0 - num / den;
}

Eigen::MatrixXd channel(const Image& img, int c) {
  Eigen::MatrixXd m(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) m(y, x) = img.at(y, x, c);
  return m;
}

}  // namespace

double psnr(const Image& ref, const Image& test) {
  require_same_size("psnr", ref, test);
  double acc = 0.0;
  for (size_t i = 0; i < ref.data.size(); ++i) {
    const double d = ref.data[i] - test.data[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(ref.data.size());
  if (mse == 0.0) return kPsnrSentinel;
  return -10.0 * std::log10(mse);
}

double ssim(const Image& ref, const Image& test) {
  require_same_size("ssim", ref, test);
  constexpr int kWindow = 11;
  constexpr double kSigma = 1.5;
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  if (ref.width < kWindow || ref.height < kWindow)
    throw data_error("ssim: image smaller than the 11x11 window");

  const Eigen::VectorXd g = gaussian_kernel(kWindow / 2, kSigma);
  Eigen::MatrixXd w(kWindow, kWindow);
  for (int y = 0; y < kWindow; ++y)
    for (int x = 0; x < kWindow; ++x) w(y, x) = g[y] * g[x];

  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    const Eigen::MatrixXd a = channel(ref, c);
    const Eigen::MatrixXd b = channel(test, c);
    double acc = 0.0;
    long count = 0;
    for (int y = 0; y + kWindow <= ref.height; ++y)
      for (int x = 0; x + kWindow <= ref.width; ++x) {
        const auto wa = a.block(y, x, kWindow, kWindow);
        const auto wb = b.block(y, x, kWindow, kWindow);
        const double mu_a = (w.array() * wa.array()).sum();
        const double mu_b = (w.array() * wb.array()).sum();
        const double var_a = (w.array() * (wa.array() - mu_a).square()).sum();
        const double var_b = (w.array() * (wb.array() - mu_b).square()).sum();
        const double cov = (w.array() * (wa.array() - mu_a) * (wb.array() - mu_b)).sum();
        const double l = (2.0 * mu_a * mu_b + kC1) / (mu_a * mu_a + mu_b * mu_b + kC1);
        const double cs = (2.0 * cov + kC2) / (var_a + var_b + kC2);
        acc += l * cs;
        ++count;
      }
    total += acc / static_cast<double>(count);
  }
  return total / 3.0;
}

Eigen::MatrixXd to_gray(const Image& img) {
  Eigen::MatrixXd m(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      m(y, x) = (img.at(y, x, 0) + img.at(y, x, 1) + img.at(y, x, 2)) / 3.0;
  return m;
}

Eigen::MatrixXd gaussian_smooth(const Eigen::MatrixXd& img, double sigma) {
  constexpr int kRadius = 2;  // 5x5 kernel
  const Eigen::VectorXd k = gaussian_kernel(kRadius, sigma);
  const auto h = img.rows();
  const auto w = img.cols();

  // Separable passes with zero padding outside the image.
  Eigen::MatrixXd tmp = Eigen::MatrixXd::Zero(h, w);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int d = -kRadius; d <= kRadius; ++d) {
        const Eigen::Index xx = x + d;
        if (xx >= 0 && xx < w) acc += k[d + kRadius] * img(y, xx);
      }
      tmp(y, x) = acc;
    }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(h, w);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int d = -kRadius; d <= kRadius; ++d) {
        const Eigen::Index yy = y + d;
        if (yy >= 0 && yy < h) acc += k[d + kRadius] * tmp(yy, x);
      }
      out(y, x) = acc;
    }
  return out;
}

Eigen::MatrixXd gradient_magnitude(const Eigen::MatrixXd& smoothed) {
  const auto h = smoothed.rows();
  const auto w = smoothed.cols();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(h, w);
  for (Eigen::Index m = 1; m + 1 < h; ++m)
    for (Eigen::Index n = 1; n + 1 < w; ++n) {
      const double gx = smoothed(m, n + 1) + smoothed(m, n - 1) - 2.0 * smoothed(m, n);
      const double gy = smoothed(m + 1, n) + smoothed(m - 1, n) - 2.0 * smoothed(m, n);
      g(m, n) = std::sqrt(gx * gx + gy * gy);
    }
  return g;
}

Eigen::MatrixXd laplacian_normalized(const Eigen::MatrixXd& smoothed) {
  const auto h = smoothed.rows();
  const auto w = smoothed.cols();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(h, w);
  for (Eigen::Index m = 1; m + 1 < h; ++m)
    for (Eigen::Index n = 1; n + 1 < w; ++n) {
      const double lap = smoothed(m + 1, n) + smoothed(m - 1, n) + smoothed(m, n + 1) +
                         smoothed(m, n - 1) - 4.0 * smoothed(m, n);
      l(m, n) = lap / (1.0 + smoothed(m, n));
    }
  return l;
}

double gss(const Image& ref, const Image& test) {
  require_same_size("gss", ref, test);
  const Eigen::MatrixXd ga = gradient_magnitude(gaussian_smooth(to_gray(ref)));
  const Eigen::MatrixXd gb = gradient_magnitude(gaussian_smooth(to_gray(test)));
  return field_similarity(ga, gb);
}

double lss(const Image& ref, const Image& test) {
  require_same_size("lss", ref, test);
  const Eigen::MatrixXd la = laplacian_normalized(gaussian_smooth(to_gray(ref)));
  const Eigen::MatrixXd lb = laplacian_normalized(gaussian_smooth(to_gray(test)));
  return field_similarity(la, lb);
}

MetricScores score_pair(const Image& ref, const Image& test) {
  return MetricScores{psnr(ref, test), ssim(ref, test), gss(ref, test), lss(ref, test)};
}

}  // namespace mzen
