// Test-side oracles: independent brute-force implementations used to verify
// the library. Nothing here may call the code paths it checks.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "mzen/image.hpp"
#include "mzen/tape.hpp"

namespace oracle {

// Central finite differences of a scalar tape root w.r.t. one leaf.
inline Eigen::MatrixXd fd_gradient(mzen::ad::Tape& tape, mzen::ad::Var root, mzen::ad::Var leaf,
                                   double h = 1e-5) {
  const Eigen::MatrixXd original = tape.value(leaf);
  Eigen::MatrixXd grad(original.rows(), original.cols());
  for (Eigen::Index i = 0; i < original.rows(); ++i)
    for (Eigen::Index j = 0; j < original.cols(); ++j) {
      Eigen::MatrixXd p = original;
      p(i, j) = original(i, j) + h;
      tape.set_leaf(leaf, p);
      tape.recompute();
      const double up = tape.value(root)(0, 0);
      p(i, j) = original(i, j) - h;
      tape.set_leaf(leaf, p);
      tape.recompute();
      const double down = tape.value(root)(0, 0);
      grad(i, j) = (up - down) / (2.0 * h);
    }
  tape.set_leaf(leaf, original);
  tape.recompute();
  return grad;
}

inline double grad_max_error(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want,
                             double rel = 1e-4, double abs_floor = 1e-7) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < got.rows(); ++i)
    for (Eigen::Index j = 0; j < got.cols(); ++j) {
      const double err = std::fabs(got(i, j) - want(i, j));
      const double allowed = std::max(abs_floor, rel * std::fabs(want(i, j)));
      worst = std::max(worst, err / allowed);
    }
  return worst;  // <= 1 means within max(rel, abs) tolerance
}

// ---- metric oracles: direct transcriptions, no shared helpers ----

inline double bf_psnr(const mzen::Image& a, const mzen::Image& b) {
  double sum = 0.0;
  long n = 0;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const double d = a.at(y, x, c) - b.at(y, x, c);
        sum += d * d;
        ++n;
      }
  const double mse = sum / n;
  if (mse == 0.0) return 99.0;
  return -10.0 * std::log10(mse);
}

inline double bf_ssim(const mzen::Image& a, const mzen::Image& b) {
  const int win = 11;
  const double sigma = 1.5;
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  std::vector<std::vector<double>> w(win, std::vector<double>(win));
  double wsum = 0.0;
  for (int y = 0; y < win; ++y)
    for (int x = 0; x < win; ++x) {
      const double dy = y - win / 2, dx = x - win / 2;
      w[y][x] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      wsum += w[y][x];
    }
  for (auto& row : w)
    for (double& v : row) v /= wsum;

  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    double acc = 0.0;
    long cnt = 0;
    for (int y0 = 0; y0 + win <= a.height; ++y0)
      for (int x0 = 0; x0 + win <= a.width; ++x0) {
        double ma = 0, mb = 0;
        for (int y = 0; y < win; ++y)
          for (int x = 0; x < win; ++x) {
            ma += w[y][x] * a.at(y0 + y, x0 + x, c);
            mb += w[y][x] * b.at(y0 + y, x0 + x, c);
          }
        double va = 0, vb = 0, cov = 0;
        for (int y = 0; y < win; ++y)
          for (int x = 0; x < win; ++x) {
            const double da = a.at(y0 + y, x0 + x, c) - ma;
            const double db = b.at(y0 + y, x0 + x, c) - mb;
            va += w[y][x] * da * da;
            vb += w[y][x] * db * db;
            cov += w[y][x] * da * db;
          }
        acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++cnt;
      }
    total += acc / cnt;
  }
  return total / 3.0;
}

// Full 2-D convolution with the normalized 5x5 Gaussian, zero padding.
inline std::vector<std::vector<double>> bf_smooth(const std::vector<std::vector<double>>& img,
                                                  double sigma = 1.0) {
  const int h = static_cast<int>(img.size());
  const int w = static_cast<int>(img[0].size());
  double k[5][5];
  double ksum = 0.0;
  for (int y = -2; y <= 2; ++y)
    for (int x = -2; x <= 2; ++x) {
      k[y + 2][x + 2] = std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
      ksum += k[y + 2][x + 2];
    }
  for (auto& row : k)
    for (double& v : row) v /= ksum;

  std::vector<std::vector<double>> out(h, std::vector<double>(w, 0.0));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy >= 0 && yy < h && xx >= 0 && xx < w) acc += k[dy + 2][dx + 2] * img[yy][xx];
        }
      out[y][x] = acc;
    }
  return out;
}

inline std::vector<std::vector<double>> bf_gray(const mzen::Image& img) {
  std::vector<std::vector<double>> g(img.height, std::vector<double>(img.width));
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      g[y][x] = (img.at(y, x, 0) + img.at(y, x, 1) + img.at(y, x, 2)) / 3.0;
  return g;
}

inline double bf_gss(const mzen::Image& ia, const mzen::Image& ib) {
  auto field = [](const mzen::Image& img) {
    const auto s = bf_smooth(bf_gray(img));
    const int h = static_cast<int>(s.size()), w = static_cast<int>(s[0].size());
    std::vector<std::vector<double>> g(h, std::vector<double>(w, 0.0));
    for (int m = 1; m + 1 < h; ++m)
      for (int n = 1; n + 1 < w; ++n) {
        const double gx = s[m][n + 1] + s[m][n - 1] - 2 * s[m][n];
        const double gy = s[m + 1][n] + s[m - 1][n] - 2 * s[m][n];
        g[m][n] = std::sqrt(gx * gx + gy * gy);
      }
    return g;
  };
  const auto ga = field(ia), gb = field(ib);
  double num = 0, den = 0;
  for (size_t y = 3; y + 3 < ga.size(); ++y)
    for (size_t x = 3; x + 3 < ga[0].size(); ++x) {
      num += std::fabs(ga[y][x] - gb[y][x]);
      den += std::fabs(ga[y][x]) + std::fabs(gb[y][x]);
    }
  if (den == 0.0) return 1.0;
  return 1.0 - num / den;
}

inline double bf_lss(const mzen::Image& ia, const mzen::Image& ib) {
  auto field = [](const mzen::Image& img) {
    const auto s = bf_smooth(bf_gray(img));
    const int h = static_cast<int>(s.size()), w = static_cast<int>(s[0].size());
    std::vector<std::vector<double>> l(h, std::vector<double>(w, 0.0));
    for (int m = 1; m + 1 < h; ++m)
      for (int n = 1; n + 1 < w; ++n) {
        const double lap = s[m + 1][n] + s[m - 1][n] + s[m][n + 1] + s[m][n - 1] - 4 * s[m][n];
        l[m][n] = lap / (1.0 + s[m][n]);
      }
    return l;
  };
  const auto la = field(ia), lb = field(ib);
  double num = 0, den = 0;
  for (size_t y = 3; y + 3 < la.size(); ++y)
    for (size_t x = 3; x + 3 < la[0].size(); ++x) {
      num += std::fabs(la[y][x] - lb[y][x]);
      den += std::fabs(la[y][x]) + std::fabs(lb[y][x]);
    }
  if (den == 0.0) return 1.0;
  return 1.0 - num / den;
}

// ---- rendering oracle ----

// Dense midpoint quadrature of the emission-absorption integral along a
// pinhole ray, with its own ray construction.
struct PointSample {
  Eigen::Vector3d rgb;
  double sigma;
};

inline Eigen::Vector3d bf_render_pixel(
    const std::function<PointSample(const Eigen::Vector3d&)>& field, const Eigen::Matrix3d& rot,
    const Eigen::Vector3d& origin, double fx, double fy, double cx, double cy, double zoom,
    double i, double j, double near, double far, int n) {
  Eigen::Vector3d d_cam((i - cx) / (zoom * fx), (j - cy) / (zoom * fy), 1.0);
  Eigen::Vector3d dir = (rot * d_cam).normalized();
  const double dt = (far - near) / n;
  double transmittance = 1.0;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  for (int k = 0; k < n; ++k) {
    const double t = near + (k + 0.5) * dt;
    const PointSample s = field(origin + t * dir);
    const double alpha = 1.0 - std::exp(-s.sigma * dt);
    color += transmittance * alpha * s.rgb;
    transmittance *= 1.0 - alpha;
  }
  return color;
}

// Random [0,1] image.
inline mzen::Image random_image(int w, int h, mzen::Rng& rng) {
  mzen::Image img(w, h);
  for (double& v : img.data) v = rng.uniform();
  return img;
}

}  // namespace oracle
