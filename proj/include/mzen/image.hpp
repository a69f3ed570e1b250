#pragma once

#include <string>
#include <vector>

#include "mzen/common.hpp"

namespace mzen {

// Row-major float RGB image with values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // height * width * 3

  Image() = default;
  Image(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<size_t>(w) * h * 3, fill) {}

  double& at(int y, int x, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  double at(int y, int x, int c) const { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  size_t pixel_count() const { return static_cast<size_t>(width) * height; }
  bool same_size(const Image& o) const { return width == o.width && height == o.height; }
};

// Single-channel row-major grid; used for rendered depth and depth priors.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // height * width

  DepthMap() = default;
  DepthMap(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  double& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
  double at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
};

// 8-bit RGB PNG round trip. Values are clamped to [0,1] and quantized with
// round-to-nearest on save, so save -> load -> save is byte-stable.
void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);

// Raw little-endian float64 dump, row major.
void write_depth_bin(const std::string& path, const DepthMap& d);
DepthMap read_depth_bin(const std::string& path, int width, int height);

// Centered crop of cw x ch pixels (cw <= width, ch <= height).
Image center_crop(const Image& img, int cw, int ch);

// Half-pixel-center sampling with edge clamping. With out size == in size
// both resamplers are the identity.
Image resize_bilinear(const Image& img, int out_w, int out_h);
Image resize_bicubic(const Image& img, int out_w, int out_h);

double mean_squared_error(const Image& a, const Image& b);

uint64_t image_hash(const Image& img);

}  // namespace mzen
