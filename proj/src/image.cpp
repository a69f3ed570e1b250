#include "mzen/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace mzen {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

uint8_t quantize(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<uint8_t>(std::lround(c * 255.0));
}

double clamp_index(double v, double lo, double hi) { return std::clamp(v, lo, hi); }

// Catmull-Rom cubic kernel (a = -1/2).
double cubic_weight(double t) {
  const double a = -0.5;
  const double x = std::fabs(t);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

}  // namespace

void write_png(const std::string& path, const Image& img) {
  if (img.width <= 0 || img.height <= 0)
    throw data_error("write_png: empty image for '" + path + "'");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw data_error("write_png: cannot open '" + path + "' for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw data_error("write_png: libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw data_error("write_png: libpng error while writing '" + path + "'");
  }

  png_init_io(png, fp.get());
  // Pinned compression settings keep the byte stream reproducible.
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<uint8_t> row(static_cast<size_t>(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) row[x * 3 + c] = quantize(img.at(y, x, c));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw data_error("read_png: cannot open '" + path + "'");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw data_error("read_png: libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw data_error("read_png: libpng error while reading '" + path + "'");
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  // Normalize any input to 8-bit RGB.
  png_set_expand(png);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
      png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  Image img(w, h);
  std::vector<uint8_t> row(static_cast<size_t>(w) * 3);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = row[x * 3 + c] / 255.0;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_depth_bin(const std::string& path, const DepthMap& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("write_depth_bin: cannot open '" + path + "'");
  static_assert(sizeof(double) == 8);
  out.write(reinterpret_cast<const char*>(d.data.data()),
            static_cast<std::streamsize>(d.data.size() * sizeof(double)));
  if (!out) throw data_error("write_depth_bin: short write to '" + path + "'");
}

DepthMap read_depth_bin(const std::string& path, int width, int height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("read_depth_bin: cannot open '" + path + "'");
  DepthMap d(width, height);
  in.read(reinterpret_cast<char*>(d.data.data()),
          static_cast<std::streamsize>(d.data.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(d.data.size() * sizeof(double)))
    throw data_error("read_depth_bin: '" + path + "' is truncated");
  return d;
}

Image center_crop(const Image& img, int cw, int ch) {
  if (cw <= 0 || ch <= 0 || cw > img.width || ch > img.height)
    throw data_error("center_crop: crop " + std::to_string(cw) + "x" + std::to_string(ch) +
                     " does not fit in " + std::to_string(img.width) + "x" +
                     std::to_string(img.height));
  const int x0 = (img.width - cw) / 2;
  const int y0 = (img.height - ch) / 2;
  Image out(cw, ch);
  for (int y = 0; y < ch; ++y)
    for (int x = 0; x < cw; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
  return out;
}

Image resize_bilinear(const Image& img, int out_w, int out_h) {
  if (out_w <= 0 || out_h <= 0) throw data_error("resize_bilinear: bad output size");
  if (out_w == img.width && out_h == img.height) return img;
  Image out(out_w, out_h);
  const double sx = static_cast<double>(img.width) / out_w;
  const double sy = static_cast<double>(img.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    const double fy = clamp_index((y + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = clamp_index((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c);
        const double bot = (1.0 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c);
        out.at(y, x, c) = (1.0 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

Image resize_bicubic(const Image& img, int out_w, int out_h) {
  if (out_w <= 0 || out_h <= 0) throw data_error("resize_bicubic: bad output size");
  if (out_w == img.width && out_h == img.height) return img;
  Image out(out_w, out_h);
  const double sx = static_cast<double>(img.width) / out_w;
  const double sy = static_cast<double>(img.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    const int iy = static_cast<int>(std::floor(fy));
    const double ty = fy - iy;
    double wy[4];
    for (int k = 0; k < 4; ++k) wy[k] = cubic_weight(ty - (k - 1));
    for (int x = 0; x < out_w; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      const int ix = static_cast<int>(std::floor(fx));
      const double tx = fx - ix;
      double wx[4];
      for (int k = 0; k < 4; ++k) wx[k] = cubic_weight(tx - (k - 1));
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int ky = 0; ky < 4; ++ky) {
          const int yy = std::clamp(iy + ky - 1, 0, img.height - 1);
          double rowacc = 0.0;
          for (int kx = 0; kx < 4; ++kx) {
            const int xx = std::clamp(ix + kx - 1, 0, img.width - 1);
            rowacc += wx[kx] * img.at(yy, xx, c);
          }
          acc += wy[ky] * rowacc;
        }
        out.at(y, x, c) = acc;
      }
    }
  }
  return out;
}

double mean_squared_error(const Image& a, const Image& b) {
  if (!a.same_size(b)) throw data_error("mean_squared_error: image sizes differ");
  double acc = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  // Eq.-style MSE: sum over channels, mean over pixels.
  return acc / static_cast<double>(a.pixel_count());
}

uint64_t image_hash(const Image& img) {
  uint64_t h = fnv1a64(&img.width, sizeof(img.width));
  h = fnv1a64(&img.height, sizeof(img.height), h);
  return hash_doubles(img.data, h);
}

}  // namespace mzen
