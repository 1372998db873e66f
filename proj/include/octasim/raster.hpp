#pragma once

// En-face rendering of vessel forests: capsule coverage with a one-pixel
// linear anti-aliasing ramp, combined by maximum (the projection along depth),
// plus crisp radius-filtered labels and bilinear resampling.

#include "octasim/vessel_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace octasim {

struct RasterImage {
  int width = 0;
  int height = 0;
  double mm_per_pixel = 1.0;
  std::vector<double> data;  // row-major, values in [0, 1]

  RasterImage() = default;
  RasterImage(int w, int h, double mm_per_px, double fill = 0.0)
      : width(w), height(h), mm_per_pixel(mm_per_px), data(static_cast<std::size_t>(w) * h, fill) {
    if (w < 0 || h < 0) throw std::invalid_argument("RasterImage: negative size");
  }

  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  [[nodiscard]] double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  [[nodiscard]] std::size_t size() const { return data.size(); }
  [[nodiscard]] bool same_shape(const RasterImage& o) const { return width == o.width && height == o.height; }

  [[nodiscard]] double mean() const {
    double s = 0.0;
    for (double v : data) s += v;
    return data.empty() ? 0.0 : s / static_cast<double>(data.size());
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

/// Which vessels a label includes: radius > min_radius_mm (>= with include_equal).
struct LabelDetail {
  double min_radius_mm = 0.0;
  bool include_equal = false;

  [[nodiscard]] bool includes(double radius_mm) const {
    return include_equal ? radius_mm >= min_radius_mm : radius_mm > min_radius_mm;
  }
};

/// A vessel segment projected to pixel coordinates (pixel centres at +0.5).
struct PixelSegment {
  double ax, ay, bx, by;
  double radius_px;
  double radius_mm;
};

inline std::vector<PixelSegment> project_segments(const VesselForest& forest, double mm_per_pixel) {
  std::vector<PixelSegment> segs;
  segs.reserve(forest.edge_count());
  const double k = forest.mm_per_unit() / mm_per_pixel;
  for (const auto& n : forest.nodes()) {
    if (n.is_root()) continue;
    const auto& p = forest.at(*n.parent);
    segs.push_back(PixelSegment{p.position.x() * k, p.position.y() * k, n.position.x() * k, n.position.y() * k,
                                n.radius_mm / mm_per_pixel, n.radius_mm});
  }
  return segs;
}

/// Distance from (px, py) to the 2D segment.
inline double segment_distance(const PixelSegment& s, double px, double py) {
  const double dx = s.bx - s.ax;
  const double dy = s.by - s.ay;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((px - s.ax) * dx + (py - s.ay) * dy) / len2, 0.0, 1.0);
  const double ex = px - (s.ax + t * dx);
  const double ey = py - (s.ay + t * dy);
  return std::sqrt(ex * ex + ey * ey);
}

/// Anti-aliased capsule coverage: clamp(radius + 0.5 - distance, 0, 1).
inline double capsule_coverage(double radius_px, double distance_px) {
  return std::clamp(radius_px + 0.5 - distance_px, 0.0, 1.0);
}

namespace detail {

/// Visits every pixel whose centre lies within `reach` of the segment.
template <class F>
void for_each_pixel_near(const PixelSegment& s, double reach, int width, int height, F&& f) {
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(s.ax, s.bx) - reach - 0.5)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max(s.ax, s.bx) + reach - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(s.ay, s.by) - reach - 0.5)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max(s.ay, s.by) + reach - 0.5)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) f(x, y, segment_distance(s, x + 0.5, y + 0.5));
  }
}

}  // namespace detail

/// Grayscale maximum-intensity projection of all vessel segments over a
/// square field of view [0, fov_mm]^2 sampled at out_size^2 pixels.
inline RasterImage render_mip(const VesselForest& forest, int out_size, double fov_mm) {
  if (out_size < 1) throw std::invalid_argument("render_mip: out_size must be >= 1");
  if (!(fov_mm > 0)) throw std::invalid_argument("render_mip: fov must be positive");
  RasterImage img(out_size, out_size, fov_mm / out_size);
  for (const auto& s : project_segments(forest, img.mm_per_pixel)) {
    detail::for_each_pixel_near(s, s.radius_px + 0.5, out_size, out_size, [&](int x, int y, double dist) {
      double& v = img.at(x, y);
      v = std::max(v, capsule_coverage(s.radius_px, dist));
    });
  }
  return img;
}

/// Binary label (values 0/1): pixel centres inside the footprint of any
/// segment whose radius passes `detail`.
inline RasterImage render_label(const VesselForest& forest, int out_size, double fov_mm, const LabelDetail& detail) {
  if (out_size < 1) throw std::invalid_argument("render_label: out_size must be >= 1");
  if (!(fov_mm > 0)) throw std::invalid_argument("render_label: fov must be positive");
  RasterImage img(out_size, out_size, fov_mm / out_size);
  for (const auto& s : project_segments(forest, img.mm_per_pixel)) {
    if (!detail.includes(s.radius_mm)) continue;
    detail::for_each_pixel_near(s, s.radius_px, out_size, out_size, [&](int x, int y, double dist) {
      if (dist <= s.radius_px) img.at(x, y) = 1.0;
    });
  }
  return img;
}

inline RasterImage binarize(const RasterImage& img, double threshold) {
  RasterImage out = img;
  for (double& v : out.data) v = v >= threshold ? 1.0 : 0.0;
  return out;
}

/// Integer-factor bilinear upsampling with corner-aligned sampling: output
/// pixel k reads input coordinate k * (in - 1) / (out - 1).
inline RasterImage upsample_bilinear(const RasterImage& img, int factor) {
  if (factor < 1) throw std::invalid_argument("upsample_bilinear: factor must be >= 1");
  if (factor == 1) return img;
  const int ow = img.width * factor;
  const int oh = img.height * factor;
  RasterImage out(ow, oh, img.mm_per_pixel / factor);
  const auto coord = [](int k, int in, int outn) {
    return outn > 1 ? static_cast<double>(k) * (in - 1) / (outn - 1) : 0.0;
  };
  for (int y = 0; y < oh; ++y) {
    const double fy = coord(y, img.height, oh);
    const int y0 = std::min(static_cast<int>(fy), img.height - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < ow; ++x) {
      const double fx = coord(x, img.width, ow);
      const int x0 = std::min(static_cast<int>(fx), img.width - 1);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      const double top = img.at(x0, y0) * (1.0 - wx) + img.at(x1, y0) * wx;
      const double bottom = img.at(x0, y1) * (1.0 - wx) + img.at(x1, y1) * wx;
      out.at(x, y) = std::clamp(top * (1.0 - wy) + bottom * wy, 0.0, 1.0);
    }
  }
  return out;
}

namespace detail {

struct ResampleTap {
  int first = 0;
  std::vector<double> weights;
};

/// Triangle-filter taps for resizing one axis from `in` to `out` samples
/// (pixel-centre aligned). The filter widens by in/out when shrinking so a
/// downscale averages instead of skipping pixels; weights are normalized.
inline std::vector<ResampleTap> triangle_taps(int in, int out) {
  std::vector<ResampleTap> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  const double support = std::max(1.0, scale);
  for (int o = 0; o < out; ++o) {
    const double centre = (o + 0.5) * scale;
    const int lo = std::max(0, static_cast<int>(std::floor(centre - support)));
    const int hi = std::min(in - 1, static_cast<int>(std::ceil(centre + support)));
    auto& tap = taps[o];
    tap.first = lo;
    double total = 0.0;
    for (int i = lo; i <= hi; ++i) {
      const double w = std::max(0.0, 1.0 - std::abs((i + 0.5 - centre) / support));
      tap.weights.push_back(w);
      total += w;
    }
    if (total > 0.0) {
      for (double& w : tap.weights) w /= total;
    } else {
      // Centre outside every input pixel: fall back to the nearest one.
      tap.first = std::clamp(static_cast<int>(centre), 0, in - 1);
      tap.weights.assign(1, 1.0);
    }
  }
  return taps;
}

}  // namespace detail

/// Separable bilinear (triangle filter) resize to new_width x new_height.
inline RasterImage resize_bilinear(const RasterImage& img, int new_width, int new_height) {
  if (new_width < 1 || new_height < 1) throw std::invalid_argument("resize_bilinear: target size must be >= 1");
  if (new_width == img.width && new_height == img.height) return img;
  const auto xt = detail::triangle_taps(img.width, new_width);
  const auto yt = detail::triangle_taps(img.height, new_height);
  RasterImage tmp(new_width, img.height, img.mm_per_pixel);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < new_width; ++x) {
      double acc = 0.0;
      const auto& tap = xt[x];
      for (std::size_t k = 0; k < tap.weights.size(); ++k) acc += tap.weights[k] * img.at(tap.first + int(k), y);
      tmp.at(x, y) = acc;
    }
  }
  RasterImage out(new_width, new_height, img.mm_per_pixel * img.width / new_width);
  for (int y = 0; y < new_height; ++y) {
    const auto& tap = yt[y];
    for (int x = 0; x < new_width; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < tap.weights.size(); ++k) acc += tap.weights[k] * tmp.at(x, tap.first + int(k));
      out.at(x, y) = std::clamp(acc, 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace octasim
