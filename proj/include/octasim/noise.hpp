#pragma once

// Handcrafted contrast/noise model. Three control-point driven stages:
//   I_delta = max(I, I_D * lambda_delta * Delta)           background capillaries
//   I_N     = I_delta * ((1 - lambda_N) * N + lambda_N)    brightness / speckle
//   out     = I_N ^ (lambda_gamma * Gamma~ + 1)            local contrast
// followed by blur through a random down/up resampling.

#include "octasim/growth.hpp"
#include "octasim/random.hpp"
#include "octasim/raster.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace octasim {

inline constexpr int kControlGrid = 9;
using ControlGrid = std::array<double, kControlGrid * kControlGrid>;  // row-major [row][col]

inline ControlGrid constant_grid(double v) {
  ControlGrid g;
  g.fill(v);
  return g;
}

struct NoiseParams {
  ControlGrid a_delta = constant_grid(1.0);
  ControlGrid b_delta = constant_grid(1.0);
  ControlGrid a_n = constant_grid(1.0);
  ControlGrid b_n = constant_grid(1.0);
  ControlGrid gamma = constant_grid(0.0);
  double lambda_delta = 1.0;
  double lambda_n = 0.7;
  double lambda_gamma = 0.3;
  double downsample = 1.0;  // s

  void validate() const {
    for (const auto* g : {&a_delta, &b_delta, &a_n, &b_n}) {
      for (double v : *g) {
        if (!(v > 0.0)) throw std::invalid_argument("NoiseParams: Beta control points must be > 0");
      }
    }
    for (double v : gamma) {
      if (!(v >= -1.0 && v <= 1.0)) throw std::invalid_argument("NoiseParams: Gamma control points must lie in [-1, 1]");
    }
    for (double l : {lambda_delta, lambda_n, lambda_gamma}) {
      if (!(l >= 0.0 && l <= 1.0)) throw std::invalid_argument("NoiseParams: lambda weights must lie in [0, 1]");
    }
    if (!(downsample >= 0.25 && downsample <= 1.0)) {
      throw std::invalid_argument("NoiseParams: downsample factor must lie in [0.25, 1]");
    }
  }

  /// Parameters under which the whole model is the identity: no background,
  /// unit brightness, zero contrast change, no resampling.
  static NoiseParams neutral() {
    NoiseParams p;
    p.lambda_delta = 0.0;
    p.lambda_n = 1.0;
    p.lambda_gamma = 0.0;
    p.downsample = 1.0;
    return p;
  }

  friend bool operator==(const NoiseParams&, const NoiseParams&) = default;
};

/// Intervals random_noise_params draws from. The Beta and Gamma ranges are
/// heuristics; only the lambdas and the downsample range are fixed values.
struct NoiseSampling {
  double beta_param_min = 0.5;
  double beta_param_max = 8.0;
  double gamma_min = -1.0;
  double gamma_max = 1.0;
  double downsample_min = 0.25;
  double downsample_max = 1.0;
  double lambda_delta = 1.0;
  double lambda_n = 0.7;
  double lambda_gamma = 0.3;

  friend bool operator==(const NoiseSampling&, const NoiseSampling&) = default;
};

inline NoiseParams random_noise_params(Rng& rng, const NoiseSampling& sampling = {}) {
  NoiseParams p;
  for (auto* g : {&p.a_delta, &p.b_delta, &p.a_n, &p.b_n}) {
    for (double& v : *g) v = rng.uniform(sampling.beta_param_min, sampling.beta_param_max);
  }
  for (double& v : p.gamma) v = rng.uniform(sampling.gamma_min, sampling.gamma_max);
  p.downsample = rng.uniform(sampling.downsample_min, sampling.downsample_max);
  p.lambda_delta = sampling.lambda_delta;
  p.lambda_n = sampling.lambda_n;
  p.lambda_gamma = sampling.lambda_gamma;
  return p;
}

/// Keys cubic convolution kernel (a = -0.5).
inline double cubic_kernel(double s) {
  constexpr double a = -0.5;
  s = std::abs(s);
  if (s <= 1.0) return ((a + 2.0) * s - (a + 3.0)) * s * s + 1.0;
  if (s < 2.0) return ((a * s - 5.0 * a) * s + 8.0 * a) * s - 4.0 * a;
  return 0.0;
}

/// Bicubic interpolation of a 9x9 grid to width x height. Control point
/// (row i, col j) sits at pixel ((width-1) j/8, (height-1) i/8); indices
/// beyond the grid are clamped to the border.
inline RasterImage bicubic_field(const ControlGrid& grid, int width, int height) {
  if (width < kControlGrid || height < kControlGrid) {
    throw std::invalid_argument("bicubic_field: output must be at least 9x9");
  }
  struct Taps {
    std::array<int, 4> idx;
    std::array<double, 4> w;
  };
  const auto taps_for = [](int n) {
    std::vector<Taps> taps(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const double u = static_cast<double>(k) * (kControlGrid - 1) / (n - 1);
      const int base = static_cast<int>(std::floor(u));
      for (int m = 0; m < 4; ++m) {
        const int i = base - 1 + m;
        taps[k].idx[m] = std::clamp(i, 0, kControlGrid - 1);
        taps[k].w[m] = cubic_kernel(u - i);
      }
    }
    return taps;
  };
  const auto xt = taps_for(width);
  const auto yt = taps_for(height);
  RasterImage out(width, height, 1.0);
  for (int y = 0; y < height; ++y) {
    const auto& ty = yt[y];
    for (int x = 0; x < width; ++x) {
      const auto& tx = xt[x];
      double acc = 0.0;
      for (int m = 0; m < 4; ++m) {
        double row = 0.0;
        for (int n = 0; n < 4; ++n) row += tx.w[n] * grid[ty.idx[m] * kControlGrid + tx.idx[n]];
        acc += ty.w[m] * row;
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

inline constexpr double kMinBetaParam = 1e-3;

/// Per-pixel Beta draws with bicubically interpolated (alpha, beta) fields.
/// Interpolation overshoot below kMinBetaParam is clamped. Draw order is
/// row-major, alpha before beta within each pixel.
inline RasterImage sample_beta_field(const ControlGrid& a, const ControlGrid& b, int width, int height, Rng& rng) {
  const auto fa = bicubic_field(a, width, height);
  const auto fb = bicubic_field(b, width, height);
  RasterImage out(width, height, 1.0);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = rng.beta(std::max(kMinBetaParam, fa.data[i]), std::max(kMinBetaParam, fb.data[i]));
  }
  return out;
}

/// The three-stage transform with explicit per-pixel fields.
inline RasterImage apply_noise_fields(const RasterImage& image, const RasterImage& background, const RasterImage& delta,
                                      const RasterImage& brightness, const RasterImage& contrast, double lambda_delta,
                                      double lambda_n, double lambda_gamma) {
  for (const auto* f : {&background, &delta, &brightness, &contrast}) {
    if (!image.same_shape(*f)) throw std::invalid_argument("apply_noise: field dimensions differ from the image");
  }
  RasterImage out = image;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double with_background = std::max(image.data[i], background.data[i] * lambda_delta * delta.data[i]);
    const double bright = with_background * ((1.0 - lambda_n) * brightness.data[i] + lambda_n);
    const double exponent = lambda_gamma * contrast.data[i] + 1.0;
    const double v = bright <= 0.0 ? 0.0 : std::pow(bright, exponent);
    out.data[i] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

/// Samples Delta, N and Gamma~ from the control points and applies the transform.
inline RasterImage apply_noise(const RasterImage& image, const RasterImage& background, const NoiseParams& p,
                               Rng& rng) {
  if (!image.same_shape(background)) throw std::invalid_argument("apply_noise: background dimensions differ");
  p.validate();
  const auto delta = sample_beta_field(p.a_delta, p.b_delta, image.width, image.height, rng);
  const auto brightness = sample_beta_field(p.a_n, p.b_n, image.width, image.height, rng);
  auto contrast = bicubic_field(p.gamma, image.width, image.height);
  for (double& v : contrast.data) v = std::clamp(v, -1.0, 1.0);
  return apply_noise_fields(image, background, delta, brightness, contrast, p.lambda_delta, p.lambda_n,
                            p.lambda_gamma);
}

/// Bilinear downscale to round(dim * s), then back up to the original size.
inline RasterImage blur_by_resampling(const RasterImage& image, double s) {
  if (!(s >= 0.25 && s <= 1.0)) throw std::invalid_argument("blur_by_resampling: s must lie in [0.25, 1]");
  const int w = std::max(1, static_cast<int>(std::lround(image.width * s)));
  const int h = std::max(1, static_cast<int>(std::lround(image.height * s)));
  if (w == image.width && h == image.height) return image;
  auto restored = resize_bilinear(resize_bilinear(image, w, h), image.width, image.height);
  restored.mm_per_pixel = image.mm_per_pixel;
  return restored;
}

/// Full augmentation: noise stages, then resampling blur.
inline RasterImage augment(const RasterImage& image, const RasterImage& background, const NoiseParams& p, Rng& rng) {
  return blur_by_resampling(apply_noise(image, background, p, rng), p.downsample);
}

/// How the dense capillary background differs from the foreground DVC phase.
struct BackgroundDensity {
  double sink_count_factor = 2.0;
  double sink_spacing_factor = 0.5;

  friend bool operator==(const BackgroundDensity&, const BackgroundDensity&) = default;
};

inline PhaseConfig background_phase(const PhaseConfig& dvc, const BackgroundDensity& density = {}) {
  PhaseConfig p = dvc;
  p.name = dvc.name + "-background";
  p.sinks_per_iteration = static_cast<int>(std::lround(dvc.sinks_per_iteration * density.sink_count_factor));
  p.sink_spacing_mm = dvc.sink_spacing_mm * density.sink_spacing_factor;
  return p;
}

/// Dense capillary map I_D: a single DVC-like phase at elevated sink density,
/// rendered without labels.
inline RasterImage generate_background_map(std::uint64_t seed, int out_size, const PhaseConfig& dvc,
                                           const SimulationSettings& settings = {},
                                           const BackgroundDensity& density = {}) {
  const PhaseConfig phases[] = {background_phase(dvc, density)};
  const auto state = simulate_phases(phases, derive_seed(seed, "background"), settings);
  return render_mip(state.forest(), out_size, settings.fov_mm);
}

inline nlohmann::json grid_to_json(const ControlGrid& g) {
  auto rows = nlohmann::json::array();
  for (int i = 0; i < kControlGrid; ++i) {
    auto row = nlohmann::json::array();
    for (int j = 0; j < kControlGrid; ++j) row.push_back(g[i * kControlGrid + j]);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ControlGrid grid_from_json(const nlohmann::json& j, const std::string& name) {
  if (!j.is_array() || j.size() != kControlGrid) throw std::invalid_argument(name + ": expected 9 rows");
  ControlGrid g{};
  for (int i = 0; i < kControlGrid; ++i) {
    const auto& row = j[i];
    if (!row.is_array() || row.size() != kControlGrid) throw std::invalid_argument(name + ": expected 9 columns");
    for (int k = 0; k < kControlGrid; ++k) g[i * kControlGrid + k] = row[k].get<double>();
  }
  return g;
}

inline nlohmann::json to_json(const NoiseParams& p) {
  return nlohmann::json{{"A_delta", grid_to_json(p.a_delta)},
                        {"B_delta", grid_to_json(p.b_delta)},
                        {"A_N", grid_to_json(p.a_n)},
                        {"B_N", grid_to_json(p.b_n)},
                        {"Gamma", grid_to_json(p.gamma)},
                        {"lambda_delta", p.lambda_delta},
                        {"lambda_N", p.lambda_n},
                        {"lambda_Gamma", p.lambda_gamma},
                        {"s", p.downsample}};
}

inline NoiseParams noise_params_from_json(const nlohmann::json& j) {
  NoiseParams p;
  p.a_delta = grid_from_json(j.at("A_delta"), "A_delta");
  p.b_delta = grid_from_json(j.at("B_delta"), "B_delta");
  p.a_n = grid_from_json(j.at("A_N"), "A_N");
  p.b_n = grid_from_json(j.at("B_N"), "B_N");
  p.gamma = grid_from_json(j.at("Gamma"), "Gamma");
  p.lambda_delta = j.at("lambda_delta").get<double>();
  p.lambda_n = j.at("lambda_N").get<double>();
  p.lambda_gamma = j.at("lambda_Gamma").get<double>();
  p.downsample = j.at("s").get<double>();
  p.validate();
  return p;
}

}  // namespace octasim
