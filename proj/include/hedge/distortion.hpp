// SPDX-License-Identifier: Apache-2.0
#pragma once

// Visual perturbations used to produce the noisy-condition images: a random
// affine warp, color jitter, additive Gaussian noise and Poisson shot noise.
// All pixel math is done on doubles in [0, 1].

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "hedge/rng.hpp"
#include "json.hpp"

namespace hedge {

struct ImageBuffer {
  static constexpr std::size_t kChannels = 3;

  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;  // row-major, interleaved RGB

  ImageBuffer() = default;
  ImageBuffer(std::size_t w, std::size_t h, double fill = 0.0)
      : width(w), height(h), pixels(w * h * kChannels, fill) {}

  double& at(std::size_t x, std::size_t y, std::size_t c) noexcept {
    return pixels[(y * width + x) * kChannels + c];
  }
  double at(std::size_t x, std::size_t y, std::size_t c) const noexcept {
    return pixels[(y * width + x) * kChannels + c];
  }

  bool valid() const noexcept {
    return width > 0 && height > 0 && pixels.size() == width * height * kChannels;
  }

  bool operator==(const ImageBuffer&) const = default;
};

// Parameter ranges for sampled distortions.
struct DistortionRanges {
  static constexpr double kRotationDeg = 10.0;
  static constexpr double kTranslateFrac = 0.10;
  static constexpr double kScaleLo = 0.90;
  static constexpr double kScaleHi = 1.10;
  static constexpr double kBrightness = 0.20;
  static constexpr double kContrast = 0.20;
  static constexpr double kSaturation = 0.05;
  static constexpr double kHue = 0.02;
  static constexpr double kGaussianSigma = 0.07;
  static constexpr double kPoissonScale = 0.014;
};

struct DistortionSpec {
  double rotation_deg = 0.0;
  std::array<double, 2> translate_frac{0.0, 0.0};
  double scale_factor = 1.0;
  double brightness = 0.0;
  double contrast = 0.0;
  double saturation = 0.0;
  double hue_shift = 0.0;
  double gaussian_sigma = DistortionRanges::kGaussianSigma;
  double poisson_scale = DistortionRanges::kPoissonScale;
  std::uint64_t seed = 0;  // noise seed for this variant

  bool operator==(const DistortionSpec&) const = default;

  // No geometric or color change, and both noise stages disabled.
  static DistortionSpec identity() {
    DistortionSpec s;
    s.gaussian_sigma = 0.0;
    s.poisson_scale = 0.0;
    return s;
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DistortionSpec, rotation_deg, translate_frac, scale_factor, brightness,
                                   contrast, saturation, hue_shift, gaussian_sigma, poisson_scale, seed)

// Draws a spec uniformly from the declared ranges. Each field uses its own
// counter so the result depends only on (seed, variant_index).
inline DistortionSpec sample_spec(std::uint64_t seed, std::uint64_t variant_index) {
  using R = DistortionRanges;
  const rng::CounterRng g(seed, variant_index);
  DistortionSpec s;
  s.rotation_deg = g.uniform(0, -R::kRotationDeg, R::kRotationDeg);
  s.translate_frac = {g.uniform(1, -R::kTranslateFrac, R::kTranslateFrac),
                      g.uniform(2, -R::kTranslateFrac, R::kTranslateFrac)};
  s.scale_factor = g.uniform(3, R::kScaleLo, R::kScaleHi);
  s.brightness = g.uniform(4, -R::kBrightness, R::kBrightness);
  s.contrast = g.uniform(5, -R::kContrast, R::kContrast);
  s.saturation = g.uniform(6, -R::kSaturation, R::kSaturation);
  s.hue_shift = g.uniform(7, -R::kHue, R::kHue);
  s.gaussian_sigma = R::kGaussianSigma;
  s.poisson_scale = R::kPoissonScale;
  s.seed = g.bits(8);
  return s;
}

namespace detail {

inline double clamp01(double x) noexcept { return std::clamp(x, 0.0, 1.0); }

// h, s, v all in [0, 1]; h measured in turns.
inline std::array<double, 3> rgb_to_hsv(double r, double g, double b) noexcept {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  double h = 0.0;
  if (d > 0.0) {
    if (mx == r) {
      h = std::fmod((g - b) / d, 6.0);
    } else if (mx == g) {
      h = (b - r) / d + 2.0;
    } else {
      h = (r - g) / d + 4.0;
    }
    h /= 6.0;
    if (h < 0.0) h += 1.0;
  }
  const double s = mx > 0.0 ? d / mx : 0.0;
  return {h, s, mx};
}

inline std::array<double, 3> hsv_to_rgb(double h, double s, double v) noexcept {
  if (s <= 0.0) return {v, v, v};
  const double hh = (h - std::floor(h)) * 6.0;
  const int sector = static_cast<int>(hh) % 6;
  const double f = hh - std::floor(hh);
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

// Bilinear lookup with edge replication outside the image.
inline double sample_bilinear(const ImageBuffer& img, double x, double y, std::size_t c) noexcept {
  x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  const auto x0 = static_cast<std::size_t>(std::floor(x));
  const auto y0 = static_cast<std::size_t>(std::floor(y));
  const std::size_t x1 = std::min(x0 + 1, img.width - 1);
  const std::size_t y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - static_cast<double>(x0);
  const double fy = y - static_cast<double>(y0);
  const double top = img.at(x0, y0, c) * (1.0 - fx) + img.at(x1, y0, c) * fx;
  const double bottom = img.at(x0, y1, c) * (1.0 - fx) + img.at(x1, y1, c) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

}  // namespace detail

// Forward map p' = c + s * R(theta) * (p - c) + t, with c the image center
// and t = translate_frac * (W, H). Output pixels are pulled back through the
// inverse map and sampled bilinearly.
inline ImageBuffer apply_affine(const ImageBuffer& img, const DistortionSpec& spec) {
  if (!img.valid()) throw std::invalid_argument("apply_affine: invalid image");
  ImageBuffer out(img.width, img.height);
  const double theta = spec.rotation_deg * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double inv_s = 1.0 / spec.scale_factor;
  const double cx = (static_cast<double>(img.width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(img.height) - 1.0) / 2.0;
  const double tx = spec.translate_frac[0] * static_cast<double>(img.width);
  const double ty = spec.translate_frac[1] * static_cast<double>(img.height);

  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      const double dx = static_cast<double>(x) - cx - tx;
      const double dy = static_cast<double>(y) - cy - ty;
      // R(-theta) applied to (dx, dy), then undo the scale.
      const double sx = cx + (cos_t * dx + sin_t * dy) * inv_s;
      const double sy = cy + (-sin_t * dx + cos_t * dy) * inv_s;
      for (std::size_t c = 0; c < ImageBuffer::kChannels; ++c) {
        out.at(x, y, c) = detail::clamp01(detail::sample_bilinear(img, sx, sy, c));
      }
    }
  }
  return out;
}

// brightness -> contrast -> saturation -> hue, clamping after each step.
inline ImageBuffer apply_color_jitter(const ImageBuffer& img, const DistortionSpec& spec) {
  ImageBuffer out = img;
  const bool hsv_pass = spec.saturation != 0.0 || spec.hue_shift != 0.0;
  for (std::size_t p = 0; p < img.width * img.height; ++p) {
    double* px = &out.pixels[p * ImageBuffer::kChannels];
    for (std::size_t c = 0; c < ImageBuffer::kChannels; ++c) {
      double v = detail::clamp01(px[c] + spec.brightness);
      v = detail::clamp01((v - 0.5) * (1.0 + spec.contrast) + 0.5);
      px[c] = v;
    }
    if (hsv_pass) {
      auto [h, s, v] = detail::rgb_to_hsv(px[0], px[1], px[2]);
      s = detail::clamp01(s * (1.0 + spec.saturation));
      h = h + spec.hue_shift;
      h -= std::floor(h);
      const auto rgb = detail::hsv_to_rgb(h, s, v);
      for (std::size_t c = 0; c < ImageBuffer::kChannels; ++c) px[c] = detail::clamp01(rgb[c]);
    }
  }
  return out;
}

inline ImageBuffer apply_gaussian_noise(const ImageBuffer& img, double sigma, std::mt19937_64& rng) {
  if (sigma < 0.0) throw std::invalid_argument("apply_gaussian_noise: sigma must be >= 0");
  ImageBuffer out = img;
  if (sigma == 0.0) return out;
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& v : out.pixels) v = detail::clamp01(v + noise(rng));
  return out;
}

// Shot noise: x -> Poisson(x / scale) * scale.
inline ImageBuffer apply_poisson_noise(const ImageBuffer& img, double scale, std::mt19937_64& rng) {
  if (!(scale > 0.0)) throw std::invalid_argument("apply_poisson_noise: scale must be > 0");
  ImageBuffer out = img;
  std::poisson_distribution<long long> counts;
  using Param = std::poisson_distribution<long long>::param_type;
  for (double& v : out.pixels) {
    const double lambda = v / scale;
    if (lambda <= 0.0) {
      v = 0.0;
      continue;
    }
    counts.param(Param(lambda));
    v = detail::clamp01(static_cast<double>(counts(rng)) * scale);
  }
  return out;
}

// affine -> color jitter -> Gaussian -> Poisson. Noise streams are derived
// from spec.seed, so the result is a pure function of (img, spec).
inline ImageBuffer distort(const ImageBuffer& img, const DistortionSpec& spec) {
  ImageBuffer out = apply_affine(img, spec);
  out = apply_color_jitter(out, spec);
  if (spec.gaussian_sigma > 0.0) {
    std::mt19937_64 gauss_rng(rng::mix(spec.seed, 1));
    out = apply_gaussian_noise(out, spec.gaussian_sigma, gauss_rng);
  }
  if (spec.poisson_scale > 0.0) {
    std::mt19937_64 poisson_rng(rng::mix(spec.seed, 2));
    out = apply_poisson_noise(out, spec.poisson_scale, poisson_rng);
  }
  return out;
}

}  // namespace hedge
