// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>

#include "hedge/distortion.hpp"
#include "hedge/image_io.hpp"

using namespace hedge;
using Catch::Approx;

namespace {

ImageBuffer gradient(std::size_t w, std::size_t h) {
  ImageBuffer img(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      img.at(x, y, 0) = static_cast<double>(x) / static_cast<double>(w - 1);
      img.at(x, y, 1) = static_cast<double>(y) / static_cast<double>(h - 1);
      img.at(x, y, 2) = 0.5 + 0.4 * std::sin(0.3 * static_cast<double>(x + y));
    }
  }
  return img;
}

double max_abs_diff(const ImageBuffer& a, const ImageBuffer& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) d = std::max(d, std::abs(a.pixels[i] - b.pixels[i]));
  return d;
}

std::pair<double, double> moments(const ImageBuffer& img) {
  double s = 0.0;
  double s2 = 0.0;
  for (double v : img.pixels) {
    s += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(img.pixels.size());
  const double mean = s / n;
  return {mean, s2 / n - mean * mean};
}

std::pair<double, double> centroid(const ImageBuffer& img) {
  double sx = 0.0, sy = 0.0, sw = 0.0;
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      const double w = img.at(x, y, 0);
      sx += w * static_cast<double>(x);
      sy += w * static_cast<double>(y);
      sw += w;
    }
  }
  return {sx / sw, sy / sw};
}

}  // namespace

TEST_CASE("sample_spec is deterministic and in range", "[distortion]") {
  REQUIRE(sample_spec(42, 3) == sample_spec(42, 3));

  using R = DistortionRanges;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const auto s = sample_spec(i * 7919, i);
    REQUIRE(std::abs(s.rotation_deg) <= R::kRotationDeg);
    REQUIRE(std::abs(s.translate_frac[0]) <= R::kTranslateFrac);
    REQUIRE(std::abs(s.translate_frac[1]) <= R::kTranslateFrac);
    REQUIRE(s.scale_factor >= R::kScaleLo);
    REQUIRE(s.scale_factor <= R::kScaleHi);
    REQUIRE(std::abs(s.brightness) <= R::kBrightness);
    REQUIRE(std::abs(s.contrast) <= R::kContrast);
    REQUIRE(std::abs(s.saturation) <= R::kSaturation);
    REQUIRE(std::abs(s.hue_shift) <= R::kHue);
    REQUIRE(s.gaussian_sigma == 0.07);
    REQUIRE(s.poisson_scale == 0.014);
  }
}

TEST_CASE("sample_spec differs across variant indices", "[distortion]") {
  std::vector<DistortionSpec> specs;
  for (std::uint64_t i = 0; i < 100; ++i) specs.push_back(sample_spec(1, i));
  for (std::size_t a = 0; a < specs.size(); ++a) {
    for (std::size_t b = a + 1; b < specs.size(); ++b) REQUIRE_FALSE(specs[a] == specs[b]);
  }
}

TEST_CASE("apply_affine", "[distortion]") {
  SECTION("identity") {
    auto img = gradient(31, 17);
    REQUIRE(max_abs_diff(apply_affine(img, DistortionSpec::identity()), img) < 1e-6);
  }
  SECTION("rotation back and forth on a constant image") {
    ImageBuffer img(40, 30, 0.37);
    auto s = DistortionSpec::identity();
    s.rotation_deg = 10.0;
    auto once = apply_affine(img, s);
    s.rotation_deg = -10.0;
    auto back = apply_affine(once, s);
    REQUIRE(max_abs_diff(back, img) < 1e-12);
  }
  SECTION("translation moves a bright pixel's centroid by frac * size") {
    ImageBuffer img(64, 48, 0.0);
    img.at(20, 25, 0) = 1.0;
    auto s = DistortionSpec::identity();
    s.translate_frac = {0.1, -0.08};
    auto [x0, y0] = centroid(img);
    auto [x1, y1] = centroid(apply_affine(img, s));
    REQUIRE(std::abs((x1 - x0) - 0.1 * 64) <= 1.0);
    REQUIRE(std::abs((y1 - y0) + 0.08 * 48) <= 1.0);
  }
  SECTION("scale about the center keeps dimensions") {
    auto img = gradient(20, 20);
    auto s = DistortionSpec::identity();
    s.scale_factor = 1.1;
    auto out = apply_affine(img, s);
    REQUIRE(out.width == 20);
    REQUIRE(out.height == 20);
  }
}

TEST_CASE("apply_color_jitter", "[distortion]") {
  SECTION("zero jitter is identity") {
    auto img = gradient(16, 16);
    auto s = DistortionSpec::identity();
    s.saturation = 0.0;
    REQUIRE(max_abs_diff(apply_color_jitter(img, s), img) < 1e-6);
  }
  SECTION("brightness on mid-gray") {
    ImageBuffer img(4, 4, 0.5);
    auto s = DistortionSpec::identity();
    s.brightness = 0.2;
    auto out = apply_color_jitter(img, s);
    for (double v : out.pixels) REQUIRE(v == Approx(0.7).margin(1e-12));
  }
  SECTION("contrast formula") {
    ImageBuffer img(2, 2, 0.8);
    auto s = DistortionSpec::identity();
    s.contrast = -0.2;
    for (double v : apply_color_jitter(img, s).pixels) REQUIRE(v == Approx((0.8 - 0.5) * 0.8 + 0.5));
  }
  SECTION("saturation leaves gray fixed") {
    ImageBuffer img(5, 5, 0.42);
    auto s = DistortionSpec::identity();
    s.saturation = -0.05;
    REQUIRE(max_abs_diff(apply_color_jitter(img, s), img) < 1e-12);
  }
  SECTION("HSV round trip with a full hue turn") {
    auto img = gradient(16, 16);
    auto s = DistortionSpec::identity();
    s.hue_shift = 1.0;
    REQUIRE(max_abs_diff(apply_color_jitter(img, s), img) < 1e-9);
  }
  SECTION("clamps to [0,1]") {
    auto img = gradient(16, 16);
    auto s = DistortionSpec::identity();
    s.brightness = 0.2;
    s.contrast = 0.2;
    s.saturation = 0.05;
    s.hue_shift = 0.02;
    for (double v : apply_color_jitter(img, s).pixels) {
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
    }
  }
}

TEST_CASE("Gaussian noise statistics", "[distortion][statistics]") {
  ImageBuffer img(1000, 334, 0.5);  // ~10^6 samples
  std::mt19937_64 rng(123);
  REQUIRE(apply_gaussian_noise(img, 0.0, rng) == img);
  auto out = apply_gaussian_noise(img, 0.07, rng);
  auto [mean, var] = moments(out);
  REQUIRE(std::sqrt(var) >= 0.0685);
  REQUIRE(std::sqrt(var) <= 0.0715);
  REQUIRE(std::abs(mean - 0.5) < 0.001);
  REQUIRE_THROWS(apply_gaussian_noise(img, -1.0, rng));
}

TEST_CASE("Poisson noise statistics", "[distortion][statistics]") {
  std::mt19937_64 rng(321);
  ImageBuffer black(10, 10, 0.0);
  REQUIRE(apply_poisson_noise(black, 0.014, rng) == black);

  ImageBuffer img(1000, 334, 0.5);
  auto [mean, var] = moments(apply_poisson_noise(img, 0.014, rng));
  REQUIRE(std::abs(mean - 0.5) <= 0.002);
  REQUIRE(std::abs(var - 0.007) <= 0.15 * 0.007);
  REQUIRE_THROWS(apply_poisson_noise(img, 0.0, rng));
}

TEST_CASE("distort composition", "[distortion]") {
  auto img = gradient(48, 32);
  SECTION("identity spec") { REQUIRE(max_abs_diff(distort(img, DistortionSpec::identity()), img) < 1e-6); }
  SECTION("deterministic for a fixed spec") {
    const auto spec = sample_spec(9, 0);
    REQUIRE(distort(img, spec) == distort(img, spec));
  }
  SECTION("seeds change the output") {
    auto a = distort(img, sample_spec(1, 0));
    auto b = distort(img, sample_spec(2, 0));
    REQUIRE(max_abs_diff(a, b) > 0.0);
  }
  SECTION("range safety") {
    for (std::uint64_t i = 0; i < 20; ++i) {
      for (double v : distort(img, sample_spec(77, i)).pixels) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
      }
    }
  }
}

TEST_CASE("DistortionSpec JSON round trip", "[distortion]") {
  const auto s = sample_spec(5, 11);
  nlohmann::json j = s;
  REQUIRE(j.get<DistortionSpec>() == s);
}

TEST_CASE("PNG write and read", "[distortion][io]") {
  auto img = gradient(12, 9);
  const auto path = std::filesystem::temp_directory_path() / "hedge_io_test.png";
  save_image(img, path);
  auto back = load_image(path);
  REQUIRE(back.width == 12);
  REQUIRE(back.height == 9);
  REQUIRE(max_abs_diff(back, img) <= 0.5 / 255.0 + 1e-12);
  std::filesystem::remove(path);
  REQUIRE_THROWS_AS(load_image(path), Error);
}
