// SPDX-License-Identifier: Apache-2.0
#pragma once

// PNG/JPEG read and write. Requires linking OpenCV core + imgcodecs.

#include <cctype>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "hedge/distortion.hpp"
#include "hedge/errors.hpp"

namespace hedge {

inline ImageBuffer load_image(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw Error("cannot read image: " + path.string());
  ImageBuffer img(static_cast<std::size_t>(bgr.cols), static_cast<std::size_t>(bgr.rows));
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      for (int c = 0; c < 3; ++c) {
        img.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), static_cast<std::size_t>(c)) =
            row[x][2 - c] / 255.0;
      }
    }
  }
  return img;
}

// Format follows the extension (.png, .jpg, .jpeg).
inline void save_image(const ImageBuffer& img, const std::filesystem::path& path) {
  cv::Mat bgr(static_cast<int>(img.height), static_cast<int>(img.width), CV_8UC3);
  for (int y = 0; y < bgr.rows; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = img.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), static_cast<std::size_t>(c));
        row[x][2 - c] = cv::saturate_cast<uchar>(v * 255.0);
      }
    }
  }
  if (!cv::imwrite(path.string(), bgr)) throw Error("cannot write image: " + path.string());
}

inline bool is_supported_image(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace hedge
