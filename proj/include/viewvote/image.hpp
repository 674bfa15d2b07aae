// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace viewvote {

/// Row-major 2D buffer. Pixel (u, v) = column u, row v.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, T fill = T{})
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  T& at(int u, int v) { return data[static_cast<std::size_t>(v) * width + u]; }
  const T& at(int u, int v) const {
    return data[static_cast<std::size_t>(v) * width + u];
  }
  std::size_t size() const { return data.size(); }
};

using GreyImage = Image<uint8_t>;

/// Writes an 8-bit single-channel PNG. Throws IoError on failure.
void write_grey_png(const std::filesystem::path& path, const GreyImage& img);

/// Reads an 8-bit single-channel PNG. Throws IoError if the file cannot be
/// opened and ParseError if it is not 8-bit greyscale.
GreyImage read_grey_png(const std::filesystem::path& path);

}  // namespace viewvote
