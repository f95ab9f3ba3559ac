// Copyright 2026 The maskpipe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace maskpipe {

/// Interleaved 8-bit RGB raster, rows top to bottom.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  Image() = default;
  Image(std::size_t w, std::size_t h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(w * h * 3, fill) {}

  bool empty() const { return width == 0 || height == 0; }

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t channel) {
    return pixels[(y * width + x) * 3 + channel];
  }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t channel) const {
    return pixels[(y * width + x) * 3 + channel];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Axis-aligned pixel rectangle.
struct Box {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t w = 0;
  std::size_t h = 0;

  friend bool operator==(const Box&, const Box&) = default;
};

/// Copies the region; throws ParameterError if it leaves the image or is empty.
Image crop(const Image& image, const Box& box);

/// Largest square centred in a width x height frame.
Box centered_square(std::size_t width, std::size_t height);

}  // namespace maskpipe
