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
#include "maskpipe/image.hpp"

#include <algorithm>
#include <string>

#include "maskpipe/errors.hpp"

namespace maskpipe {

Image crop(const Image& image, const Box& box) {
  if (box.w == 0 || box.h == 0 || box.x + box.w > image.width ||
      box.y + box.h > image.height) {
    throw ParameterError("crop box (" + std::to_string(box.x) + "," + std::to_string(box.y) +
                         "," + std::to_string(box.w) + "," + std::to_string(box.h) +
                         ") outside " + std::to_string(image.width) + "x" +
                         std::to_string(image.height) + " frame");
  }
  Image out(box.w, box.h);
  for (std::size_t y = 0; y < box.h; ++y) {
    const auto* src = image.pixels.data() + ((box.y + y) * image.width + box.x) * 3;
    std::copy_n(src, box.w * 3, out.pixels.data() + y * box.w * 3);
  }
  return out;
}

Box centered_square(std::size_t width, std::size_t height) {
  const std::size_t side = std::min(width, height);
  return Box{(width - side) / 2, (height - side) / 2, side, side};
}

}  // namespace maskpipe
