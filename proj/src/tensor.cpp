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
#include "maskpipe/tensor.hpp"

#include "maskpipe/errors.hpp"

namespace maskpipe {

std::string to_string(const Shape& shape) {
  return std::to_string(shape.n) + "x" + std::to_string(shape.c) + "x" +
         std::to_string(shape.h) + "x" + std::to_string(shape.w);
}

Tensor::Tensor(Shape shape, float fill) : shape_(shape), data_(shape.elements(), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.elements()) {
    throw ShapeError("tensor of shape " + to_string(shape_) + " needs " +
                     std::to_string(shape_.elements()) + " elements, got " +
                     std::to_string(data_.size()));
  }
}

}  // namespace maskpipe
