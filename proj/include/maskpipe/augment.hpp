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

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "maskpipe/image.hpp"

namespace maskpipe {

/// Horizontal mirror.
Image hflip(const Image& image);

/// Counter-clockwise rotation about the image centre, dimensions preserved.
/// Multiples of 90 degrees on square images (and 180 on any image) are exact
/// pixel permutations; other angles sample bilinearly with black fill.
Image rotate(const Image& image, float degrees);

/// clamp(((x - 128) * contrast + 128) * brightness, 0, 255), rounded to nearest.
Image adjust_color(const Image& image, float brightness_scale, float contrast_scale);

/// Translate by (dx * width, dy * height) pixels and shear horizontally by
/// shear_factor pixels per row away from the centre row. Bilinear, black fill.
Image shift_shear(const Image& image, float dx_fraction, float dy_fraction,
                  float shear_factor);

/// A scalar that is either fixed (lo == hi) or drawn uniformly from [lo, hi].
struct ParamRange {
  float lo = 0.0f;
  float hi = 0.0f;

  static ParamRange fixed(float v) { return {v, v}; }
  bool is_fixed() const { return lo == hi; }

  friend bool operator==(const ParamRange&, const ParamRange&) = default;
};

struct FlipOp {
  friend bool operator==(const FlipOp&, const FlipOp&) = default;
};
struct RotateOp {
  ParamRange degrees;
  friend bool operator==(const RotateOp&, const RotateOp&) = default;
};
struct ColorOp {
  ParamRange brightness = ParamRange::fixed(1.0f);
  ParamRange contrast = ParamRange::fixed(1.0f);
  friend bool operator==(const ColorOp&, const ColorOp&) = default;
};
/// Width/height shift; this is the "width compensation" transform.
struct ShiftOp {
  ParamRange dx;
  ParamRange dy;
  friend bool operator==(const ShiftOp&, const ShiftOp&) = default;
};
struct ShearOp {
  ParamRange factor;
  friend bool operator==(const ShearOp&, const ShearOp&) = default;
};

using AugmentOp = std::variant<FlipOp, RotateOp, ColorOp, ShiftOp, ShearOp>;

struct AugmentPlan {
  std::uint64_t seed = 0;
  std::vector<AugmentOp> ops;

  friend bool operator==(const AugmentPlan&, const AugmentPlan&) = default;
};

/// One output per descriptor, each produced from the original image. Randomised
/// parameters of descriptor i are drawn from a stream keyed on (seed, i).
std::vector<Image> apply_plan(const AugmentPlan& plan, const Image& image);

// JSON descriptor form: [{"flip":true}, {"rotate":90}, {"rotate":{"min":-15,"max":15}},
// {"color":{"brightness":1.2,"contrast":0.8}}, {"shift":{"dx":0.1,"dy":0}}, {"shear":0.2}].
// A plan with a non-zero seed serialises as {"seed":N,"ops":[...]}.
nlohmann::json plan_to_json(const AugmentPlan& plan);
/// Throws ParameterError on an unknown or malformed descriptor.
AugmentPlan plan_from_json(const nlohmann::json& value);

}  // namespace maskpipe
