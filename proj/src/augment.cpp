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
#include "maskpipe/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "maskpipe/errors.hpp"

namespace maskpipe {
namespace {

using json = nlohmann::json;

std::uint8_t clamp_round(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

// Inverse-mapped warp: dest pixel (x, y) reads source (u, v) = map(x, y).
// Taps outside the source contribute black.
template <typename Map>
Image warp_bilinear(const Image& src, Map&& map) {
  Image out(src.width, src.height);
  const auto w = static_cast<std::ptrdiff_t>(src.width);
  const auto h = static_cast<std::ptrdiff_t>(src.height);
  for (std::size_t y = 0; y < src.height; ++y) {
    for (std::size_t x = 0; x < src.width; ++x) {
      const auto [u, v] = map(static_cast<double>(x), static_cast<double>(y));
      const double fu = std::floor(u);
      const double fv = std::floor(v);
      const double ax = u - fu;
      const double ay = v - fv;
      const auto x0 = static_cast<std::ptrdiff_t>(fu);
      const auto y0 = static_cast<std::ptrdiff_t>(fv);
      for (std::size_t c = 0; c < 3; ++c) {
        auto tap = [&](std::ptrdiff_t tx, std::ptrdiff_t ty) -> double {
          if (tx < 0 || ty < 0 || tx >= w || ty >= h) return 0.0;
          return src.at(static_cast<std::size_t>(tx), static_cast<std::size_t>(ty), c);
        };
        const double top = tap(x0, y0) * (1.0 - ax) + (ax > 0.0 ? tap(x0 + 1, y0) * ax : 0.0);
        const double bottom =
            ay > 0.0 ? tap(x0, y0 + 1) * (1.0 - ax) + (ax > 0.0 ? tap(x0 + 1, y0 + 1) * ax : 0.0)
                     : 0.0;
        out.at(x, y, c) = clamp_round(top * (1.0 - ay) + bottom * ay);
      }
    }
  }
  return out;
}

// Exact counter-clockwise quarter turns of a square image.
Image quarter_turns(const Image& src, int turns) {
  Image out(src.width, src.height);
  const std::size_t n = src.width;
  for (std::size_t y = 0; y < src.height; ++y) {
    for (std::size_t x = 0; x < src.width; ++x) {
      std::size_t u = x, v = y;
      switch (turns) {
        case 1: u = n - 1 - y; v = x; break;
        case 2: u = src.width - 1 - x; v = src.height - 1 - y; break;
        case 3: u = y; v = n - 1 - x; break;
        default: break;
      }
      for (std::size_t c = 0; c < 3; ++c) out.at(x, y, c) = src.at(u, v, c);
    }
  }
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Draw {
 public:
  Draw(std::uint64_t seed, std::size_t index) : engine_(splitmix64(seed ^ splitmix64(index))) {}

  float operator()(const ParamRange& r) {
    const std::uint64_t bits = engine_();  // always consumed, so draws stay aligned
    if (r.is_fixed()) return r.lo;
    const double unit = static_cast<double>(bits >> 11) * 0x1.0p-53;
    return static_cast<float>(r.lo + (static_cast<double>(r.hi) - r.lo) * unit);
  }

 private:
  std::mt19937_64 engine_;
};

json range_to_json(const ParamRange& r) {
  if (r.is_fixed()) return r.lo;
  return json{{"min", r.lo}, {"max", r.hi}};
}

ParamRange range_from_json(const json& v, const char* what) {
  if (v.is_number()) return ParamRange::fixed(v.get<float>());
  if (v.is_object() && v.contains("min") && v.contains("max") && v["min"].is_number() &&
      v["max"].is_number()) {
    ParamRange r{v["min"].get<float>(), v["max"].get<float>()};
    if (r.lo > r.hi) throw ParameterError(std::string(what) + ": min exceeds max");
    return r;
  }
  throw ParameterError(std::string(what) + ": expected a number or {\"min\",\"max\"}");
}

ParamRange field(const json& obj, const char* key, float fallback, const char* what) {
  const auto it = obj.find(key);
  return it == obj.end() ? ParamRange::fixed(fallback) : range_from_json(*it, what);
}

}  // namespace

Image hflip(const Image& image) {
  Image out(image.width, image.height);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) out.at(image.width - 1 - x, y, c) = image.at(x, y, c);
    }
  }
  return out;
}

Image rotate(const Image& image, float degrees) {
  if (!std::isfinite(degrees)) throw ParameterError("rotate: angle must be finite");
  double turn = std::fmod(static_cast<double>(degrees), 360.0);
  if (turn < 0.0) turn += 360.0;
  if (turn == 0.0) return image;
  if (std::fmod(turn, 90.0) == 0.0) {
    const int quarters = static_cast<int>(turn / 90.0);
    if (quarters == 2 || image.width == image.height) return quarter_turns(image, quarters);
  }
  const double theta = turn * std::numbers::pi / 180.0;
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const double cx = (static_cast<double>(image.width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(image.height) - 1.0) / 2.0;
  return warp_bilinear(image, [&](double x, double y) {
    const double ox = x - cx;
    const double oy = y - cy;
    return std::pair{cx + ox * cs - oy * sn, cy + ox * sn + oy * cs};
  });
}

Image adjust_color(const Image& image, float brightness_scale, float contrast_scale) {
  if (!(brightness_scale >= 0.0f) || !(contrast_scale >= 0.0f)) {
    throw ParameterError("adjust_color: scales must be non-negative");
  }
  std::array<std::uint8_t, 256> lut{};
  for (int v = 0; v < 256; ++v) {
    const double stretched = (static_cast<double>(v) - 128.0) * contrast_scale + 128.0;
    lut[static_cast<std::size_t>(v)] = clamp_round(stretched * brightness_scale);
  }
  Image out = image;
  for (auto& p : out.pixels) p = lut[p];
  return out;
}

Image shift_shear(const Image& image, float dx_fraction, float dy_fraction, float shear_factor) {
  if (!(std::abs(dx_fraction) <= 1.0f) || !(std::abs(dy_fraction) <= 1.0f)) {
    throw ParameterError("shift_shear: shift fractions must lie in [-1, 1]");
  }
  if (!std::isfinite(shear_factor)) throw ParameterError("shift_shear: shear must be finite");
  const double tx = static_cast<double>(dx_fraction) * static_cast<double>(image.width);
  const double ty = static_cast<double>(dy_fraction) * static_cast<double>(image.height);
  const double cy = (static_cast<double>(image.height) - 1.0) / 2.0;
  return warp_bilinear(image, [&](double x, double y) {
    return std::pair{x - tx - static_cast<double>(shear_factor) * (y - cy), y - ty};
  });
}

std::vector<Image> apply_plan(const AugmentPlan& plan, const Image& image) {
  std::vector<Image> out;
  out.reserve(plan.ops.size());
  for (std::size_t i = 0; i < plan.ops.size(); ++i) {
    Draw draw(plan.seed, i);
    out.push_back(std::visit(
        [&](const auto& op) -> Image {
          using Op = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<Op, FlipOp>) {
            return hflip(image);
          } else if constexpr (std::is_same_v<Op, RotateOp>) {
            return rotate(image, draw(op.degrees));
          } else if constexpr (std::is_same_v<Op, ColorOp>) {
            const float b = draw(op.brightness);
            const float c = draw(op.contrast);
            return adjust_color(image, b, c);
          } else if constexpr (std::is_same_v<Op, ShiftOp>) {
            const float dx = draw(op.dx);
            const float dy = draw(op.dy);
            return shift_shear(image, dx, dy, 0.0f);
          } else {
            return shift_shear(image, 0.0f, 0.0f, draw(op.factor));
          }
        },
        plan.ops[i]));
  }
  return out;
}

json plan_to_json(const AugmentPlan& plan) {
  json ops = json::array();
  for (const AugmentOp& op : plan.ops) {
    std::visit(
        [&](const auto& o) {
          using Op = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<Op, FlipOp>) {
            ops.push_back(json{{"flip", true}});
          } else if constexpr (std::is_same_v<Op, RotateOp>) {
            ops.push_back(json{{"rotate", range_to_json(o.degrees)}});
          } else if constexpr (std::is_same_v<Op, ColorOp>) {
            ops.push_back(json{{"color",
                                {{"brightness", range_to_json(o.brightness)},
                                 {"contrast", range_to_json(o.contrast)}}}});
          } else if constexpr (std::is_same_v<Op, ShiftOp>) {
            ops.push_back(
                json{{"shift", {{"dx", range_to_json(o.dx)}, {"dy", range_to_json(o.dy)}}}});
          } else {
            ops.push_back(json{{"shear", range_to_json(o.factor)}});
          }
        },
        op);
  }
  if (plan.seed == 0) return ops;
  return json{{"seed", plan.seed}, {"ops", std::move(ops)}};
}

AugmentPlan plan_from_json(const json& value) {
  AugmentPlan plan;
  const json* ops = &value;
  if (value.is_object()) {
    const auto seed = value.find("seed");
    const auto list = value.find("ops");
    if (list == value.end()) throw ParameterError("augment plan object needs \"ops\"");
    if (seed != value.end()) {
      if (!seed->is_number_unsigned()) throw ParameterError("augment seed must be unsigned");
      plan.seed = seed->get<std::uint64_t>();
    }
    ops = &*list;
  }
  if (!ops->is_array()) throw ParameterError("augment plan must be a JSON array of descriptors");
  for (const json& d : *ops) {
    if (!d.is_object() || d.size() != 1) {
      throw ParameterError("augment descriptor must be an object with one key: " + d.dump());
    }
    const std::string& key = d.begin().key();
    const json& arg = d.begin().value();
    if (key == "flip") {
      if (arg != true) throw ParameterError("flip descriptor must be {\"flip\":true}");
      plan.ops.emplace_back(FlipOp{});
    } else if (key == "rotate") {
      plan.ops.emplace_back(RotateOp{range_from_json(arg, "rotate")});
    } else if (key == "color") {
      if (!arg.is_object()) throw ParameterError("color descriptor needs an object");
      plan.ops.emplace_back(ColorOp{field(arg, "brightness", 1.0f, "color.brightness"),
                                    field(arg, "contrast", 1.0f, "color.contrast")});
    } else if (key == "shift") {
      if (!arg.is_object()) throw ParameterError("shift descriptor needs an object");
      ShiftOp op{field(arg, "dx", 0.0f, "shift.dx"), field(arg, "dy", 0.0f, "shift.dy")};
      for (const ParamRange* r : {&op.dx, &op.dy}) {
        if (std::abs(r->lo) > 1.0f || std::abs(r->hi) > 1.0f) {
          throw ParameterError("shift fractions must lie in [-1, 1]");
        }
      }
      plan.ops.emplace_back(op);
    } else if (key == "shear") {
      plan.ops.emplace_back(ShearOp{range_from_json(arg, "shear")});
    } else {
      throw ParameterError("unknown augment descriptor '" + key + "'");
    }
  }
  return plan;
}

}  // namespace maskpipe
