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
// Independent reference implementations used only by tests. These are written
// straight from the defining formulas and share no code with the library kernels.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "maskpipe/image.hpp"
#include "maskpipe/tensor.hpp"

namespace oracle {

struct Dims {
  std::size_t n, c, h, w;
};

// Leading pad for "same" (odd remainder goes after) or zero for "valid".
inline long same_pad_begin(long in, long k, long s) {
  const long out = (in + s - 1) / s;
  const long total = std::max(0L, (out - 1) * s + k - in);
  return total / 2;
}

inline long out_extent(long in, long k, long s, bool same) {
  return same ? (in + s - 1) / s : (in >= k ? (in - k) / s + 1 : 0);
}

// out[n,o,y,x] = b[o] + sum in[n,i,y*s+dy-pad, x*s+dx-pad] * k[o,i,dy,dx], zero outside.
inline std::vector<double> conv2d(const std::vector<float>& in, Dims id, const std::vector<float>& k,
                                  Dims kd, const std::vector<float>& bias, long s, bool same,
                                  Dims* od) {
  const long oh = out_extent(static_cast<long>(id.h), static_cast<long>(kd.h), s, same);
  const long ow = out_extent(static_cast<long>(id.w), static_cast<long>(kd.w), s, same);
  const long pt = same ? same_pad_begin(static_cast<long>(id.h), static_cast<long>(kd.h), s) : 0;
  const long pl = same ? same_pad_begin(static_cast<long>(id.w), static_cast<long>(kd.w), s) : 0;
  *od = Dims{id.n, kd.n, static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)};
  std::vector<double> out(id.n * kd.n * static_cast<std::size_t>(oh * ow));
  for (std::size_t n = 0; n < id.n; ++n)
    for (std::size_t o = 0; o < kd.n; ++o)
      for (long y = 0; y < oh; ++y)
        for (long x = 0; x < ow; ++x) {
          double acc = bias[o];
          for (std::size_t i = 0; i < id.c; ++i)
            for (long dy = 0; dy < static_cast<long>(kd.h); ++dy)
              for (long dx = 0; dx < static_cast<long>(kd.w); ++dx) {
                const long iy = y * s + dy - pt;
                const long ix = x * s + dx - pl;
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(id.h) || ix >= static_cast<long>(id.w)) continue;
                acc += static_cast<double>(in[((n * id.c + i) * id.h + iy) * id.w + ix]) *
                       k[((o * kd.c + i) * kd.h + dy) * kd.w + dx];
              }
          out[((n * kd.n + o) * oh + y) * ow + x] = acc;
        }
  return out;
}

inline std::vector<double> depthwise(const std::vector<float>& in, Dims id, const std::vector<float>& k,
                                     std::size_t kh, std::size_t kw, const std::vector<float>& bias,
                                     long s, bool same, Dims* od) {
  const long oh = out_extent(static_cast<long>(id.h), static_cast<long>(kh), s, same);
  const long ow = out_extent(static_cast<long>(id.w), static_cast<long>(kw), s, same);
  const long pt = same ? same_pad_begin(static_cast<long>(id.h), static_cast<long>(kh), s) : 0;
  const long pl = same ? same_pad_begin(static_cast<long>(id.w), static_cast<long>(kw), s) : 0;
  *od = Dims{id.n, id.c, static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)};
  std::vector<double> out(id.n * id.c * static_cast<std::size_t>(oh * ow));
  for (std::size_t n = 0; n < id.n; ++n)
    for (std::size_t c = 0; c < id.c; ++c)
      for (long y = 0; y < oh; ++y)
        for (long x = 0; x < ow; ++x) {
          double acc = bias[c];
          for (long dy = 0; dy < static_cast<long>(kh); ++dy)
            for (long dx = 0; dx < static_cast<long>(kw); ++dx) {
              const long iy = y * s + dy - pt;
              const long ix = x * s + dx - pl;
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(id.h) || ix >= static_cast<long>(id.w)) continue;
              acc += static_cast<double>(in[((n * id.c + c) * id.h + iy) * id.w + ix]) *
                     k[(c * kh + dy) * kw + dx];
            }
          out[((n * id.c + c) * oh + y) * ow + x] = acc;
        }
  return out;
}

inline std::vector<double> dense(const std::vector<float>& in, std::size_t batch, std::size_t c,
                                 const std::vector<float>& w, const std::vector<float>& b) {
  const std::size_t out_dim = b.size();
  std::vector<double> out(batch * out_dim);
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t o = 0; o < out_dim; ++o) {
      double acc = b[o];
      for (std::size_t i = 0; i < c; ++i) acc += static_cast<double>(w[o * c + i]) * in[n * c + i];
      out[n * out_dim + o] = acc;
    }
  return out;
}

// Mixed relative error |a - b| / max(1, |b|).
inline double rel_error(double actual, double expected) {
  return std::abs(actual - expected) / std::max(1.0, std::abs(expected));
}

inline std::vector<float> uniform(std::mt19937& rng, std::size_t count, float lo, float hi) {
  std::uniform_real_distribution<float> dist(lo, hi);
  std::vector<float> v(count);
  for (auto& x : v) x = dist(rng);
  return v;
}

inline maskpipe::Image random_image(std::mt19937& rng, std::size_t w, std::size_t h) {
  maskpipe::Image img(w, h);
  std::uniform_int_distribution<int> dist(0, 255);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(dist(rng));
  return img;
}

// Literal transcription of the frame-confirmation snippet, kept deliberately
// close to its original form (including the unreachable == -1 tests).
struct LiteralDebounce {
  long fn = 0;
  long tn = 0;
  std::string label;  // "" until first confirmation

  // Returns true when the alert fires.
  bool step(float mask, float withoutMask) {
    bool beep = false;
    if (mask < withoutMask) {
      fn += 1;
      if (fn > 2 || fn == -1) {
        label = "no mask";
        tn = 0;
      }
      if (fn == 4) beep = true;
    } else {
      tn += 1;
      if (tn > 2 || tn == -1) {
        label = "Mask";
        fn = 0;
      }
    }
    return beep;
  }
};

}  // namespace oracle
