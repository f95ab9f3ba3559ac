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
#include "maskpipe/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "maskpipe/errors.hpp"

namespace maskpipe {
namespace {

// Columns of B processed per pass; keeps a K x kTile panel of B hot in cache.
constexpr std::size_t kTile = 128;
// Output rows accumulated together so each loaded B value is reused.
constexpr std::size_t kRows = 4;

// C[m, :] = bias[m] + sum_k A[m, k] * B[k, :]. A is [M, K], B is [K, N], C is [M, N].
// Each output is accumulated in ascending k, independent of blocking.
void gemm_bias(std::span<const float> a, std::span<const float> b, std::span<const float> bias,
               std::span<float> c, std::size_t m_dim, std::size_t k_dim, std::size_t n_dim) {
  std::array<std::array<float, kTile>, kRows> acc{};
  for (std::size_t j0 = 0; j0 < n_dim; j0 += kTile) {
    const std::size_t width = std::min(kTile, n_dim - j0);
    for (std::size_t m0 = 0; m0 < m_dim; m0 += kRows) {
      const std::size_t rows = std::min(kRows, m_dim - m0);
      for (std::size_t r = 0; r < rows; ++r) {
        std::fill_n(acc[r].begin(), width, bias.empty() ? 0.0f : bias[m0 + r]);
      }
      if (rows == kRows) {
        const float* a0 = a.data() + (m0 + 0) * k_dim;
        const float* a1 = a.data() + (m0 + 1) * k_dim;
        const float* a2 = a.data() + (m0 + 2) * k_dim;
        const float* a3 = a.data() + (m0 + 3) * k_dim;
        float* c0 = acc[0].data();
        float* c1 = acc[1].data();
        float* c2 = acc[2].data();
        float* c3 = acc[3].data();
        for (std::size_t k = 0; k < k_dim; ++k) {
          const float* brow = b.data() + k * n_dim + j0;
          const float w0 = a0[k], w1 = a1[k], w2 = a2[k], w3 = a3[k];
          for (std::size_t j = 0; j < width; ++j) {
            const float v = brow[j];
            c0[j] += w0 * v;
            c1[j] += w1 * v;
            c2[j] += w2 * v;
            c3[j] += w3 * v;
          }
        }
      } else {
        for (std::size_t r = 0; r < rows; ++r) {
          const float* ar = a.data() + (m0 + r) * k_dim;
          float* cr = acc[r].data();
          for (std::size_t k = 0; k < k_dim; ++k) {
            const float* brow = b.data() + k * n_dim + j0;
            const float w = ar[k];
            for (std::size_t j = 0; j < width; ++j) cr[j] += w * brow[j];
          }
        }
      }
      for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(acc[r].begin(), width, c.data() + (m0 + r) * n_dim + j0);
      }
    }
  }
}

void require_channels(std::span<const float> v, std::size_t c, const char* op,
                      const char* what) {
  if (v.size() != c) {
    throw ShapeError(std::string(op) + ": " + what + " has " + std::to_string(v.size()) +
                     " entries, expected " + std::to_string(c));
  }
}

}  // namespace

const char* to_string(Padding padding) {
  return padding == Padding::same ? "same" : "valid";
}

AxisGeometry axis_geometry(std::size_t in, std::size_t kernel, std::size_t stride,
                           Padding padding) {
  if (stride == 0) throw ParameterError("stride must be positive");
  if (kernel == 0) throw ShapeError("kernel extent must be positive");
  AxisGeometry g;
  if (padding == Padding::same) {
    g.out = (in + stride - 1) / stride;
    const std::size_t needed = g.out == 0 ? 0 : (g.out - 1) * stride + kernel;
    const std::size_t total = needed > in ? needed - in : 0;
    g.pad_begin = total / 2;
  } else {
    g.out = in >= kernel ? (in - kernel) / stride + 1 : 0;
    g.pad_begin = 0;
  }
  return g;
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
              std::size_t stride, Padding padding) {
  const Shape& is = input.shape();
  const Shape& ks = kernel.shape();
  if (ks.c != is.c) {
    throw ShapeError("conv2d: kernel " + to_string(ks) + " expects " + std::to_string(ks.c) +
                     " input channels, input is " + to_string(is));
  }
  require_channels(bias, ks.n, "conv2d", "bias");
  const AxisGeometry gy = axis_geometry(is.h, ks.h, stride, padding);
  const AxisGeometry gx = axis_geometry(is.w, ks.w, stride, padding);
  if (gy.out == 0 || gx.out == 0) {
    throw ShapeError("conv2d: empty output for input " + to_string(is) + " and kernel " +
                     to_string(ks));
  }
  const Shape os{is.n, ks.n, gy.out, gx.out};
  Tensor out(os);
  const std::size_t positions = os.h * os.w;
  const std::size_t k_dim = ks.c * ks.h * ks.w;
  const bool pointwise = ks.h == 1 && ks.w == 1 && stride == 1;

  std::vector<float> columns;
  if (!pointwise) columns.resize(k_dim * positions);

  for (std::size_t n = 0; n < is.n; ++n) {
    std::span<const float> rhs;
    if (pointwise) {
      rhs = input.data().subspan(n * is.c * is.plane(), is.c * is.plane());
    } else {
      // Patch matrix: row (i, dy, dx), column (y, x); out-of-bounds taps are zero.
      std::size_t row = 0;
      for (std::size_t i = 0; i < ks.c; ++i) {
        const auto src = input.plane(n, i);
        for (std::size_t dy = 0; dy < ks.h; ++dy) {
          for (std::size_t dx = 0; dx < ks.w; ++dx, ++row) {
            float* dst = columns.data() + row * positions;
            for (std::size_t y = 0; y < os.h; ++y) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * stride + dy) -
                                        static_cast<std::ptrdiff_t>(gy.pad_begin);
              float* drow = dst + y * os.w;
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(is.h)) {
                std::fill_n(drow, os.w, 0.0f);
                continue;
              }
              const float* srow = src.data() + static_cast<std::size_t>(iy) * is.w;
              for (std::size_t x = 0; x < os.w; ++x) {
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x * stride + dx) -
                                          static_cast<std::ptrdiff_t>(gx.pad_begin);
                drow[x] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(is.w))
                              ? 0.0f
                              : srow[static_cast<std::size_t>(ix)];
              }
            }
          }
        }
      }
      rhs = columns;
    }
    gemm_bias(kernel.data(), rhs, bias,
              out.data().subspan(n * os.c * positions, os.c * positions), os.c, k_dim,
              positions);
  }
  return out;
}

Tensor depthwise_conv2d(const Tensor& input, const Tensor& kernel,
                        std::span<const float> bias, std::size_t stride, Padding padding) {
  const Shape& is = input.shape();
  const Shape& ks = kernel.shape();
  if (ks.n != is.c || ks.c != 1) {
    throw ShapeError("depthwise_conv2d: kernel " + to_string(ks) + " does not match input " +
                     to_string(is) + " (expected [" + std::to_string(is.c) + ",1,kh,kw])");
  }
  require_channels(bias, is.c, "depthwise_conv2d", "bias");
  const AxisGeometry gy = axis_geometry(is.h, ks.h, stride, padding);
  const AxisGeometry gx = axis_geometry(is.w, ks.w, stride, padding);
  if (gy.out == 0 || gx.out == 0) {
    throw ShapeError("depthwise_conv2d: empty output for input " + to_string(is));
  }
  const Shape os{is.n, is.c, gy.out, gx.out};
  Tensor out(os);
  const auto pad_x = static_cast<std::ptrdiff_t>(gx.pad_begin);
  const auto pad_y = static_cast<std::ptrdiff_t>(gy.pad_begin);
  const auto s = static_cast<std::ptrdiff_t>(stride);
  const auto out_w = static_cast<std::ptrdiff_t>(os.w);
  const auto in_w = static_cast<std::ptrdiff_t>(is.w);

  // Valid output column range for each horizontal tap offset.
  std::vector<std::pair<std::size_t, std::size_t>> x_range(ks.w);
  for (std::size_t dx = 0; dx < ks.w; ++dx) {
    const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(dx) - pad_x;
    // need 0 <= x*s + off < in_w
    std::ptrdiff_t lo = off >= 0 ? 0 : (-off + s - 1) / s;
    std::ptrdiff_t hi = in_w - off <= 0 ? 0 : (in_w - off - 1) / s + 1;
    lo = std::min(lo, out_w);
    hi = std::clamp(hi, lo, out_w);
    x_range[dx] = {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
  }

  for (std::size_t n = 0; n < is.n; ++n) {
    for (std::size_t c = 0; c < is.c; ++c) {
      const auto src = input.plane(n, c);
      const auto taps = kernel.plane(c, 0);
      auto dst = out.plane(n, c);
      for (std::size_t y = 0; y < os.h; ++y) {
        float* drow = dst.data() + y * os.w;
        std::fill_n(drow, os.w, bias[c]);
        for (std::size_t dy = 0; dy < ks.h; ++dy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y) * s +
                                    static_cast<std::ptrdiff_t>(dy) - pad_y;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(is.h)) continue;
          const float* srow = src.data() + static_cast<std::size_t>(iy) * is.w;
          for (std::size_t dx = 0; dx < ks.w; ++dx) {
            const float k = taps[dy * ks.w + dx];
            const auto [lo, hi] = x_range[dx];
            const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(dx) - pad_x;
            if (stride == 1) {
              for (std::size_t x = lo; x < hi; ++x) {
                drow[x] += k * srow[static_cast<std::ptrdiff_t>(x) + off];
              }
            } else {
              for (std::size_t x = lo; x < hi; ++x) {
                drow[x] += k * srow[static_cast<std::ptrdiff_t>(x) * s + off];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor affine_channel(const Tensor& input, std::span<const float> scale,
                      std::span<const float> shift) {
  const Shape& s = input.shape();
  require_channels(scale, s.c, "affine_channel", "scale");
  require_channels(shift, s.c, "affine_channel", "shift");
  Tensor out(s);
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const auto src = input.plane(n, c);
      auto dst = out.plane(n, c);
      const float a = scale[c];
      const float b = shift[c];
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * a + b;
    }
  }
  return out;
}

Tensor relu6(const Tensor& input) {
  Tensor out(input.shape());
  const auto src = input.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::min(std::max(src[i], 0.0f), 6.0f);
  return out;
}

Tensor add(const Tensor& lhs, const Tensor& rhs) {
  if (lhs.shape() != rhs.shape()) {
    throw ShapeError("add: shapes differ, " + to_string(lhs.shape()) + " vs " +
                     to_string(rhs.shape()));
  }
  Tensor out(lhs.shape());
  const auto a = lhs.data();
  const auto b = rhs.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a[i] + b[i];
  return out;
}

Tensor global_avg_pool(const Tensor& input) {
  const Shape& s = input.shape();
  if (s.plane() == 0) throw ShapeError("global_avg_pool: empty spatial extent " + to_string(s));
  Tensor out(Shape{s.n, s.c, 1, 1});
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      double sum = 0.0;
      for (const float v : input.plane(n, c)) sum += v;
      out.at(n, c, 0, 0) = static_cast<float>(sum / static_cast<double>(s.plane()));
    }
  }
  return out;
}

Tensor dense(const Tensor& input, std::span<const float> weights, std::span<const float> bias) {
  const Shape& s = input.shape();
  if (s.h != 1 || s.w != 1) {
    throw ShapeError("dense: expected [n,c,1,1] input, got " + to_string(s));
  }
  const std::size_t out_dim = bias.size();
  if (out_dim == 0 || weights.size() != out_dim * s.c) {
    throw ShapeError("dense: weights of " + std::to_string(weights.size()) +
                     " entries do not form [" + std::to_string(out_dim) + "," +
                     std::to_string(s.c) + "]");
  }
  Tensor out(Shape{s.n, out_dim, 1, 1});
  for (std::size_t n = 0; n < s.n; ++n) {
    const float* x = input.data().data() + n * s.c;
    for (std::size_t o = 0; o < out_dim; ++o) {
      const float* w = weights.data() + o * s.c;
      float acc = bias[o];
      for (std::size_t i = 0; i < s.c; ++i) acc += w[i] * x[i];
      out.at(n, o, 0, 0) = acc;
    }
  }
  return out;
}

Tensor softmax(const Tensor& input) {
  const Shape& s = input.shape();
  if (s.h != 1 || s.w != 1 || s.c == 0) {
    throw ShapeError("softmax: expected [n,c,1,1] input with c >= 1, got " + to_string(s));
  }
  Tensor out(s);
  for (std::size_t n = 0; n < s.n; ++n) {
    const float* x = input.data().data() + n * s.c;
    float* y = out.data().data() + n * s.c;
    const float peak = *std::max_element(x, x + s.c);
    double total = 0.0;
    for (std::size_t i = 0; i < s.c; ++i) {
      const double e = std::exp(static_cast<double>(x[i]) - static_cast<double>(peak));
      total += e;
    }
    for (std::size_t i = 0; i < s.c; ++i) {
      y[i] = static_cast<float>(
          std::exp(static_cast<double>(x[i]) - static_cast<double>(peak)) / total);
    }
  }
  return out;
}

FoldedAffine fold_batch_norm(std::span<const float> gamma, std::span<const float> beta,
                             std::span<const float> mean, std::span<const float> var,
                             double eps) {
  const std::size_t c = gamma.size();
  require_channels(beta, c, "fold_batch_norm", "beta");
  require_channels(mean, c, "fold_batch_norm", "mean");
  require_channels(var, c, "fold_batch_norm", "var");
  FoldedAffine folded{std::vector<float>(c), std::vector<float>(c)};
  for (std::size_t i = 0; i < c; ++i) {
    const double denom = static_cast<double>(var[i]) + eps;
    if (!(denom > 0.0)) {
      throw ParameterError("fold_batch_norm: var + eps must be positive at channel " +
                           std::to_string(i));
    }
    const double scale = static_cast<double>(gamma[i]) / std::sqrt(denom);
    folded.scale[i] = static_cast<float>(scale);
    folded.shift[i] = static_cast<float>(static_cast<double>(beta[i]) -
                                         static_cast<double>(mean[i]) * scale);
  }
  return folded;
}

}  // namespace maskpipe
