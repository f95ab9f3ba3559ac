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

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "maskpipe/image.hpp"
#include "maskpipe/kernels.hpp"
#include "maskpipe/tensor.hpp"
#include "maskpipe/weights.hpp"

namespace maskpipe {

inline constexpr const char* kMobileNetV2Arch = "mobilenetv2";
inline constexpr std::size_t kInputSize = 224;
inline constexpr double kBatchNormEps = 1e-3;

enum class LayerKind { conv, depthwise, affine, relu6, residual_add, gap, dense, softmax };
inline constexpr std::size_t kLayerKindCount = 8;

const char* to_string(LayerKind kind);

struct LayerParams {
  std::size_t channels = 0;  // output channels (conv) or units (dense)
  std::size_t kernel = 1;
  std::size_t stride = 1;
  Padding padding = Padding::same;
};

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::relu6;
  LayerParams params;
  std::vector<std::string> inputs;  // "input" names the graph input
};

/// Named parameter tensor a layer expects to find in a weight archive.
struct ParamSpec {
  std::string name;
  std::vector<std::size_t> shape;
  std::string layer;
};

/// Channel plan entry of the inverted-residual backbone.
struct BottleneckStage {
  std::size_t expansion;
  std::size_t channels;
  std::size_t repeats;
  std::size_t stride;
};

inline constexpr std::array<BottleneckStage, 7> kMobileNetV2Stages{{
    {1, 16, 1, 1},
    {6, 24, 2, 2},
    {6, 32, 3, 2},
    {6, 64, 4, 2},
    {6, 96, 3, 1},
    {6, 160, 3, 2},
    {6, 320, 1, 1},
}};

class ModelGraph {
 public:
  std::string arch = kMobileNetV2Arch;
  std::vector<LayerSpec> layers;
  Shape input_shape{1, 3, kInputSize, kInputSize};
  std::vector<std::string> class_names;
  double eps = kBatchNormEps;

  /// Throws ShapeError / ParameterError if the graph is not a valid topologically
  /// ordered DAG with a single terminal softmax.
  void validate() const;

  /// Output shape of every layer (aligned with layers) for the given input.
  std::vector<Shape> infer_shapes(const Shape& input) const;
  std::vector<Shape> infer_shapes() const { return infer_shapes(input_shape); }

  /// Canonical parameter list; batch-norm layers appear as gamma/beta/mean/var.
  std::vector<ParamSpec> parameters() const;

  std::size_t index_of(const std::string& layer_name) const;
  std::size_t num_classes() const;
};

/// MobileNetV2 backbone plus the classification head
/// gap -> dense(head_units) -> relu6 -> dense(num_classes) -> softmax.
ModelGraph build_mobilenetv2(std::size_t num_classes, float width_multiplier = 1.0f,
                             std::size_t head_units = 128);

/// MobileNetV2 graph whose class count, head width and width multiplier match the
/// archive's tensors. Falls back to width 1.0 when no standard multiplier fits, leaving
/// bind to report the mismatch.
ModelGraph graph_for_archive(const WeightArchive& archive);

/// Channel count rounded to a multiple of 8, never dropping below 90% of the target.
std::size_t make_divisible(double value, std::size_t divisor = 8);

/// Archive with deterministic pseudo-random parameters for every graph tensor.
WeightArchive make_random_archive(const ModelGraph& graph, std::uint64_t seed);

struct ClassScores {
  std::vector<float> probabilities;
  std::size_t argmax = 0;
  std::string argmax_label;
};

/// Accumulated wall time per layer kind.
struct LayerTimings {
  std::array<std::chrono::nanoseconds, kLayerKindCount> per_kind{};
  std::array<std::size_t, kLayerKindCount> calls{};

  void merge(const LayerTimings& other);
  std::chrono::nanoseconds total() const;
};

/// A graph with every parameter resolved and batch norm folded. Immutable once
/// built, so concurrent classify calls are safe.
class Model {
 public:
  const ModelGraph& graph() const { return graph_; }
  const std::vector<std::string>& class_names() const { return graph_.class_names; }

  /// Final softmax output for an input of exactly graph().input_shape.
  Tensor forward(const Tensor& input, LayerTimings* timings = nullptr) const;

  /// Every layer's output, aligned with graph().layers.
  std::vector<Tensor> trace(const Tensor& input) const;

  ClassScores classify(const Tensor& input, LayerTimings* timings = nullptr) const;

 private:
  friend Model bind(const ModelGraph& graph, const WeightArchive& archive);

  struct BoundLayer {
    LayerKind kind;
    LayerParams params;
    std::vector<std::size_t> inputs;  // layer indices; kGraphInput for the input
    std::size_t last_use = 0;         // last layer index that reads this output
    Tensor weight;
    std::vector<float> bias;  // bias, or affine shift
    std::vector<float> scale;
  };

  static constexpr std::size_t kGraphInput = static_cast<std::size_t>(-1);

  std::vector<Tensor> execute(const Tensor& input, LayerTimings* timings,
                              bool keep_all) const;

  ModelGraph graph_;
  std::vector<BoundLayer> layers_;
};

/// Resolves every graph parameter against the archive. Batch-norm layers accept either
/// gamma/beta/mean/var (folded with the archive eps) or pre-folded scale/shift.
Model bind(const ModelGraph& graph, const WeightArchive& archive);

/// Bilinear resize (half-pixel centres) to target x target, then x / 127.5 - 1,
/// as a [1, 3, target, target] RGB tensor.
Tensor preprocess(const Image& image, std::size_t target = kInputSize);

}  // namespace maskpipe
