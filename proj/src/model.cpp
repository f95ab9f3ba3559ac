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
#include "maskpipe/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include "maskpipe/errors.hpp"

namespace maskpipe {
namespace {

constexpr const char* kInputName = "input";

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

class GraphBuilder {
 public:
  explicit GraphBuilder(ModelGraph& graph) : graph_(graph) {}

  std::string add(std::string name, LayerKind kind, LayerParams params,
                  std::vector<std::string> inputs) {
    graph_.layers.push_back(LayerSpec{name, kind, params, std::move(inputs)});
    return name;
  }

  // conv -> batch norm -> optional relu6; the norm and activation are named base_bn, base_relu
  std::string conv_bn(const std::string& conv_name, const std::string& base,
                      const std::string& from, LayerKind kind, std::size_t channels,
                      std::size_t kernel, std::size_t stride, bool activate) {
    std::string x = add(conv_name, kind, {channels, kernel, stride, Padding::same}, {from});
    x = add(base + "_bn", LayerKind::affine, {}, {x});
    if (activate) x = add(base + "_relu", LayerKind::relu6, {}, {x});
    return x;
  }

 private:
  ModelGraph& graph_;
};

// Uniform floats on a 2^-24 grid from the (portable) 64-bit Mersenne twister.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : engine_(seed) {}

  float next(float lo, float hi) {
    const float unit = static_cast<float>(engine_() >> 40) * 0x1.0p-24f;
    return lo + (hi - lo) * unit;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::depthwise: return "depthwise";
    case LayerKind::affine: return "affine";
    case LayerKind::relu6: return "relu6";
    case LayerKind::residual_add: return "residual_add";
    case LayerKind::gap: return "gap";
    case LayerKind::dense: return "dense";
    case LayerKind::softmax: return "softmax";
  }
  return "unknown";
}

std::size_t make_divisible(double value, std::size_t divisor) {
  const auto d = static_cast<double>(divisor);
  auto rounded = static_cast<std::size_t>(std::max(d, std::floor(value + d / 2.0) / d * d));
  rounded -= rounded % divisor;
  if (static_cast<double>(rounded) < 0.9 * value) rounded += divisor;
  return rounded;
}

ModelGraph build_mobilenetv2(std::size_t num_classes, float width_multiplier,
                             std::size_t head_units) {
  if (num_classes < 2) throw ParameterError("num_classes must be at least 2");
  if (!(width_multiplier > 0.0f) || !std::isfinite(width_multiplier)) {
    throw ParameterError("width_multiplier must be positive");
  }
  if (head_units == 0) throw ParameterError("head_units must be positive");

  ModelGraph graph;
  graph.class_names = {"with_mask", "without_mask"};
  for (std::size_t i = 2; i < num_classes; ++i) graph.class_names.push_back("class_" + std::to_string(i));
  if (num_classes == 3) graph.class_names[2] = "mask_incorrect";

  GraphBuilder b(graph);
  const double alpha = width_multiplier;
  std::size_t channels = make_divisible(32.0 * alpha);
  std::string x =
      b.conv_bn("stem_conv", "stem", kInputName, LayerKind::conv, channels, 3, 2, true);

  std::size_t block = 0;
  for (const BottleneckStage& stage : kMobileNetV2Stages) {
    const std::size_t out_channels = make_divisible(static_cast<double>(stage.channels) * alpha);
    for (std::size_t r = 0; r < stage.repeats; ++r, ++block) {
      const std::size_t stride = r == 0 ? stage.stride : 1;
      const std::string prefix = "block_" + std::to_string(block);
      const std::string block_input = x;
      if (stage.expansion != 1) {
        x = b.conv_bn(prefix + "_expand", prefix + "_expand", x, LayerKind::conv,
                      channels * stage.expansion, 1, 1, true);
      }
      const std::size_t hidden = stage.expansion != 1 ? channels * stage.expansion : channels;
      x = b.conv_bn(prefix + "_depthwise", prefix + "_depthwise", x, LayerKind::depthwise, hidden,
                    3, stride, true);
      x = b.conv_bn(prefix + "_project", prefix + "_project", x, LayerKind::conv, out_channels, 1,
                    1, false);
      if (stride == 1 && channels == out_channels) {
        x = b.add(prefix + "_add", LayerKind::residual_add, {}, {block_input, x});
      }
      channels = out_channels;
    }
  }

  const std::size_t last = alpha > 1.0 ? make_divisible(1280.0 * alpha) : 1280;
  x = b.conv_bn("head_conv", "head", x, LayerKind::conv, last, 1, 1, true);
  x = b.add("pool", LayerKind::gap, {}, {x});
  x = b.add("fc1", LayerKind::dense, {head_units, 1, 1, Padding::valid}, {x});
  x = b.add("fc1_relu", LayerKind::relu6, {}, {x});
  x = b.add("fc2", LayerKind::dense, {num_classes, 1, 1, Padding::valid}, {x});
  b.add("softmax", LayerKind::softmax, {}, {x});

  graph.validate();
  return graph;
}

ModelGraph graph_for_archive(const WeightArchive& archive) {
  const std::size_t classes = std::max<std::size_t>(archive.class_names.size(), 2);
  std::size_t head_units = 128;
  if (const TensorEntry* fc1 = archive.find("fc1.weight"); fc1 && !fc1->shape.empty()) {
    head_units = std::max<std::size_t>(fc1->shape[0], 1);
  }
  for (const float width : {1.0f, 0.75f, 0.5f, 0.35f, 1.3f, 1.4f}) {
    ModelGraph graph = build_mobilenetv2(classes, width, head_units);
    const auto params = graph.parameters();
    const bool fits = std::all_of(params.begin(), params.end(), [&](const ParamSpec& p) {
      const TensorEntry* e = archive.find(p.name);
      if (e == nullptr) {
        // Batch-norm layers may be stored pre-folded.
        const auto dot = p.name.rfind('.');
        e = archive.find(p.name.substr(0, dot) + ".scale");
        return e != nullptr && e->shape == p.shape;
      }
      return e->shape == p.shape;
    });
    if (fits) return graph;
  }
  return build_mobilenetv2(classes, 1.0f, head_units);
}

std::size_t ModelGraph::index_of(const std::string& layer_name) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].name == layer_name) return i;
  }
  throw ParameterError("graph has no layer '" + layer_name + "'");
}

std::size_t ModelGraph::num_classes() const {
  const auto shapes = infer_shapes();
  return shapes.back().c;
}

void ModelGraph::validate() const {
  if (layers.empty()) throw ParameterError("graph has no layers");
  std::set<std::string> seen;
  std::size_t softmax_count = 0;
  for (const LayerSpec& layer : layers) {
    if (layer.name.empty() || layer.name == kInputName || !seen.insert(layer.name).second) {
      throw ParameterError("layer name '" + layer.name + "' is empty, reserved or repeated");
    }
    const std::size_t arity = layer.kind == LayerKind::residual_add ? 2 : 1;
    if (layer.inputs.size() != arity) {
      throw ParameterError("layer '" + layer.name + "' expects " + std::to_string(arity) +
                           " input(s)");
    }
    for (const std::string& in : layer.inputs) {
      if (in != kInputName && (!seen.contains(in) || in == layer.name)) {
        throw ParameterError("layer '" + layer.name + "' reads '" + in +
                             "' before it is defined");
      }
    }
    if (layer.kind == LayerKind::softmax) ++softmax_count;
  }
  if (softmax_count != 1 || layers.back().kind != LayerKind::softmax) {
    throw ParameterError("graph must end in exactly one softmax layer");
  }
  infer_shapes();
}

std::vector<Shape> ModelGraph::infer_shapes(const Shape& input) const {
  std::unordered_map<std::string, Shape> known{{kInputName, input}};
  std::vector<Shape> shapes;
  shapes.reserve(layers.size());
  for (const LayerSpec& layer : layers) {
    const Shape in = known.at(layer.inputs.front());
    const LayerParams& p = layer.params;
    Shape out = in;
    switch (layer.kind) {
      case LayerKind::conv:
      case LayerKind::depthwise: {
        const auto gy = axis_geometry(in.h, p.kernel, p.stride, p.padding);
        const auto gx = axis_geometry(in.w, p.kernel, p.stride, p.padding);
        if (gy.out == 0 || gx.out == 0) {
          throw ShapeError("layer '" + layer.name + "' produces an empty output from " +
                           to_string(in));
        }
        if (layer.kind == LayerKind::depthwise && p.channels != in.c) {
          throw ShapeError("depthwise layer '" + layer.name + "' declares " +
                           std::to_string(p.channels) + " channels, input has " +
                           std::to_string(in.c));
        }
        out = Shape{in.n, p.channels, gy.out, gx.out};
        break;
      }
      case LayerKind::residual_add: {
        const Shape other = known.at(layer.inputs[1]);
        if (other != in) {
          throw ShapeError("residual '" + layer.name + "' joins " + to_string(in) + " and " +
                           to_string(other));
        }
        break;
      }
      case LayerKind::gap:
        out = Shape{in.n, in.c, 1, 1};
        break;
      case LayerKind::dense:
        if (in.h != 1 || in.w != 1) {
          throw ShapeError("dense layer '" + layer.name + "' needs a pooled input, got " +
                           to_string(in));
        }
        out = Shape{in.n, p.channels, 1, 1};
        break;
      case LayerKind::softmax:
        if (in.h != 1 || in.w != 1) {
          throw ShapeError("softmax '" + layer.name + "' needs [n,c,1,1], got " + to_string(in));
        }
        break;
      case LayerKind::affine:
      case LayerKind::relu6:
        break;
    }
    known[layer.name] = out;
    shapes.push_back(out);
  }
  return shapes;
}

std::vector<ParamSpec> ModelGraph::parameters() const {
  const auto shapes = infer_shapes();
  std::unordered_map<std::string, Shape> known{{kInputName, input_shape}};
  for (std::size_t i = 0; i < layers.size(); ++i) known[layers[i].name] = shapes[i];

  std::vector<ParamSpec> params;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& layer = layers[i];
    const Shape in = known.at(layer.inputs.front());
    const std::size_t k = layer.params.kernel;
    const std::size_t out = shapes[i].c;
    auto push = [&](const char* suffix, std::vector<std::size_t> shape) {
      params.push_back(ParamSpec{layer.name + "." + suffix, std::move(shape), layer.name});
    };
    switch (layer.kind) {
      case LayerKind::conv:
        push("weight", {out, in.c, k, k});
        push("bias", {out});
        break;
      case LayerKind::depthwise:
        push("weight", {in.c, 1, k, k});
        push("bias", {in.c});
        break;
      case LayerKind::affine:
        push("gamma", {in.c});
        push("beta", {in.c});
        push("mean", {in.c});
        push("var", {in.c});
        break;
      case LayerKind::dense:
        push("weight", {out, in.c});
        push("bias", {out});
        break;
      default:
        break;
    }
  }
  return params;
}

WeightArchive make_random_archive(const ModelGraph& graph, std::uint64_t seed) {
  WeightArchive archive;
  archive.arch = graph.arch;
  archive.input_shape = {graph.input_shape.n, graph.input_shape.c, graph.input_shape.h,
                         graph.input_shape.w};
  archive.class_names = graph.class_names;
  archive.eps = graph.eps;
  UniformSource rng(seed);
  for (const ParamSpec& p : graph.parameters()) {
    std::vector<float> values(
        std::accumulate(p.shape.begin(), p.shape.end(), std::size_t{1}, std::multiplies<>()));
    const std::string suffix = p.name.substr(p.name.rfind('.') + 1);
    float lo = -0.1f, hi = 0.1f;
    if (suffix == "weight") {
      std::size_t fan_in = 1;
      for (std::size_t d = 1; d < p.shape.size(); ++d) fan_in *= p.shape[d];
      const float a = std::sqrt(3.0f / static_cast<float>(fan_in));
      lo = -a;
      hi = a;
    } else if (suffix == "gamma") {
      lo = 0.8f;
      hi = 1.2f;
    } else if (suffix == "var") {
      lo = 0.5f;
      hi = 1.5f;
    }
    for (float& v : values) v = rng.next(lo, hi);
    archive.add(p.name, p.shape, values);
  }
  return archive;
}

void LayerTimings::merge(const LayerTimings& other) {
  for (std::size_t i = 0; i < kLayerKindCount; ++i) {
    per_kind[i] += other.per_kind[i];
    calls[i] += other.calls[i];
  }
}

std::chrono::nanoseconds LayerTimings::total() const {
  std::chrono::nanoseconds sum{0};
  for (const auto& t : per_kind) sum += t;
  return sum;
}

Model bind(const ModelGraph& graph, const WeightArchive& archive) {
  graph.validate();
  if (archive.arch != graph.arch) {
    throw BindError("archive architecture '" + archive.arch + "' does not match graph '" +
                    graph.arch + "'");
  }
  const std::vector<std::size_t> graph_input{graph.input_shape.n, graph.input_shape.c,
                                             graph.input_shape.h, graph.input_shape.w};
  if (archive.input_shape != graph_input) {
    throw BindError("archive input shape " + shape_string(archive.input_shape) +
                    " does not match graph input " + shape_string(graph_input));
  }
  const auto shapes = graph.infer_shapes();
  if (archive.class_names.size() != shapes.back().c) {
    throw BindError("archive lists " + std::to_string(archive.class_names.size()) +
                    " classes, graph produces " + std::to_string(shapes.back().c));
  }
  if (!(archive.eps >= 0.0) || !std::isfinite(archive.eps)) {
    throw BindError("archive eps must be a non-negative number");
  }

  std::unordered_map<std::string, std::vector<std::size_t>> expected;
  for (const ParamSpec& p : graph.parameters()) expected[p.name] = p.shape;

  auto fetch = [&](const LayerSpec& layer, const std::string& suffix,
                   const std::vector<std::size_t>& shape) -> std::span<const float> {
    const std::string name = layer.name + "." + suffix;
    const TensorEntry* entry = archive.find(name);
    if (entry == nullptr) {
      throw BindError("layer '" + layer.name + "': archive is missing tensor '" + name + "'");
    }
    if (entry->shape != shape) {
      throw BindError("layer '" + layer.name + "': tensor '" + name + "' has shape " +
                      shape_string(entry->shape) + ", graph expects " + shape_string(shape));
    }
    return archive.values(*entry);
  };

  Model model;
  model.graph_ = graph;
  model.graph_.class_names = archive.class_names;
  model.graph_.eps = archive.eps;

  std::unordered_map<std::string, std::size_t> index{{kInputName, Model::kGraphInput}};
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const LayerSpec& layer = graph.layers[i];
    Model::BoundLayer bound;
    bound.kind = layer.kind;
    bound.params = layer.params;
    for (const auto& in : layer.inputs) bound.inputs.push_back(index.at(in));
    auto shape_of = [&](const std::string& suffix) { return expected.at(layer.name + "." + suffix); };

    switch (layer.kind) {
      case LayerKind::conv:
      case LayerKind::depthwise:
      case LayerKind::dense: {
        const auto ws = shape_of("weight");
        const auto w = fetch(layer, "weight", ws);
        Shape kshape{ws[0], ws[1], ws.size() > 2 ? ws[2] : 1, ws.size() > 3 ? ws[3] : 1};
        bound.weight = Tensor(kshape, std::vector<float>(w.begin(), w.end()));
        const auto b = fetch(layer, "bias", shape_of("bias"));
        bound.bias.assign(b.begin(), b.end());
        break;
      }
      case LayerKind::affine: {
        const auto cs = shape_of("gamma");
        const bool has_stats = archive.find(layer.name + ".gamma") != nullptr;
        const bool has_folded = archive.find(layer.name + ".scale") != nullptr;
        if (has_stats && has_folded) {
          throw BindError("layer '" + layer.name +
                          "': archive holds both batch-norm statistics and folded scale/shift");
        }
        if (has_folded) {
          const auto s = fetch(layer, "scale", cs);
          const auto t = fetch(layer, "shift", cs);
          bound.scale.assign(s.begin(), s.end());
          bound.bias.assign(t.begin(), t.end());
        } else {
          FoldedAffine folded =
              fold_batch_norm(fetch(layer, "gamma", cs), fetch(layer, "beta", cs),
                              fetch(layer, "mean", cs), fetch(layer, "var", cs), archive.eps);
          bound.scale = std::move(folded.scale);
          bound.bias = std::move(folded.shift);
        }
        break;
      }
      default:
        break;
    }
    index[layer.name] = i;
    model.layers_.push_back(std::move(bound));
  }
  for (std::size_t i = 0; i < model.layers_.size(); ++i) {
    for (const std::size_t in : model.layers_[i].inputs) {
      if (in != Model::kGraphInput) model.layers_[in].last_use = i;
    }
  }
  model.layers_.back().last_use = model.layers_.size();
  return model;
}

std::vector<Tensor> Model::execute(const Tensor& input, LayerTimings* timings,
                                   bool keep_all) const {
  if (input.shape() != graph_.input_shape) {
    throw ShapeError("model expects input " + to_string(graph_.input_shape) + ", got " +
                     to_string(input.shape()));
  }
  std::vector<Tensor> outputs(layers_.size());
  auto operand = [&](std::size_t idx) -> const Tensor& {
    return idx == kGraphInput ? input : outputs[idx];
  };
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const BoundLayer& layer = layers_[i];
    const Tensor& x = operand(layer.inputs.front());
    const auto start = std::chrono::steady_clock::now();
    switch (layer.kind) {
      case LayerKind::conv:
        outputs[i] = conv2d(x, layer.weight, layer.bias, layer.params.stride, layer.params.padding);
        break;
      case LayerKind::depthwise:
        outputs[i] = depthwise_conv2d(x, layer.weight, layer.bias, layer.params.stride,
                                      layer.params.padding);
        break;
      case LayerKind::affine:
        outputs[i] = affine_channel(x, layer.scale, layer.bias);
        break;
      case LayerKind::relu6:
        outputs[i] = relu6(x);
        break;
      case LayerKind::residual_add:
        outputs[i] = add(x, operand(layer.inputs[1]));
        break;
      case LayerKind::gap:
        outputs[i] = global_avg_pool(x);
        break;
      case LayerKind::dense:
        outputs[i] = dense(x, layer.weight.data(), layer.bias);
        break;
      case LayerKind::softmax:
        outputs[i] = softmax(x);
        break;
    }
    if (timings != nullptr) {
      const auto k = static_cast<std::size_t>(layer.kind);
      timings->per_kind[k] += std::chrono::steady_clock::now() - start;
      ++timings->calls[k];
    }
    if (!keep_all) {
      for (const std::size_t in : layer.inputs) {
        if (in != kGraphInput && layers_[in].last_use == i) outputs[in] = Tensor();
      }
    }
  }
  return outputs;
}

Tensor Model::forward(const Tensor& input, LayerTimings* timings) const {
  return std::move(execute(input, timings, false).back());
}

std::vector<Tensor> Model::trace(const Tensor& input) const {
  return execute(input, nullptr, true);
}

ClassScores Model::classify(const Tensor& input, LayerTimings* timings) const {
  const Tensor probs = forward(input, timings);
  ClassScores scores;
  scores.probabilities.assign(probs.data().begin(), probs.data().end());
  scores.argmax = static_cast<std::size_t>(
      std::max_element(scores.probabilities.begin(), scores.probabilities.end()) -
      scores.probabilities.begin());
  scores.argmax_label = graph_.class_names.at(scores.argmax);
  return scores;
}

Tensor preprocess(const Image& image, std::size_t target) {
  if (image.empty() || image.pixels.size() != image.width * image.height * 3) {
    throw ParameterError("preprocess: image is empty or malformed");
  }
  if (target == 0) throw ParameterError("preprocess: target size must be positive");

  struct Tap {
    std::size_t lo, hi;
    double frac;
  };
  auto taps = [target](std::size_t in) {
    std::vector<Tap> t(target);
    const double scale = static_cast<double>(in) / static_cast<double>(target);
    for (std::size_t i = 0; i < target; ++i) {
      double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in - 1));
      const auto lo = static_cast<std::size_t>(std::floor(src));
      t[i] = Tap{lo, std::min(lo + 1, in - 1), src - static_cast<double>(lo)};
    }
    return t;
  };
  const auto xs = taps(image.width);
  const auto ys = taps(image.height);

  Tensor out(Shape{1, 3, target, target});
  for (std::size_t c = 0; c < 3; ++c) {
    auto plane = out.plane(0, c);
    for (std::size_t y = 0; y < target; ++y) {
      const Tap& ty = ys[y];
      for (std::size_t x = 0; x < target; ++x) {
        const Tap& tx = xs[x];
        const double p00 = image.at(tx.lo, ty.lo, c);
        const double p01 = image.at(tx.hi, ty.lo, c);
        const double p10 = image.at(tx.lo, ty.hi, c);
        const double p11 = image.at(tx.hi, ty.hi, c);
        const double top = p00 + (p01 - p00) * tx.frac;
        const double bottom = p10 + (p11 - p10) * tx.frac;
        const double v = top + (bottom - top) * ty.frac;
        plane[y * target + x] = static_cast<float>(v / 127.5 - 1.0);
      }
    }
  }
  return out;
}

}  // namespace maskpipe
