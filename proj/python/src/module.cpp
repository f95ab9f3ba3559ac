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
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <sstream>

#include "maskpipe/augment.hpp"
#include "maskpipe/dataset.hpp"
#include "maskpipe/debounce.hpp"
#include "maskpipe/errors.hpp"
#include "maskpipe/kernels.hpp"
#include "maskpipe/metrics.hpp"
#include "maskpipe/model.hpp"
#include "maskpipe/pipeline.hpp"
#include "maskpipe/weights.hpp"

namespace py = pybind11;
using namespace maskpipe;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Tensor tensor_from(const FloatArray& a) {
  if (a.ndim() != 4) throw ShapeError("expected a 4-d float32 array [n,c,h,w]");
  const Shape s{static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                static_cast<std::size_t>(a.shape(2)), static_cast<std::size_t>(a.shape(3))};
  return Tensor(s, std::vector<float>(a.data(), a.data() + a.size()));
}

FloatArray array_from(const Tensor& t) {
  const Shape& s = t.shape();
  FloatArray out({s.n, s.c, s.h, s.w});
  std::memcpy(out.mutable_data(), t.data().data(), t.data().size_bytes());
  return out;
}

Image image_from(const ByteArray& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw ShapeError("expected a uint8 array [h,w,3]");
  Image img(static_cast<std::size_t>(a.shape(1)), static_cast<std::size_t>(a.shape(0)));
  std::memcpy(img.pixels.data(), a.data(), img.pixels.size());
  return img;
}

ByteArray array_from(const Image& img) {
  ByteArray out({img.height, img.width, std::size_t{3}});
  std::memcpy(out.mutable_data(), img.pixels.data(), img.pixels.size());
  return out;
}

py::object to_python(const nlohmann::ordered_json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_python(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

std::span<const std::uint8_t> byte_span(const py::bytes& b, std::string& holder) {
  holder = b;
  return {reinterpret_cast<const std::uint8_t*>(holder.data()), holder.size()};
}

py::bytes to_bytes(const std::vector<std::uint8_t>& v) {
  return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
}

py::tuple shape_tuple(const Shape& s) { return py::make_tuple(s.n, s.c, s.h, s.w); }

}  // namespace

PYBIND11_MODULE(_maskpipe, m) {
  m.doc() = "Facemask detection inference engine";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<CorruptionError>(m, "CorruptionError", base.ptr());
  py::register_exception<UnsupportedError>(m, "UnsupportedError", base.ptr());
  py::register_exception<BindError>(m, "BindError", base.ptr());
  py::register_exception<InputError>(m, "InputError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  // Kernels.
  auto padding = [](const std::string& p) {
    if (p == "same") return Padding::same;
    if (p == "valid") return Padding::valid;
    throw ParameterError("padding must be 'same' or 'valid'");
  };
  m.def("conv2d", [=](const FloatArray& x, const FloatArray& k, const std::vector<float>& bias,
                      std::size_t stride, const std::string& pad) {
    return array_from(conv2d(tensor_from(x), tensor_from(k), bias, stride, padding(pad)));
  }, py::arg("input"), py::arg("kernel"), py::arg("bias"), py::arg("stride") = 1, py::arg("padding") = "same");
  m.def("depthwise_conv2d", [=](const FloatArray& x, const FloatArray& k, const std::vector<float>& bias,
                                std::size_t stride, const std::string& pad) {
    return array_from(depthwise_conv2d(tensor_from(x), tensor_from(k), bias, stride, padding(pad)));
  }, py::arg("input"), py::arg("kernel"), py::arg("bias"), py::arg("stride") = 1, py::arg("padding") = "same");
  m.def("dense", [](const FloatArray& x, const std::vector<float>& w, const std::vector<float>& b) {
    return array_from(dense(tensor_from(x), w, b));
  }, py::arg("input"), py::arg("weights"), py::arg("bias"));
  m.def("softmax", [](const FloatArray& x) { return array_from(softmax(tensor_from(x))); });

  // Graph and weights.
  py::class_<ModelGraph>(m, "ModelGraph")
      .def_readonly("arch", &ModelGraph::arch)
      .def_readonly("class_names", &ModelGraph::class_names)
      .def_property_readonly("input_shape", [](const ModelGraph& g) { return shape_tuple(g.input_shape); })
      .def_property_readonly("layers", [](const ModelGraph& g) {
        py::list out;
        for (const auto& l : g.layers) out.append(py::make_tuple(l.name, to_string(l.kind)));
        return out;
      })
      .def("infer_shapes", [](const ModelGraph& g) {
        py::dict out;
        const auto shapes = g.infer_shapes();
        for (std::size_t i = 0; i < shapes.size(); ++i) out[py::str(g.layers[i].name)] = shape_tuple(shapes[i]);
        return out;
      })
      .def("parameters", [](const ModelGraph& g) {
        py::list out;
        for (const auto& p : g.parameters()) out.append(py::make_tuple(p.name, p.shape));
        return out;
      });
  m.def("build_mobilenetv2", &build_mobilenetv2, py::arg("num_classes") = 2, py::arg("width") = 1.0f,
        py::arg("head_units") = 128);
  m.def("graph_for_archive", &graph_for_archive);

  py::class_<WeightArchive>(m, "WeightArchive")
      .def(py::init<>())
      .def_readwrite("arch", &WeightArchive::arch)
      .def_readwrite("input_shape", &WeightArchive::input_shape)
      .def_readwrite("class_names", &WeightArchive::class_names)
      .def_readwrite("eps", &WeightArchive::eps)
      .def("names", [](const WeightArchive& a) {
        std::vector<std::string> out;
        for (const auto& e : a.entries()) out.push_back(e.name);
        return out;
      })
      .def("get", [](const WeightArchive& a, const std::string& name) {
        const TensorEntry* e = a.find(name);
        if (!e) throw py::key_error(name);
        const auto values = a.values(*e);
        py::array_t<float> out(std::vector<py::ssize_t>(e->shape.begin(), e->shape.end()));
        std::memcpy(out.mutable_data(), values.data(), values.size_bytes());
        return out;
      })
      .def("add", [](WeightArchive& a, const std::string& name, const FloatArray& values) {
        std::vector<std::size_t> shape(values.shape(), values.shape() + values.ndim());
        a.add(name, shape, std::span<const float>(values.data(), static_cast<std::size_t>(values.size())));
      })
      .def("remove", &WeightArchive::remove)
      .def("to_bytes", [](const WeightArchive& a) { return to_bytes(write_weight_archive(a)); })
      .def("save", &write_weight_archive_file);
  m.def("load_archive", [](const py::bytes& b) {
    std::string holder;
    return load_weight_archive(byte_span(b, holder));
  });
  m.def("load_archive_file", &load_weight_archive_file);
  m.def("random_archive", &make_random_archive, py::arg("graph"), py::arg("seed") = 0);

  // Model.
  py::class_<Model>(m, "Model")
      .def_property_readonly("graph", &Model::graph)
      .def_property_readonly("class_names", &Model::class_names)
      .def("forward", [](const Model& model, const FloatArray& x) { return array_from(model.forward(tensor_from(x))); })
      .def("classify", [](const Model& model, const FloatArray& x) {
        const ClassScores s = model.classify(tensor_from(x));
        return py::make_tuple(s.probabilities, s.argmax_label);
      })
      .def("trace", [](const Model& model, const FloatArray& x) {
        py::dict out;
        const auto outputs = model.trace(tensor_from(x));
        for (std::size_t i = 0; i < outputs.size(); ++i) out[py::str(model.graph().layers[i].name)] = array_from(outputs[i]);
        return out;
      });
  m.def("bind", &bind, py::arg("graph"), py::arg("archive"));
  m.def("load_model", [](const std::string& path) {
    const WeightArchive archive = load_weight_archive_file(path);
    return bind(graph_for_archive(archive), archive);
  });
  m.def("preprocess", [](const ByteArray& img, std::size_t target) { return array_from(preprocess(image_from(img), target)); },
        py::arg("image"), py::arg("target") = kInputSize);

  // Images and augmentation.
  m.def("decode_ppm", [](const py::bytes& b) {
    std::string holder;
    return array_from(decode_ppm(byte_span(b, holder)));
  });
  m.def("encode_ppm", [](const ByteArray& img) { return to_bytes(encode_ppm(image_from(img))); });
  m.def("hflip", [](const ByteArray& img) { return array_from(hflip(image_from(img))); });
  m.def("rotate", [](const ByteArray& img, float deg) { return array_from(rotate(image_from(img), deg)); });
  m.def("adjust_color", [](const ByteArray& img, float b, float c) { return array_from(adjust_color(image_from(img), b, c)); },
        py::arg("image"), py::arg("brightness") = 1.0f, py::arg("contrast") = 1.0f);
  m.def("shift_shear", [](const ByteArray& img, float dx, float dy, float shear) {
    return array_from(shift_shear(image_from(img), dx, dy, shear));
  }, py::arg("image"), py::arg("dx") = 0.0f, py::arg("dy") = 0.0f, py::arg("shear") = 0.0f);
  m.def("apply_plan", [](const py::object& plan, const ByteArray& img) {
    py::list out;
    for (const Image& v : apply_plan(plan_from_json(from_python(plan)), image_from(img))) out.append(array_from(v));
    return out;
  }, py::arg("plan"), py::arg("image"));

  // Debounce.
  py::class_<DebounceState>(m, "DebounceState")
      .def(py::init<>())
      .def_readonly("fn_count", &DebounceState::fn_count)
      .def_readonly("tn_count", &DebounceState::tn_count)
      .def_property_readonly("label", [](const DebounceState& s) { return std::string(to_string(s.label)); })
      .def("step", [](DebounceState& s, float p_mask, float p_nomask, std::size_t frame) {
        const DecisionEvent e = debounce_step(s, p_mask, p_nomask, frame);
        return py::make_tuple(std::string(to_string(e.label)), e.alert);
      }, py::arg("p_mask"), py::arg("p_nomask"), py::arg("frame") = 0);

  // Metrics.
  m.def("binary_rates", [](std::uint64_t tp, std::uint64_t tn, std::uint64_t fp, std::uint64_t fn) {
    const BinaryRates r = binary_rates(tp, tn, fp, fn);
    return py::make_tuple(r.precision, r.recall, r.accuracy, r.f1);
  }, py::arg("tp"), py::arg("tn"), py::arg("fp"), py::arg("fn"));
  auto counts_from = [](const std::vector<std::vector<std::uint64_t>>& matrix,
                        std::vector<std::string> names) {
    if (names.empty()) {
      for (std::size_t i = 0; i < matrix.size(); ++i) names.push_back("class_" + std::to_string(i));
    }
    ConfusionCounts counts(names);
    if (matrix.size() != names.size()) throw ParameterError("matrix rows must match class count");
    for (std::size_t a = 0; a < matrix.size(); ++a) {
      if (matrix[a].size() != names.size()) throw ParameterError("confusion matrix must be square");
      for (std::size_t p = 0; p < matrix[a].size(); ++p) counts.set(a, p, matrix[a][p]);
    }
    return counts;
  };
  m.def("build_report", [=](const std::vector<std::vector<std::uint64_t>>& matrix, std::vector<std::string> names) {
    return to_python(report_to_json(build_report(counts_from(matrix, std::move(names)))));
  }, py::arg("matrix"), py::arg("class_names") = std::vector<std::string>{});
  m.def("render_report", [=](const std::vector<std::vector<std::uint64_t>>& matrix, std::vector<std::string> names) {
    return render_report_text(build_report(counts_from(matrix, std::move(names))));
  }, py::arg("matrix"), py::arg("class_names") = std::vector<std::string>{});
  m.def("format_rate", &format_rate);

  // Dataset.
  m.def("parse_manifest", [](const std::string& text, const std::vector<std::string>& classes) {
    py::list out;
    for (const auto& e : parse_manifest(text, classes).entries) {
      out.append(py::make_tuple(e.path, e.label, std::string(to_string(e.split)),
                                e.augment ? to_python(plan_to_json(*e.augment)) : py::none()));
    }
    return out;
  });
  m.def("split_stats", [](const std::string& text, const std::vector<std::string>& classes) {
    const SplitStats s = split_stats(parse_manifest(text, classes));
    py::dict out;
    out["train"] = s.train;
    out["test"] = s.test;
    out["train_total"] = s.train_total();
    out["test_total"] = s.test_total();
    out["total"] = s.total();
    return out;
  });

  // Pipeline.
  m.def("write_raw_stream", [](const std::vector<ByteArray>& frames, const std::string& path) {
    std::vector<Image> images;
    for (const auto& f : frames) images.push_back(image_from(f));
    write_raw_stream(images, path);
  });
  m.def("detect", [](const std::string& source, const Model& model, const std::string& sidecar, std::size_t threads) {
    auto frames = open_frame_source(source);
    std::optional<RegionSidecar> boxes;
    if (!sidecar.empty()) boxes = read_sidecar_file(sidecar);
    std::ostringstream sink;
    DetectSummary summary;
    {
      py::gil_scoped_release release;
      summary = detect_stream(*frames, model, boxes, sink, {threads, nullptr});
    }
    return py::make_tuple(sink.str(), to_python(nlohmann::ordered_json::parse(summary_to_json(summary))));
  }, py::arg("source"), py::arg("model"), py::arg("sidecar") = "", py::arg("threads") = 1);
  m.def("bench", [](const Model& model, std::size_t frames, std::size_t threads) {
    BenchReport r;
    {
      py::gil_scoped_release release;
      r = bench(model, frames, threads);
    }
    py::dict out;
    out["frames"] = r.frames;
    out["threads"] = r.threads;
    out["fps"] = r.fps;
    out["mean_latency_ms"] = r.mean_latency_ms;
    out["text"] = render_bench_text(r);
    return out;
  }, py::arg("model"), py::arg("frames") = 1, py::arg("threads") = 1);
}
