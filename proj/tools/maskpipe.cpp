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
// maskpipe: online facemask detection, evaluation and benchmarking.
//
// Exit codes: 0 success, 1 usage error, 2 input format error, 3 model/bind error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "maskpipe/dataset.hpp"
#include "maskpipe/errors.hpp"
#include "maskpipe/model.hpp"
#include "maskpipe/pipeline.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitModel = 3;

struct ModelLoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

maskpipe::Model load_model(const std::string& path) {
  try {
    const maskpipe::WeightArchive archive = maskpipe::load_weight_archive_file(path);
    return maskpipe::bind(maskpipe::graph_for_archive(archive), archive);
  } catch (const maskpipe::Error& e) {
    throw ModelLoadError(e.what());
  }
}

int exit_code_for(const maskpipe::Error& e) {
  switch (e.code()) {
    case maskpipe::ErrorCode::bind: return kExitModel;
    case maskpipe::ErrorCode::parameter: return kExitUsage;
    default: return kExitInput;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Real-time facemask detection pipeline"};
  app.require_subcommand(1);

  std::string model_path;
  std::size_t threads = 1;

  auto* detect = app.add_subcommand("detect", "Classify a frame source and emit debounced events");
  std::string source_path, sidecar_path, out_path;
  detect->add_option("--model", model_path, "FMW weight archive")->required();
  detect->add_option("--source", source_path, "Directory of PPM frames or FRS1 stream")->required();
  detect->add_option("--sidecar", sidecar_path, "Face boxes CSV (frame,track,x,y,w,h)");
  detect->add_option("--out", out_path, "Events JSONL (default stdout)");
  detect->add_option("--threads", threads, "Inference workers")->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("eval", "Evaluate the test split of a manifest");
  std::string manifest_path, report_path;
  eval->add_option("--model", model_path, "FMW weight archive")->required();
  eval->add_option("--manifest", manifest_path, "Dataset manifest CSV")->required();
  eval->add_option("--report", report_path, "Write the JSON report here");
  eval->add_option("--threads", threads, "Inference workers")->check(CLI::PositiveNumber);

  auto* benchmark = app.add_subcommand("bench", "Measure inference throughput");
  std::size_t frames = 100;
  benchmark->add_option("--model", model_path, "FMW weight archive")->required();
  benchmark->add_option("--frames", frames, "Synthetic frames")->required()->check(CLI::PositiveNumber);
  benchmark->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* random = app.add_subcommand("random-model", "Write an archive with random weights");
  std::string random_out;
  std::uint64_t seed = 0;
  std::size_t classes = 2;
  float width = 1.0f;
  random->add_option("--out", random_out, "Output archive")->required();
  random->add_option("--seed", seed, "Random seed");
  random->add_option("--classes", classes, "Number of classes")->check(CLI::Range(2, 1000));
  random->add_option("--width", width, "Width multiplier")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*random) {
      const auto graph = maskpipe::build_mobilenetv2(classes, width);
      maskpipe::write_weight_archive_file(maskpipe::make_random_archive(graph, seed), random_out);
      return 0;
    }

    const maskpipe::Model model = load_model(model_path);

    if (*detect) {
      std::optional<maskpipe::RegionSidecar> sidecar;
      if (!sidecar_path.empty()) sidecar = maskpipe::read_sidecar_file(sidecar_path);
      auto source = maskpipe::open_frame_source(source_path);
      std::ofstream file;
      std::ostream* sink = &std::cout;
      if (!out_path.empty()) {
        file.open(out_path, std::ios::binary);
        if (!file) throw maskpipe::IoError("cannot write '" + out_path + "'");
        sink = &file;
      }
      const auto summary = maskpipe::detect_stream(*source, model, sidecar, *sink,
                                                   {threads, &std::cerr});
      (out_path.empty() ? std::cerr : std::cout) << maskpipe::summary_to_json(summary) << "\n";
      return 0;
    }

    if (*eval) {
      std::ifstream in(manifest_path, std::ios::binary);
      if (!in) throw maskpipe::IoError("cannot open manifest '" + manifest_path + "'");
      const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      const auto manifest = maskpipe::parse_manifest(text, model.class_names());
      const auto outcome = maskpipe::evaluate(
          manifest, model, std::filesystem::path(manifest_path).parent_path(), threads);
      for (const auto& f : outcome.failed) std::cerr << "warning: could not decode " << f << "\n";
      std::cout << maskpipe::render_report_text(outcome.report) << "\n"
                << maskpipe::render_matrix_text(outcome.report.normalized);
      if (!report_path.empty()) {
        auto json = maskpipe::report_to_json(outcome.report);
        json["evaluated"] = outcome.evaluated;
        json["failed"] = outcome.failed;
        std::ofstream out(report_path);
        if (!out) throw maskpipe::IoError("cannot write '" + report_path + "'");
        out << json.dump(2) << "\n";
      }
      return 0;
    }

    if (*benchmark) {
      std::cout << maskpipe::render_bench_text(maskpipe::bench(model, frames, threads));
      return 0;
    }
  } catch (const ModelLoadError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return kExitModel;
  } catch (const maskpipe::Error& e) {
    std::cerr << "error (" << maskpipe::to_string(e.code()) << "): " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return 0;
}
