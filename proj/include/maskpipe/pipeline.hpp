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
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maskpipe/dataset.hpp"
#include "maskpipe/debounce.hpp"
#include "maskpipe/image.hpp"
#include "maskpipe/metrics.hpp"
#include "maskpipe/model.hpp"

namespace maskpipe {

/// Ordered, random-access frames of constant dimensions.
class FrameSource {
 public:
  virtual ~FrameSource() = default;

  virtual std::size_t frame_count() const = 0;
  /// Dimensions shared by every frame; zero when no frame is readable.
  virtual std::size_t width() const = 0;
  virtual std::size_t height() const = 0;
  /// The frame, or nullopt (with a reason) if it cannot be decoded.
  virtual std::optional<Image> read(std::size_t index, std::string* reason = nullptr) = 0;
};

/// *.ppm files of a directory in lexicographic filename order.
class DirectorySource final : public FrameSource {
 public:
  explicit DirectorySource(const std::filesystem::path& dir);

  std::size_t frame_count() const override { return files_.size(); }
  std::size_t width() const override { return width_; }
  std::size_t height() const override { return height_; }
  std::optional<Image> read(std::size_t index, std::string* reason = nullptr) override;

  const std::vector<std::filesystem::path>& files() const { return files_; }

 private:
  std::vector<std::filesystem::path> files_;
  std::size_t width_ = 0;
  std::size_t height_ = 0;
};

/// FRS1 raw stream: "FRS1", u32 LE width, u32 LE height, then width*height*3 RGB8
/// bytes per frame until end of file. A partial trailing frame is a CorruptionError.
class RawStreamSource final : public FrameSource {
 public:
  explicit RawStreamSource(const std::filesystem::path& file);

  std::size_t frame_count() const override { return frames_; }
  std::size_t width() const override { return width_; }
  std::size_t height() const override { return height_; }
  std::optional<Image> read(std::size_t index, std::string* reason = nullptr) override;

 private:
  std::ifstream in_;
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t frames_ = 0;
};

/// Directory -> DirectorySource, regular file -> RawStreamSource.
std::unique_ptr<FrameSource> open_frame_source(const std::filesystem::path& location);

std::vector<std::uint8_t> encode_raw_stream(std::span<const Image> frames);
void write_raw_stream(std::span<const Image> frames, const std::filesystem::path& file);

struct SidecarBox {
  std::size_t frame = 0;
  std::uint32_t track = 0;
  Box box;

  friend bool operator==(const SidecarBox&, const SidecarBox&) = default;
};

/// Face boxes supplied by an external detector, one CSV row per box:
/// frame,track,x,y,w,h (or frame,x,y,w,h with track 0).
struct RegionSidecar {
  std::vector<SidecarBox> boxes;

  /// Throws FormatError if a box leaves a width x height frame.
  void check_bounds(std::size_t width, std::size_t height) const;
};

/// Throws ParseError on malformed rows, decreasing frame indices or a track
/// appearing twice on one frame.
RegionSidecar parse_sidecar(std::string_view text);
RegionSidecar read_sidecar_file(const std::filesystem::path& file);

struct DetectOptions {
  std::size_t threads = 1;
  std::ostream* warnings = nullptr;
};

struct DetectSummary {
  std::size_t frames = 0;   // frames in the source
  std::size_t skipped = 0;  // unreadable frames
  std::size_t events = 0;
  std::size_t alerts = 0;
  double wall_seconds = 0.0;
  double mean_latency_ms = 0.0;  // per classified region
  double fps = 0.0;
};

/// One JSON line: {"frame","track","label","p_mask","p_nomask","alert"}.
std::string event_to_json(const DecisionEvent& event, std::uint32_t track);

/// Probability mass of the mask class (index 0) and of every other class.
std::pair<float, float> mask_scores(const ClassScores& scores);

/// Classifies every region of every frame and writes debounced decisions to sink
/// in frame order. Output depends only on the inputs, never on thread count.
DetectSummary detect_stream(FrameSource& source, const Model& model,
                            const std::optional<RegionSidecar>& sidecar, std::ostream& sink,
                            const DetectOptions& options = {});

std::string summary_to_json(const DetectSummary& summary);

struct EvalOutcome {
  EvalReport report;
  std::size_t evaluated = 0;
  std::vector<std::string> failed;  // "path: reason" for entries that could not be decoded
};

/// Classifies the test split (paths relative to base_dir) and builds the report.
EvalOutcome evaluate(const DatasetManifest& manifest, const Model& model,
                     const std::filesystem::path& base_dir, std::size_t threads = 1);

struct BenchReport {
  std::size_t frames = 0;
  std::size_t threads = 1;
  double wall_seconds = 0.0;
  double fps = 0.0;
  double mean_latency_ms = 0.0;
  LayerTimings timings;
};

/// Times classify over synthetic 224x224 inputs, sharding frames across threads.
BenchReport bench(const Model& model, std::size_t frames, std::size_t threads = 1);

std::string render_bench_text(const BenchReport& report);

}  // namespace maskpipe
