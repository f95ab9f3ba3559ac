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
#include "maskpipe/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstring>
#include <exception>
#include <iterator>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "maskpipe/errors.hpp"

namespace maskpipe {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr char kStreamMagic[4] = {'F', 'R', 'S', '1'};
constexpr std::size_t kStreamHeader = 12;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs body(i) for i in [0, count) on up to 'threads' workers. The first exception
// thrown by any job is rethrown after all workers finish.
template <typename Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void append_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::string format_float(float v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "0";
  return std::string(buf, end);
}

std::string format_double(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::size_t parse_size(const std::string& field, std::size_t line, const char* what) {
  std::size_t value = 0;
  const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || end != field.data() + field.size() || field.empty()) {
    throw ParseError(line, std::string("sidecar ") + what + " '" + field +
                               "' is not a non-negative integer");
  }
  return value;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

DirectorySource::DirectorySource(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("'" + dir.string() + "' is not a directory");
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".ppm") files_.push_back(entry.path());
  }
  std::sort(files_.begin(), files_.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  for (const auto& file : files_) {
    try {
      const Image first = read_ppm_file(file.string());
      width_ = first.width;
      height_ = first.height;
      break;
    } catch (const Error&) {
    }
  }
}

std::optional<Image> DirectorySource::read(std::size_t index, std::string* reason) {
  const fs::path& file = files_.at(index);
  try {
    Image image = read_ppm_file(file.string());
    if (image.width != width_ || image.height != height_) {
      if (reason) {
        *reason = file.filename().string() + ": " + std::to_string(image.width) + "x" +
                  std::to_string(image.height) + " differs from session size " +
                  std::to_string(width_) + "x" + std::to_string(height_);
      }
      return std::nullopt;
    }
    return image;
  } catch (const Error& e) {
    if (reason) *reason = file.filename().string() + ": " + e.what();
    return std::nullopt;
  }
}

RawStreamSource::RawStreamSource(const fs::path& file) : in_(file, std::ios::binary) {
  if (!in_) throw IoError("cannot open stream '" + file.string() + "'");
  unsigned char header[kStreamHeader];
  in_.read(reinterpret_cast<char*>(header), kStreamHeader);
  const auto got = static_cast<std::size_t>(in_.gcount());
  if (got < 4 || std::memcmp(header, kStreamMagic, 4) != 0) {
    throw FormatError("'" + file.string() + "' is not an FRS1 stream (bad magic)");
  }
  if (got < kStreamHeader) throw CorruptionError("FRS1 header truncated");
  width_ = read_u32_le(header + 4);
  height_ = read_u32_le(header + 8);
  if (width_ == 0 || height_ == 0) throw FormatError("FRS1 stream declares an empty frame size");
  const auto size = static_cast<std::size_t>(fs::file_size(file));
  const std::size_t frame_bytes = width_ * height_ * 3;
  const std::size_t body = size - kStreamHeader;
  if (body % frame_bytes != 0) {
    throw CorruptionError("FRS1 stream ends inside a frame: " + std::to_string(body % frame_bytes) +
                          " of " + std::to_string(frame_bytes) + " bytes present");
  }
  frames_ = body / frame_bytes;
}

std::optional<Image> RawStreamSource::read(std::size_t index, std::string* reason) {
  if (index >= frames_) throw ParameterError("frame index out of range");
  Image image(width_, height_);
  const std::size_t frame_bytes = image.pixels.size();
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(kStreamHeader + index * frame_bytes));
  in_.read(reinterpret_cast<char*>(image.pixels.data()), static_cast<std::streamsize>(frame_bytes));
  if (static_cast<std::size_t>(in_.gcount()) != frame_bytes) {
    if (reason) *reason = "frame " + std::to_string(index) + ": short read";
    return std::nullopt;
  }
  return image;
}

std::unique_ptr<FrameSource> open_frame_source(const fs::path& location) {
  std::error_code ec;
  if (fs::is_directory(location, ec)) return std::make_unique<DirectorySource>(location);
  if (fs::is_regular_file(location, ec)) return std::make_unique<RawStreamSource>(location);
  throw IoError("frame source '" + location.string() + "' does not exist");
}

std::vector<std::uint8_t> encode_raw_stream(std::span<const Image> frames) {
  if (frames.empty()) throw ParameterError("FRS1 stream needs at least one frame to fix its size");
  const std::size_t w = frames.front().width;
  const std::size_t h = frames.front().height;
  std::vector<std::uint8_t> out(std::begin(kStreamMagic), std::end(kStreamMagic));
  append_u32_le(out, static_cast<std::uint32_t>(w));
  append_u32_le(out, static_cast<std::uint32_t>(h));
  for (const Image& f : frames) {
    if (f.width != w || f.height != h) throw ParameterError("FRS1 frames must share one size");
    out.insert(out.end(), f.pixels.begin(), f.pixels.end());
  }
  return out;
}

void write_raw_stream(std::span<const Image> frames, const fs::path& file) {
  const auto bytes = encode_raw_stream(frames);
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write '" + file.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void RegionSidecar::check_bounds(std::size_t width, std::size_t height) const {
  for (const SidecarBox& b : boxes) {
    if (b.box.x + b.box.w > width || b.box.y + b.box.h > height) {
      throw FormatError("sidecar box for frame " + std::to_string(b.frame) + " track " +
                        std::to_string(b.track) + " leaves the " + std::to_string(width) + "x" +
                        std::to_string(height) + " frame");
    }
  }
}

RegionSidecar parse_sidecar(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool with_track = false;
  bool header_seen = false;
  RegionSidecar sidecar;
  std::set<std::pair<std::size_t, std::uint32_t>> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = split_commas(line);
    if (!header_seen) {
      if (fields == std::vector<std::string>{"frame", "track", "x", "y", "w", "h"}) {
        with_track = true;
      } else if (fields != std::vector<std::string>{"frame", "x", "y", "w", "h"}) {
        throw ParseError(line_no, "sidecar header must be frame,track,x,y,w,h or frame,x,y,w,h");
      }
      header_seen = true;
      continue;
    }
    const std::size_t expected = with_track ? 6 : 5;
    if (fields.size() != expected) {
      throw ParseError(line_no, "expected " + std::to_string(expected) + " fields");
    }
    std::size_t i = 0;
    SidecarBox b;
    b.frame = parse_size(fields[i++], line_no, "frame");
    if (with_track) {
      const std::size_t t = parse_size(fields[i++], line_no, "track");
      if (t > 0xffffffffULL) throw ParseError(line_no, "sidecar track id too large");
      b.track = static_cast<std::uint32_t>(t);
    }
    b.box.x = parse_size(fields[i++], line_no, "x");
    b.box.y = parse_size(fields[i++], line_no, "y");
    b.box.w = parse_size(fields[i++], line_no, "w");
    b.box.h = parse_size(fields[i++], line_no, "h");
    if (b.box.w == 0 || b.box.h == 0) throw ParseError(line_no, "sidecar box has zero extent");
    if (!sidecar.boxes.empty() && b.frame < sidecar.boxes.back().frame) {
      throw ParseError(line_no, "sidecar frame indices must be non-decreasing");
    }
    if (!seen.insert({b.frame, b.track}).second) {
      throw ParseError(line_no, "track " + std::to_string(b.track) + " appears twice on frame " +
                                    std::to_string(b.frame));
    }
    sidecar.boxes.push_back(b);
  }
  if (!header_seen) throw ParseError(1, "sidecar is empty");
  return sidecar;
}

RegionSidecar read_sidecar_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open sidecar '" + file.string() + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_sidecar(text);
}

std::string event_to_json(const DecisionEvent& event, std::uint32_t track) {
  std::string s = "{\"frame\":" + std::to_string(event.frame_index) +
                  ",\"track\":" + std::to_string(track) + ",\"label\":\"" +
                  std::string(to_string(event.label)) + "\",\"p_mask\":" +
                  format_float(event.p_mask) + ",\"p_nomask\":" + format_float(event.p_nomask) +
                  ",\"alert\":" + (event.alert ? "true" : "false") + "}";
  return s;
}

std::pair<float, float> mask_scores(const ClassScores& scores) {
  const auto& p = scores.probabilities;
  float rest = 0.0f;
  for (std::size_t i = 1; i < p.size(); ++i) rest += p[i];
  return {p.empty() ? 0.0f : p[0], rest};
}

DetectSummary detect_stream(FrameSource& source, const Model& model,
                            const std::optional<RegionSidecar>& sidecar, std::ostream& sink,
                            const DetectOptions& options) {
  if (sidecar && source.frame_count() > 0 && source.width() > 0) {
    sidecar->check_bounds(source.width(), source.height());
  }
  const std::size_t threads = std::max<std::size_t>(1, options.threads);
  const std::size_t batch = threads * 4;

  struct Job {
    std::size_t frame;
    std::uint32_t track;
    Box box;
    std::size_t slot;  // index into the batch's frame list
  };
  struct Result {
    ClassScores scores;
    double seconds = 0.0;
  };

  DetectSummary summary;
  summary.frames = source.frame_count();
  std::map<std::uint32_t, DebounceState> states;
  std::size_t next_box = 0;
  double latency_total = 0.0;
  const auto start = Clock::now();

  for (std::size_t first = 0; first < summary.frames; first += batch) {
    const std::size_t last = std::min(summary.frames, first + batch);
    std::vector<std::optional<Image>> frames;
    std::vector<Job> jobs;
    for (std::size_t f = first; f < last; ++f) {
      std::string reason;
      frames.push_back(source.read(f, &reason));
      const std::size_t slot = frames.size() - 1;
      if (sidecar) {
        while (next_box < sidecar->boxes.size() && sidecar->boxes[next_box].frame < f) ++next_box;
      }
      if (!frames.back()) {
        ++summary.skipped;
        if (options.warnings) *options.warnings << "warning: skipping frame " << f << " (" << reason << ")\n";
        continue;
      }
      if (sidecar) {
        for (std::size_t b = next_box; b < sidecar->boxes.size() && sidecar->boxes[b].frame == f; ++b) {
          jobs.push_back(Job{f, sidecar->boxes[b].track, sidecar->boxes[b].box, slot});
        }
      } else {
        const Image& img = *frames.back();
        jobs.push_back(Job{f, 0, centered_square(img.width, img.height), slot});
      }
    }

    std::vector<Result> results(jobs.size());
    parallel_for(jobs.size(), threads, [&](std::size_t j) {
      const auto t0 = Clock::now();
      const Job& job = jobs[j];
      const Tensor input = preprocess(crop(*frames[job.slot], job.box), model.graph().input_shape.h);
      results[j].scores = model.classify(input);
      results[j].seconds = seconds_since(t0);
    });

    for (std::size_t j = 0; j < jobs.size(); ++j) {
      const auto [p_mask, p_nomask] = mask_scores(results[j].scores);
      DebounceState& state = states[jobs[j].track];
      const DecisionEvent event = debounce_step(state, p_mask, p_nomask, jobs[j].frame);
      sink << event_to_json(event, jobs[j].track) << '\n';
      ++summary.events;
      if (event.alert) ++summary.alerts;
      latency_total += results[j].seconds;
    }
  }
  sink.flush();
  summary.wall_seconds = seconds_since(start);
  if (summary.events > 0) summary.mean_latency_ms = 1000.0 * latency_total / static_cast<double>(summary.events);
  const std::size_t processed = summary.frames - summary.skipped;
  if (summary.wall_seconds > 0.0) summary.fps = static_cast<double>(processed) / summary.wall_seconds;
  return summary;
}

std::string summary_to_json(const DetectSummary& s) {
  return "{\"frames\":" + std::to_string(s.frames) + ",\"skipped\":" + std::to_string(s.skipped) +
         ",\"events\":" + std::to_string(s.events) + ",\"alerts\":" + std::to_string(s.alerts) +
         ",\"wall_seconds\":" + format_double(s.wall_seconds, 4) +
         ",\"mean_latency_ms\":" + format_double(s.mean_latency_ms, 3) +
         ",\"fps\":" + format_double(s.fps, 3) + "}";
}

EvalOutcome evaluate(const DatasetManifest& manifest, const Model& model, const fs::path& base_dir,
                     std::size_t threads) {
  std::vector<const ManifestEntry*> tests;
  for (const auto& e : manifest.entries) {
    if (e.split == Split::test) tests.push_back(&e);
  }
  if (tests.empty()) throw ParameterError("evaluate: manifest has no test entries");
  const auto& classes = model.class_names();
  std::vector<std::size_t> actual(tests.size());
  for (std::size_t i = 0; i < tests.size(); ++i) {
    const auto it = std::find(classes.begin(), classes.end(), tests[i]->label);
    if (it == classes.end()) {
      throw ParameterError("evaluate: label '" + tests[i]->label + "' is not a model class");
    }
    actual[i] = static_cast<std::size_t>(it - classes.begin());
  }

  std::vector<std::optional<std::size_t>> predicted(tests.size());
  std::vector<std::string> errors(tests.size());
  parallel_for(tests.size(), threads, [&](std::size_t i) {
    const fs::path path = fs::path(tests[i]->path).is_absolute() ? fs::path(tests[i]->path)
                                                                 : base_dir / tests[i]->path;
    try {
      const Image image = read_ppm_file(path.string());
      predicted[i] = model.classify(preprocess(image, model.graph().input_shape.h)).argmax;
    } catch (const Error& e) {
      errors[i] = tests[i]->path + ": " + e.what();
    }
  });

  EvalOutcome outcome;
  ConfusionCounts counts(classes);
  for (std::size_t i = 0; i < tests.size(); ++i) {
    if (predicted[i]) {
      counts.update(actual[i], *predicted[i]);
      ++outcome.evaluated;
    } else {
      outcome.failed.push_back(errors[i]);
    }
  }
  if (outcome.evaluated == 0) throw InputError("evaluate: no test entry could be decoded");
  outcome.report = build_report(counts);
  return outcome;
}

BenchReport bench(const Model& model, std::size_t frames, std::size_t threads) {
  if (frames == 0) throw ParameterError("bench: frames must be at least 1");
  threads = std::max<std::size_t>(1, std::min(threads, frames));
  BenchReport report;
  report.frames = frames;
  report.threads = threads;

  const Shape shape = model.graph().input_shape;
  std::vector<LayerTimings> per_thread(threads);
  std::vector<double> latency(threads, 0.0);
  const auto start = Clock::now();
  parallel_for(threads, threads, [&](std::size_t t) {
    std::mt19937_64 rng(0x5eed + t);
    Tensor input(shape);
    for (std::size_t f = t; f < frames; f += threads) {
      for (float& v : input.data()) v = static_cast<float>(rng() >> 40) * 0x1.0p-23f - 1.0f;
      const auto t0 = Clock::now();
      model.classify(input, &per_thread[t]);
      latency[t] += seconds_since(t0);
    }
  });
  report.wall_seconds = seconds_since(start);
  for (std::size_t t = 0; t < threads; ++t) report.timings.merge(per_thread[t]);
  double total = 0.0;
  for (const double l : latency) total += l;
  report.mean_latency_ms = 1000.0 * total / static_cast<double>(frames);
  report.fps = report.wall_seconds > 0.0 ? static_cast<double>(frames) / report.wall_seconds : 0.0;
  return report;
}

std::string render_bench_text(const BenchReport& r) {
  std::ostringstream out;
  out << "frames: " << r.frames << "  threads: " << r.threads << "\n"
      << "wall: " << format_double(r.wall_seconds, 3) << " s  fps: " << format_double(r.fps, 2)
      << "  mean latency: " << format_double(r.mean_latency_ms, 2) << " ms\n"
      << "per-stage latency (ms per frame):\n";
  const double total_ns = static_cast<double>(r.timings.total().count());
  for (std::size_t k = 0; k < kLayerKindCount; ++k) {
    const double ns = static_cast<double>(r.timings.per_kind[k].count());
    const double per_frame_ms = ns / 1e6 / static_cast<double>(r.frames);
    const double share = total_ns > 0.0 ? 100.0 * ns / total_ns : 0.0;
    std::string name = to_string(static_cast<LayerKind>(k));
    name.resize(14, ' ');
    out << "  " << name << format_double(per_frame_ms, 3) << "  (" << format_double(share, 1)
        << "%, " << r.timings.calls[k] / r.frames << " layers)\n";
  }
  return out.str();
}

}  // namespace maskpipe
