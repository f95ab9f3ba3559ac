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
#include "maskpipe/weights.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>

#include <json.hpp>

#include "maskpipe/errors.hpp"

namespace maskpipe {
namespace {

using json = nlohmann::json;

constexpr char kMagic[4] = {'F', 'M', 'W', '1'};

std::uint32_t read_u32_le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void append_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

float float_from_le(const std::uint8_t* p) {
  std::uint32_t bits = read_u32_le(p);
  return std::bit_cast<float>(bits);
}

template <typename T>
T require_field(const json& header, const char* key) {
  const auto it = header.find(key);
  if (it == header.end()) throw FormatError(std::string("FMW header lacks \"") + key + "\"");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("FMW header field \"") + key + "\": " + e.what());
  }
}

std::string describe(const TensorEntry& e) {
  return "'" + e.name + "' [" + std::to_string(e.offset) + ", " +
         std::to_string(e.offset + e.elements()) + ")";
}

}  // namespace

std::size_t TensorEntry::elements() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void WeightArchive::add(std::string name, std::vector<std::size_t> shape,
                        std::span<const float> values) {
  if (find(name) != nullptr) throw ParameterError("duplicate archive tensor '" + name + "'");
  TensorEntry entry{std::move(name), std::move(shape), payload_.size()};
  if (entry.elements() != values.size()) {
    throw ShapeError("archive tensor '" + entry.name + "' shape holds " +
                     std::to_string(entry.elements()) + " values, got " +
                     std::to_string(values.size()));
  }
  payload_.insert(payload_.end(), values.begin(), values.end());
  entries_.push_back(std::move(entry));
}

void WeightArchive::remove(const std::string& name) {
  std::vector<TensorEntry> kept;
  std::vector<float> payload;
  for (const auto& e : entries_) {
    if (e.name == name) continue;
    const auto v = values(e);
    kept.push_back(TensorEntry{e.name, e.shape, payload.size()});
    payload.insert(payload.end(), v.begin(), v.end());
  }
  if (kept.size() == entries_.size()) throw ParameterError("no archive tensor '" + name + "'");
  entries_ = std::move(kept);
  payload_ = std::move(payload);
}

const TensorEntry* WeightArchive::find(const std::string& name) const {
  const auto it = std::find_if(entries_.begin(), entries_.end(),
                               [&](const TensorEntry& e) { return e.name == name; });
  return it == entries_.end() ? nullptr : &*it;
}

std::span<const float> WeightArchive::values(const TensorEntry& entry) const {
  return std::span<const float>(payload_).subspan(entry.offset, entry.elements());
}

std::optional<std::span<const float>> WeightArchive::values(const std::string& name) const {
  const TensorEntry* e = find(name);
  if (e == nullptr) return std::nullopt;
  return values(*e);
}

std::span<float> WeightArchive::mutable_values(const std::string& name) {
  const TensorEntry* e = find(name);
  if (e == nullptr) throw ParameterError("no archive tensor '" + name + "'");
  return std::span<float>(payload_).subspan(e->offset, e->elements());
}

WeightArchive WeightArchive::from_parts(std::vector<TensorEntry> entries,
                                        std::vector<float> payload) {
  std::vector<const TensorEntry*> order;
  order.reserve(entries.size());
  std::size_t total = 0;
  for (const auto& e : entries) {
    total += e.elements();
    order.push_back(&e);
  }
  std::sort(order.begin(), order.end(),
            [](const TensorEntry* a, const TensorEntry* b) { return a->offset < b->offset; });
  for (std::size_t i = 0; i < order.size(); ++i) {
    const TensorEntry& e = *order[i];
    if (e.offset + e.elements() > payload.size()) {
      throw CorruptionError("FMW payload truncated: tensor " + describe(e) + " exceeds " +
                            std::to_string(payload.size()) + " stored elements");
    }
    if (i > 0) {
      const TensorEntry& prev = *order[i - 1];
      if (prev.offset + prev.elements() > e.offset) {
        throw CorruptionError("FMW tensors overlap: " + describe(prev) + " and " + describe(e));
      }
    }
  }
  if (total != payload.size()) {
    throw CorruptionError("FMW payload holds " + std::to_string(payload.size()) +
                          " elements but the manifest accounts for " + std::to_string(total));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (std::size_t j = i + 1; j < entries.size(); ++j) {
      if (entries[i].name == entries[j].name) {
        throw CorruptionError("FMW manifest repeats tensor '" + entries[i].name + "'");
      }
    }
  }
  WeightArchive archive;
  archive.entries_ = std::move(entries);
  archive.payload_ = std::move(payload);
  return archive;
}

WeightArchive load_weight_archive(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not an FMW1 archive (bad magic)");
  }
  if (bytes.size() < 8) throw CorruptionError("FMW archive truncated inside header length");
  const std::uint32_t header_len = read_u32_le(bytes.data() + 4);
  if (bytes.size() - 8 < header_len) {
    throw CorruptionError("FMW archive truncated: header claims " + std::to_string(header_len) +
                          " bytes, " + std::to_string(bytes.size() - 8) + " available");
  }
  json header;
  try {
    header = json::parse(bytes.begin() + 8, bytes.begin() + 8 + header_len);
  } catch (const json::exception& e) {
    throw FormatError(std::string("FMW header is not valid JSON: ") + e.what());
  }
  if (!header.is_object()) throw FormatError("FMW header must be a JSON object");

  const auto tensors = require_field<json>(header, "tensors");
  if (!tensors.is_array()) throw FormatError("FMW header \"tensors\" must be an array");
  std::vector<TensorEntry> entries;
  entries.reserve(tensors.size());
  for (const auto& t : tensors) {
    if (!t.is_object()) throw FormatError("FMW tensor record must be an object");
    TensorEntry e;
    e.name = require_field<std::string>(t, "name");
    e.shape = require_field<std::vector<std::size_t>>(t, "shape");
    e.offset = require_field<std::size_t>(t, "offset");
    entries.push_back(std::move(e));
  }

  const std::size_t payload_bytes = bytes.size() - 8 - header_len;
  if (payload_bytes % 4 != 0) {
    throw CorruptionError("FMW payload of " + std::to_string(payload_bytes) +
                          " bytes is not a whole number of float32 values");
  }
  std::vector<float> payload(payload_bytes / 4);
  const std::uint8_t* p = bytes.data() + 8 + header_len;
  for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = float_from_le(p + 4 * i);

  WeightArchive archive = WeightArchive::from_parts(std::move(entries), std::move(payload));
  archive.arch = require_field<std::string>(header, "arch");
  archive.input_shape = require_field<std::vector<std::size_t>>(header, "input");
  archive.class_names = require_field<std::vector<std::string>>(header, "classes");
  archive.eps = require_field<double>(header, "eps");
  return archive;
}

WeightArchive load_weight_archive_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weight archive '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return load_weight_archive(bytes);
}

std::vector<std::uint8_t> write_weight_archive(const WeightArchive& archive) {
  json tensors = json::array();
  for (const auto& e : archive.entries()) {
    tensors.push_back(json{{"name", e.name}, {"shape", e.shape}, {"offset", e.offset}});
  }
  const json header{{"arch", archive.arch},
                    {"input", archive.input_shape},
                    {"classes", archive.class_names},
                    {"eps", archive.eps},
                    {"tensors", std::move(tensors)}};
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(8 + text.size() + archive.payload().size() * 4);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  append_u32_le(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const float v : archive.payload()) append_u32_le(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

void write_weight_archive_file(const WeightArchive& archive, const std::string& path) {
  const auto bytes = write_weight_archive(archive);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write weight archive '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing weight archive '" + path + "'");
}

}  // namespace maskpipe
