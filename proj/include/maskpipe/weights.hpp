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
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace maskpipe {

/// One named tensor inside an archive; offset counts float32 elements.
struct TensorEntry {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;

  std::size_t elements() const;

  friend bool operator==(const TensorEntry&, const TensorEntry&) = default;
};

/// In-memory form of an FMW1 weight archive.
///
/// Layout on disk: "FMW1", u32 little-endian header length L, L bytes of UTF-8
/// JSON {"arch", "input", "classes", "eps", "tensors"}, then the little-endian
/// float32 payload. Entries are kept in manifest order.
class WeightArchive {
 public:
  std::string arch;
  std::vector<std::size_t> input_shape{1, 3, 224, 224};
  std::vector<std::string> class_names;
  double eps = 1e-3;

  const std::vector<TensorEntry>& entries() const { return entries_; }
  std::span<const float> payload() const { return payload_; }

  /// Appends a tensor at the end of the payload.
  void add(std::string name, std::vector<std::size_t> shape, std::span<const float> values);

  /// Removes a tensor and compacts the payload.
  void remove(const std::string& name);

  const TensorEntry* find(const std::string& name) const;
  std::span<const float> values(const TensorEntry& entry) const;
  std::optional<std::span<const float>> values(const std::string& name) const;
  std::span<float> mutable_values(const std::string& name);

  /// Builds an archive from a manifest and payload, validating the layout invariants.
  static WeightArchive from_parts(std::vector<TensorEntry> entries, std::vector<float> payload);

  friend bool operator==(const WeightArchive&, const WeightArchive&) = default;

 private:
  std::vector<TensorEntry> entries_;
  std::vector<float> payload_;
};

WeightArchive load_weight_archive(std::span<const std::uint8_t> bytes);
WeightArchive load_weight_archive_file(const std::string& path);

std::vector<std::uint8_t> write_weight_archive(const WeightArchive& archive);
void write_weight_archive_file(const WeightArchive& archive, const std::string& path);

}  // namespace maskpipe
