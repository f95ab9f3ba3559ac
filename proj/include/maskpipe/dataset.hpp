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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maskpipe/augment.hpp"
#include "maskpipe/image.hpp"

namespace maskpipe {

enum class Split { train, test };

std::string_view to_string(Split split);

struct ManifestEntry {
  std::string path;
  std::string label;
  Split split = Split::train;
  std::optional<AugmentPlan> augment;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  bool has_augment_column = false;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Parses "path,label,split[,augment]" CSV (RFC 4180 quoting). Labels must come from
/// class_names. Throws ParseError carrying the 1-based line of the first bad row.
DatasetManifest parse_manifest(std::string_view text,
                               const std::vector<std::string>& class_names);

std::string serialize_manifest(const DatasetManifest& manifest);

struct SplitStats {
  std::map<std::string, std::uint64_t> train;  // keyed by label
  std::map<std::string, std::uint64_t> test;

  std::uint64_t label_total(const std::string& label) const;
  std::uint64_t train_total() const;
  std::uint64_t test_total() const;
  std::uint64_t total() const;
};

SplitStats split_stats(const DatasetManifest& manifest);

/// Binary PPM (P6, maxval 255).
Image decode_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_ppm(const Image& image);

Image read_ppm_file(const std::string& path);
void write_ppm_file(const Image& image, const std::string& path);

}  // namespace maskpipe
