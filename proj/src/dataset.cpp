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
#include "maskpipe/dataset.hpp"

#include <fstream>
#include <iterator>
#include <set>

#include "maskpipe/errors.hpp"

namespace maskpipe {
namespace {

struct CsvRow {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

// RFC 4180 records; quoted fields may span lines. Blank lines are skipped.
std::vector<CsvRow> read_csv(std::string_view text) {
  std::vector<CsvRow> rows;
  std::size_t line = 1;
  std::size_t i = 0;
  if (text.starts_with("\xEF\xBB\xBF")) i = 3;
  while (i < text.size()) {
    CsvRow row;
    row.line = line;
    std::string field;
    bool quoted = false;
    bool any = false;
    while (i < text.size()) {
      const char ch = text[i];
      if (quoted) {
        if (ch == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            field += '"';
            i += 2;
            continue;
          }
          quoted = false;
          ++i;
          continue;
        }
        if (ch == '\n') ++line;
        field += ch;
        ++i;
        continue;
      }
      if (ch == '"' && field.empty()) {
        quoted = true;
        any = true;
        ++i;
        continue;
      }
      if (ch == ',') {
        row.fields.push_back(std::move(field));
        field.clear();
        any = true;
        ++i;
        continue;
      }
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
        ++i;
        continue;
      }
      if (ch == '\n') {
        ++i;
        break;
      }
      field += ch;
      any = true;
      ++i;
    }
    if (quoted) throw ParseError(row.line, "unterminated quoted field");
    if (any || !field.empty()) {
      row.fields.push_back(std::move(field));
      rows.push_back(std::move(row));
    }
    ++line;
  }
  return rows;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

// Skips whitespace and '#' comments between PPM header tokens.
std::size_t skip_separators(std::span<const std::uint8_t> bytes, std::size_t pos) {
  while (pos < bytes.size()) {
    const char ch = static_cast<char>(bytes[pos]);
    if (ch == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n' && bytes[pos] != '\r') ++pos;
    } else if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\v' || ch == '\f') {
      ++pos;
    } else {
      break;
    }
  }
  return pos;
}

std::size_t read_header_int(std::span<const std::uint8_t> bytes, std::size_t& pos,
                            const char* what) {
  pos = skip_separators(bytes, pos);
  if (pos >= bytes.size()) throw CorruptionError(std::string("PPM header truncated before ") + what);
  std::size_t value = 0;
  std::size_t digits = 0;
  while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
    value = value * 10 + (bytes[pos] - '0');
    if (value > 1'000'000'000) throw FormatError(std::string("PPM ") + what + " is too large");
    ++pos;
    ++digits;
  }
  if (digits == 0) throw FormatError(std::string("PPM header: expected ") + what);
  return value;
}

}  // namespace

std::string_view to_string(Split split) { return split == Split::train ? "train" : "test"; }

DatasetManifest parse_manifest(std::string_view text, const std::vector<std::string>& class_names) {
  const auto rows = read_csv(text);
  if (rows.empty()) throw ParseError(1, "manifest is empty; expected header path,label,split");
  const auto& header = rows.front();
  DatasetManifest manifest;
  const std::vector<std::string> base{"path", "label", "split"};
  if (header.fields == base) {
    manifest.has_augment_column = false;
  } else if (header.fields.size() == 4 &&
             std::equal(base.begin(), base.end(), header.fields.begin()) &&
             header.fields[3] == "augment") {
    manifest.has_augment_column = true;
  } else {
    throw ParseError(header.line, "header must be path,label,split[,augment]");
  }
  const std::set<std::string> labels(class_names.begin(), class_names.end());
  std::set<std::string> paths;
  const std::size_t columns = header.fields.size();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    if (row.fields.size() != columns) {
      throw ParseError(row.line, "expected " + std::to_string(columns) + " fields, found " +
                                     std::to_string(row.fields.size()));
    }
    ManifestEntry entry;
    entry.path = row.fields[0];
    entry.label = row.fields[1];
    if (entry.path.empty()) throw ParseError(row.line, "empty path");
    if (!labels.contains(entry.label)) {
      throw ParseError(row.line, "unknown label '" + entry.label + "'");
    }
    if (row.fields[2] == "train") {
      entry.split = Split::train;
    } else if (row.fields[2] == "test") {
      entry.split = Split::test;
    } else {
      throw ParseError(row.line, "split must be train or test, got '" + row.fields[2] + "'");
    }
    if (!paths.insert(entry.path).second) {
      throw ParseError(row.line, "duplicate path '" + entry.path + "'");
    }
    if (columns == 4 && !row.fields[3].empty()) {
      try {
        entry.augment = plan_from_json(nlohmann::json::parse(row.fields[3]));
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(row.line, std::string("augment column is not JSON: ") + e.what());
      } catch (const ParameterError& e) {
        throw ParseError(row.line, e.what());
      }
    }
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

std::string serialize_manifest(const DatasetManifest& manifest) {
  bool with_augment = manifest.has_augment_column;
  for (const auto& e : manifest.entries) with_augment = with_augment || e.augment.has_value();
  std::string out = with_augment ? "path,label,split,augment\n" : "path,label,split\n";
  for (const auto& e : manifest.entries) {
    out += csv_field(e.path) + "," + csv_field(e.label) + "," + std::string(to_string(e.split));
    if (with_augment) {
      out += ",";
      if (e.augment) out += csv_field(plan_to_json(*e.augment).dump());
    }
    out += "\n";
  }
  return out;
}

std::uint64_t SplitStats::label_total(const std::string& label) const {
  std::uint64_t sum = 0;
  if (auto it = train.find(label); it != train.end()) sum += it->second;
  if (auto it = test.find(label); it != test.end()) sum += it->second;
  return sum;
}

std::uint64_t SplitStats::train_total() const {
  std::uint64_t sum = 0;
  for (const auto& [_, n] : train) sum += n;
  return sum;
}

std::uint64_t SplitStats::test_total() const {
  std::uint64_t sum = 0;
  for (const auto& [_, n] : test) sum += n;
  return sum;
}

std::uint64_t SplitStats::total() const { return train_total() + test_total(); }

SplitStats split_stats(const DatasetManifest& manifest) {
  SplitStats stats;
  for (const auto& e : manifest.entries) {
    ++(e.split == Split::train ? stats.train : stats.test)[e.label];
  }
  return stats;
}

Image decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw FormatError("not a binary PPM (expected magic P6)");
  }
  std::size_t pos = 2;
  if (pos < bytes.size() && skip_separators(bytes, pos) == pos) {
    throw FormatError("PPM magic must be followed by whitespace");
  }
  const std::size_t width = read_header_int(bytes, pos, "width");
  const std::size_t height = read_header_int(bytes, pos, "height");
  const std::size_t maxval = read_header_int(bytes, pos, "maxval");
  if (maxval != 255) {
    throw UnsupportedError("PPM maxval " + std::to_string(maxval) + " unsupported (need 255)");
  }
  if (width == 0 || height == 0) throw FormatError("PPM has zero width or height");
  if (pos >= bytes.size()) throw CorruptionError("PPM pixel data missing");
  const char sep = static_cast<char>(bytes[pos]);
  if (sep != ' ' && sep != '\t' && sep != '\n' && sep != '\r') {
    throw FormatError("PPM maxval must be followed by a single whitespace byte");
  }
  ++pos;
  const std::size_t needed = width * height * 3;
  if (bytes.size() - pos < needed) {
    throw CorruptionError("PPM pixel data short: need " + std::to_string(needed) + " bytes, have " +
                          std::to_string(bytes.size() - pos));
  }
  Image image(width, height);
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), needed, image.pixels.begin());
  return image;
}

std::vector<std::uint8_t> encode_ppm(const Image& image) {
  const std::string header =
      "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

Image read_ppm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_ppm(bytes);
}

void write_ppm_file(const Image& image, const std::string& path) {
  const auto bytes = encode_ppm(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace maskpipe
