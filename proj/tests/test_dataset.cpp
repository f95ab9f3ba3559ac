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
#include <doctest.h>

#include <algorithm>
#include <random>
#include <string>

#include "maskpipe/dataset.hpp"
#include "maskpipe/errors.hpp"
#include "oracle.hpp"

using namespace maskpipe;

namespace {

const std::vector<std::string> kBinary = {"with_mask", "without_mask"};

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

std::size_t parse_error_line(const std::string& text) {
  try {
    parse_manifest(text, kBinary);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

DatasetManifest table_manifest(const std::vector<std::tuple<std::string, Split, std::size_t>>& cells) {
  DatasetManifest m;
  std::size_t id = 0;
  for (const auto& [label, split, n] : cells) {
    for (std::size_t i = 0; i < n; ++i) {
      m.entries.push_back({"img" + std::to_string(id++) + ".ppm", label, split, std::nullopt});
    }
  }
  return m;
}

}  // namespace

TEST_CASE("parse_manifest") {
  const auto m = parse_manifest(
      "path,label,split\nimages/a.ppm,with_mask,train\nimages/b.ppm,without_mask,test\n", kBinary);
  REQUIRE(m.entries.size() == 2);
  CHECK(m.entries[0].path == "images/a.ppm");
  CHECK(m.entries[1].label == "without_mask");
  CHECK(m.entries[1].split == Split::test);
  CHECK_FALSE(m.has_augment_column);

  CHECK(parse_error_line("path,label,split\na.ppm,maybe_mask,train\n") == 2);
  CHECK(parse_error_line("path,label,split\na.ppm,with_mask,train\na.ppm,with_mask,test\n") == 3);
  CHECK(parse_error_line("path,label,split\na.ppm,with_mask,validate\n") == 2);
  CHECK(parse_error_line("path,label\n") == 1);
  CHECK(parse_error_line("") == 1);
  CHECK(parse_error_line("path,label,split\na.ppm,with_mask\n") == 2);
  CHECK(parse_error_line("path,label,split,augment\na.ppm,with_mask,train,not json\n") == 2);
  CHECK(parse_error_line("path,label,split\n\"a.ppm,with_mask,train\n") == 2);

  SUBCASE("CRLF and quoted fields") {
    const auto q = parse_manifest("path,label,split\r\n\"dir, x/a.ppm\",with_mask,test\r\n", kBinary);
    REQUIRE(q.entries.size() == 1);
    CHECK(q.entries[0].path == "dir, x/a.ppm");
  }
}

TEST_CASE("manifest round trip with augment plans") {
  const std::string text =
      "path,label,split,augment\n"
      "a.ppm,with_mask,train,\"[{\"\"flip\"\":true}]\"\n"
      "b.ppm,without_mask,train,\n"
      "c.ppm,with_mask,test,\"{\"\"seed\"\":5,\"\"ops\"\":[{\"\"rotate\"\":{\"\"min\"\":-10.0,\"\"max\"\":10.0}}]}\"\n";
  const auto m = parse_manifest(text, kBinary);
  REQUIRE(m.entries.size() == 3);
  REQUIRE(m.entries[0].augment.has_value());
  CHECK(m.entries[0].augment->ops.size() == 1);
  CHECK_FALSE(m.entries[1].augment.has_value());
  CHECK(m.entries[2].augment->seed == 5);
  const std::string once = serialize_manifest(m);
  CHECK(parse_manifest(once, kBinary) == m);
  CHECK(serialize_manifest(parse_manifest(once, kBinary)) == once);
}

TEST_CASE("split_stats") {
  const auto table = table_manifest({{"with_mask", Split::train, 8079},
                                     {"with_mask", Split::test, 2020},
                                     {"without_mask", Split::train, 9046},
                                     {"without_mask", Split::test, 2262}});
  const SplitStats s = split_stats(table);
  CHECK(s.label_total("with_mask") == 10099);
  CHECK(s.label_total("without_mask") == 11308);
  CHECK(s.train_total() == 17125);
  CHECK(s.test_total() == 4282);
  CHECK(s.total() == 21407);

  DatasetManifest shuffled = table;
  std::mt19937 rng(10);
  std::shuffle(shuffled.entries.begin(), shuffled.entries.end(), rng);
  const SplitStats t = split_stats(shuffled);
  CHECK(t.train == s.train);
  CHECK(t.test == s.test);

  const SplitStats empty = split_stats(DatasetManifest{});
  CHECK(empty.total() == 0);
  CHECK(empty.train_total() == 0);
  CHECK(empty.label_total("with_mask") == 0);

  const SplitStats small =
      split_stats(table_manifest({{"with_mask", Split::train, 3}, {"with_mask", Split::test, 1}}));
  CHECK(small.train_total() == 3);
  CHECK(small.test_total() == 1);
  CHECK(small.total() == 4);
}

TEST_CASE("decode_ppm") {
  std::vector<std::uint8_t> minimal = bytes_of("P6 2 1 255 ");
  for (const std::uint8_t b : {255, 0, 0, 0, 255, 0}) minimal.push_back(b);
  const Image img = decode_ppm(minimal);
  CHECK(img.width == 2);
  CHECK(img.height == 1);
  CHECK(img.pixels == std::vector<std::uint8_t>{255, 0, 0, 0, 255, 0});

  std::vector<std::uint8_t> commented = bytes_of("P6\n# made by hand\n2 # width\n1\n255\n");
  for (const std::uint8_t b : {255, 0, 0, 0, 255, 0}) commented.push_back(b);
  CHECK(decode_ppm(commented) == img);

  CHECK_THROWS_AS(decode_ppm(bytes_of("P5 2 1 255 \x01\x02")), FormatError);
  CHECK_THROWS_AS(decode_ppm(bytes_of("")), FormatError);
  CHECK_THROWS_AS(decode_ppm(bytes_of("P6 2 1 65535 ")), UnsupportedError);
  CHECK_THROWS_AS(decode_ppm(bytes_of("P6 2 1 255 abc")), CorruptionError);
  CHECK_THROWS_AS(decode_ppm(bytes_of("P6 2")), CorruptionError);
}

TEST_CASE("PPM round trip") {
  std::mt19937 rng(11);
  for (int i = 0; i < 100; ++i) {
    const Image img = oracle::random_image(rng, 1 + rng() % 16, 1 + rng() % 16);
    REQUIRE(decode_ppm(encode_ppm(img)) == img);
  }
}
