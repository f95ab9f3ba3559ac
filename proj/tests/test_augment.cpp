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

#include <random>

#include "maskpipe/augment.hpp"
#include "maskpipe/errors.hpp"
#include "oracle.hpp"

using namespace maskpipe;

namespace {

Image pixels_from(std::size_t w, std::size_t h, const std::vector<std::uint8_t>& gray) {
  Image img(w, h);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) img.pixels[i * 3 + c] = static_cast<std::uint8_t>(gray[i] + c);
  }
  return img;
}

}  // namespace

TEST_CASE("hflip") {
  const Image ab = pixels_from(2, 1, {10, 20});
  CHECK(hflip(ab) == pixels_from(2, 1, {20, 10}));

  Image halves(4, 2, 0);
  for (std::size_t y = 0; y < 2; ++y)
    for (std::size_t x = 2; x < 4; ++x)
      for (std::size_t c = 0; c < 3; ++c) halves.at(x, y, c) = 255;
  const Image flipped = hflip(halves);
  CHECK(flipped.at(0, 0, 0) == 255);
  CHECK(flipped.at(3, 1, 0) == 0);

  std::mt19937 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Image img = oracle::random_image(rng, 1 + rng() % 9, 1 + rng() % 9);
    REQUIRE(hflip(hflip(img)) == img);
  }
}

TEST_CASE("rotate") {
  // a b      b d
  // c d  ->  a c   (counter-clockwise quarter turn)
  const Image img = pixels_from(2, 2, {1, 2, 3, 4});
  CHECK(rotate(img, 90.0f) == pixels_from(2, 2, {2, 4, 1, 3}));
  CHECK(rotate(img, 180.0f) == pixels_from(2, 2, {4, 3, 2, 1}));
  CHECK(rotate(img, -90.0f) == pixels_from(2, 2, {3, 1, 4, 2}));
  CHECK(rotate(img, 0.0f) == img);
  CHECK(rotate(img, 360.0f) == img);

  std::mt19937 rng(2);
  for (int i = 0; i < 100; ++i) {
    const std::size_t side = 1 + rng() % 9;
    const Image sq = oracle::random_image(rng, side, side);
    REQUIRE(rotate(rotate(rotate(rotate(sq, 90.0f), 90.0f), 90.0f), 90.0f) == sq);
    const Image any = oracle::random_image(rng, 1 + rng() % 9, 1 + rng() % 9);
    REQUIRE(rotate(rotate(any, 180.0f), 180.0f) == any);
  }

  SUBCASE("arbitrary angles keep dimensions and fill black") {
    const Image white(9, 5, 255);
    const Image r = rotate(white, 30.0f);
    CHECK(r.width == 9);
    CHECK(r.height == 5);
    CHECK(r.at(4, 2, 0) == 255);  // centre stays inside
    CHECK(r.at(0, 0, 0) < 255);   // corner samples leave the frame
  }
  SUBCASE("quarter turn of a non-square image preserves dimensions") {
    const Image wide = oracle::random_image(rng, 6, 4);
    const Image r = rotate(wide, 90.0f);
    CHECK(r.width == 6);
    CHECK(r.height == 4);
  }
}

TEST_CASE("adjust_color") {
  std::mt19937 rng(3);
  for (int i = 0; i < 100; ++i) {
    const Image img = oracle::random_image(rng, 1 + rng() % 9, 1 + rng() % 9);
    REQUIRE(adjust_color(img, 1.0f, 1.0f) == img);
  }
  CHECK(adjust_color(Image(1, 1, 200), 2.0f, 1.0f).pixels[0] == 255);
  CHECK(adjust_color(Image(1, 1, 100), 1.0f, 2.0f).pixels[0] == 72);
  CHECK(adjust_color(Image(1, 1, 10), 1.0f, 3.0f).pixels[0] == 0);
  CHECK(adjust_color(Image(1, 1, 101), 0.5f, 1.0f).pixels[0] == 51);  // 50.5 rounds up
  CHECK_THROWS_AS(adjust_color(Image(1, 1), -1.0f, 1.0f), ParameterError);
}

TEST_CASE("shift_shear") {
  std::mt19937 rng(4);
  const Image img = oracle::random_image(rng, 4, 3);
  CHECK(shift_shear(img, 0.0f, 0.0f, 0.0f) == img);

  const Image shifted = shift_shear(img, 0.5f, 0.0f, 0.0f);
  for (std::size_t y = 0; y < 3; ++y) {
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(shifted.at(0, y, c) == 0);
      CHECK(shifted.at(1, y, c) == 0);
      CHECK(shifted.at(2, y, c) == img.at(0, y, c));
      CHECK(shifted.at(3, y, c) == img.at(1, y, c));
    }
  }

  // Shift right then back: only the columns pushed out of frame are lost.
  const Image big = oracle::random_image(rng, 8, 6);
  const Image back = shift_shear(shift_shear(big, 0.25f, 0.0f, 0.0f), -0.25f, 0.0f, 0.0f);
  for (std::size_t y = 0; y < 6; ++y)
    for (std::size_t x = 0; x < 6; ++x)
      for (std::size_t c = 0; c < 3; ++c) REQUIRE(back.at(x, y, c) == big.at(x, y, c));

  const Image down = shift_shear(big, 0.0f, 0.5f, 0.0f);
  CHECK(down.at(0, 3, 0) == big.at(0, 0, 0));

  // Integer shear: centre row fixed, rows one away shift by one pixel.
  const Image sq = oracle::random_image(rng, 5, 5);
  const Image sheared = shift_shear(sq, 0.0f, 0.0f, 1.0f);
  CHECK(sheared.at(2, 2, 0) == sq.at(2, 2, 0));
  CHECK(sheared.at(2, 3, 0) == sq.at(1, 3, 0));
  CHECK(sheared.at(2, 1, 0) == sq.at(3, 1, 0));

  CHECK_THROWS_AS(shift_shear(sq, 1.5f, 0.0f, 0.0f), ParameterError);
}

TEST_CASE("all transforms keep dimensions") {
  std::mt19937 rng(5);
  for (int i = 0; i < 50; ++i) {
    const Image img = oracle::random_image(rng, 1 + rng() % 12, 1 + rng() % 12);
    for (const Image& out : {hflip(img), rotate(img, 17.0f), adjust_color(img, 1.3f, 0.7f),
                             shift_shear(img, 0.3f, -0.2f, 0.4f)}) {
      CHECK(out.width == img.width);
      CHECK(out.height == img.height);
      CHECK(out.pixels.size() == img.pixels.size());
    }
  }
}

TEST_CASE("apply_plan") {
  std::mt19937 rng(6);
  const Image img = oracle::random_image(rng, 5, 5);
  CHECK(apply_plan(AugmentPlan{}, img).empty());

  AugmentPlan plan{7, {FlipOp{}, RotateOp{ParamRange::fixed(90.0f)}}};
  const auto out = apply_plan(plan, img);
  REQUIRE(out.size() == 2);
  CHECK(out[0] == hflip(img));
  CHECK(out[1] == rotate(img, 90.0f));
  CHECK(out[0] != out[1]);

  AugmentPlan random{42,
                     {RotateOp{{-20.0f, 20.0f}}, ColorOp{{0.8f, 1.2f}, {0.8f, 1.2f}},
                      ShiftOp{{-0.2f, 0.2f}, {-0.1f, 0.1f}}, ShearOp{{-0.3f, 0.3f}}}};
  CHECK(apply_plan(random, img) == apply_plan(random, img));
  AugmentPlan other = random;
  other.seed = 43;
  CHECK(apply_plan(other, img) != apply_plan(random, img));
}

TEST_CASE("plan JSON round trip") {
  const AugmentPlan plan{9,
                         {FlipOp{}, RotateOp{ParamRange::fixed(90.0f)}, RotateOp{{-15.0f, 15.0f}},
                          ColorOp{ParamRange::fixed(1.25f), {0.5f, 1.5f}},
                          ShiftOp{ParamRange::fixed(0.25f), ParamRange::fixed(0.0f)},
                          ShearOp{ParamRange::fixed(0.5f)}}};
  const auto j = plan_to_json(plan);
  CHECK(plan_from_json(j) == plan);
  CHECK(plan_from_json(nlohmann::json::parse(j.dump())) == plan);

  const auto simple = plan_from_json(nlohmann::json::parse(R"([{"flip":true}])"));
  CHECK(simple.seed == 0);
  CHECK(simple.ops.size() == 1);
  CHECK(plan_to_json(simple).dump() == R"([{"flip":true}])");

  CHECK_THROWS_AS(plan_from_json(nlohmann::json::parse(R"([{"zoom":2}])")), ParameterError);
  CHECK_THROWS_AS(plan_from_json(nlohmann::json::parse(R"([{"shift":{"dx":2}}])")), ParameterError);
  CHECK_THROWS_AS(plan_from_json(nlohmann::json::parse(R"({"flip":true})")), ParameterError);
}
