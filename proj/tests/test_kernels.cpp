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

#include <cmath>
#include <random>

#include "maskpipe/errors.hpp"
#include "maskpipe/kernels.hpp"
#include "oracle.hpp"

using namespace maskpipe;

namespace {

std::vector<float> to_vec(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

Tensor random_tensor(std::mt19937& rng, Shape s) {
  return Tensor(s, oracle::uniform(rng, s.elements(), -2.0f, 2.0f));
}

}  // namespace

TEST_CASE("axis geometry puts the odd padding pixel at the end") {
  // in 224, k 3, s 2: out 112, total pad 1 -> begin 0
  auto g = axis_geometry(224, 3, 2, Padding::same);
  CHECK(g.out == 112);
  CHECK(g.pad_begin == 0);
  g = axis_geometry(7, 3, 1, Padding::same);
  CHECK(g.out == 7);
  CHECK(g.pad_begin == 1);
  g = axis_geometry(5, 3, 1, Padding::valid);
  CHECK(g.out == 3);
  CHECK_THROWS_AS(axis_geometry(5, 3, 0, Padding::same), ParameterError);
}

TEST_CASE("conv2d examples") {
  SUBCASE("3x3 ones kernel sums the neighbourhood") {
    Tensor in(Shape{1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    Tensor k(Shape{1, 1, 3, 3}, 1.0f);
    const std::vector<float> bias{0.0f};
    const Tensor out = conv2d(in, k, bias, 1, Padding::same);
    CHECK(out.shape() == Shape{1, 1, 3, 3});
    CHECK(out.at(0, 0, 1, 1) == 45.0f);
    CHECK(out.at(0, 0, 0, 0) == 12.0f);  // 1+2+4+5
  }
  SUBCASE("1x1 unit kernel is the identity") {
    std::mt19937 rng(1);
    const Tensor in = random_tensor(rng, {2, 1, 5, 4});
    const Tensor out = conv2d(in, Tensor(Shape{1, 1, 1, 1}, 1.0f), std::vector<float>{0.0f}, 1, Padding::same);
    CHECK(out == in);
  }
  SUBCASE("zero kernel annihilates") {
    std::mt19937 rng(2);
    const Tensor in = random_tensor(rng, {1, 3, 6, 6});
    const Tensor out = conv2d(in, Tensor(Shape{4, 3, 3, 3}), std::vector<float>(4, 0.0f), 2, Padding::same);
    CHECK(out.shape() == Shape{1, 4, 3, 3});
    for (float v : out.data()) CHECK(v == 0.0f);
  }
  SUBCASE("errors") {
    Tensor in(Shape{1, 2, 4, 4});
    CHECK_THROWS_AS(conv2d(in, Tensor(Shape{1, 3, 3, 3}), std::vector<float>{0}, 1, Padding::same), ShapeError);
    CHECK_THROWS_AS(conv2d(in, Tensor(Shape{1, 2, 5, 5}), std::vector<float>{0}, 1, Padding::valid), ShapeError);
    CHECK_THROWS_AS(conv2d(in, Tensor(Shape{2, 2, 3, 3}), std::vector<float>{0}, 1, Padding::same), ShapeError);
  }
}

TEST_CASE("depthwise_conv2d examples") {
  SUBCASE("scaled centred delta doubles the input") {
    std::mt19937 rng(3);
    const Tensor in = random_tensor(rng, {1, 3, 5, 6});
    Tensor k(Shape{3, 1, 3, 3});
    for (std::size_t c = 0; c < 3; ++c) k.at(c, 0, 1, 1) = 2.0f;
    const Tensor out = depthwise_conv2d(in, k, std::vector<float>(3, 0.0f), 1, Padding::same);
    for (std::size_t i = 0; i < in.size(); ++i) CHECK(out.data()[i] == 2.0f * in.data()[i]);
  }
  SUBCASE("per-channel 2x2 valid sums") {
    Tensor in(Shape{1, 2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
    const Tensor out = depthwise_conv2d(in, Tensor(Shape{2, 1, 2, 2}, 1.0f), std::vector<float>(2, 0.0f), 1,
                                        Padding::valid);
    CHECK(out.shape() == Shape{1, 2, 1, 1});
    CHECK(out.at(0, 0, 0, 0) == 10.0f);
    CHECK(out.at(0, 1, 0, 0) == 26.0f);
  }
  SUBCASE("channel mismatch") {
    CHECK_THROWS_AS(depthwise_conv2d(Tensor(Shape{1, 3, 4, 4}), Tensor(Shape{2, 1, 3, 3}),
                                     std::vector<float>(2, 0.0f), 1, Padding::same),
                    ShapeError);
  }
}

TEST_CASE("depthwise equals conv2d with a block-diagonal kernel") {
  std::mt19937 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t c = 1 + rng() % 4;
    const std::size_t stride = 1 + rng() % 2;
    const Padding pad = rng() % 2 ? Padding::same : Padding::valid;
    const Tensor in = random_tensor(rng, {1, c, 5, 5});
    const Tensor k = random_tensor(rng, {c, 1, 3, 3});
    const auto bias = oracle::uniform(rng, c, -1.0f, 1.0f);
    Tensor full(Shape{c, c, 3, 3});
    for (std::size_t o = 0; o < c; ++o)
      for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t x = 0; x < 3; ++x) full.at(o, o, y, x) = k.at(o, 0, y, x);
    const Tensor a = depthwise_conv2d(in, k, bias, stride, pad);
    const Tensor b = conv2d(in, full, bias, stride, pad);
    REQUIRE(a.shape() == b.shape());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.data()[i] - b.data()[i]) <= 1e-6f);
  }
}

TEST_CASE("kernels match naive oracles on random instances") {
  std::mt19937 rng(5);
  auto dim = [&] { return 1 + rng() % 8; };
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Shape is{1 + rng() % 2, dim(), dim(), dim()};
    const std::size_t oc = dim();
    const std::size_t kh = 1 + rng() % std::min<std::size_t>(is.h, 5);
    const std::size_t kw = 1 + rng() % std::min<std::size_t>(is.w, 5);
    const std::size_t stride = 1 + rng() % 3;
    const bool same = rng() % 2;
    const Tensor in = random_tensor(rng, is);
    const Tensor k = random_tensor(rng, {oc, is.c, kh, kw});
    const auto bias = oracle::uniform(rng, oc, -2.0f, 2.0f);
    oracle::Dims od{};
    const auto expected = oracle::conv2d(to_vec(in), {is.n, is.c, is.h, is.w}, to_vec(k),
                                         {oc, is.c, kh, kw}, bias, static_cast<long>(stride), same, &od);
    const Tensor out = conv2d(in, k, bias, stride, same ? Padding::same : Padding::valid);
    REQUIRE(out.shape() == Shape{od.n, od.c, od.h, od.w});
    for (std::size_t i = 0; i < expected.size(); ++i) worst = std::max(worst, oracle::rel_error(out.data()[i], expected[i]));

    const Tensor dk = random_tensor(rng, {is.c, 1, kh, kw});
    const auto dbias = oracle::uniform(rng, is.c, -2.0f, 2.0f);
    const auto dexp = oracle::depthwise(to_vec(in), {is.n, is.c, is.h, is.w}, to_vec(dk), kh, kw, dbias,
                                        static_cast<long>(stride), same, &od);
    const Tensor dout = depthwise_conv2d(in, dk, dbias, stride, same ? Padding::same : Padding::valid);
    REQUIRE(dout.shape() == Shape{od.n, od.c, od.h, od.w});
    for (std::size_t i = 0; i < dexp.size(); ++i) worst = std::max(worst, oracle::rel_error(dout.data()[i], dexp[i]));

    const Tensor flat = random_tensor(rng, {is.n, is.c * is.h, 1, 1});
    const auto w = oracle::uniform(rng, oc * is.c * is.h, -2.0f, 2.0f);
    const auto db = oracle::uniform(rng, oc, -2.0f, 2.0f);
    const auto fexp = oracle::dense(to_vec(flat), is.n, is.c * is.h, w, db);
    const Tensor fout = dense(flat, w, db);
    for (std::size_t i = 0; i < fexp.size(); ++i) worst = std::max(worst, oracle::rel_error(fout.data()[i], fexp[i]));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("affine_channel and batch-norm folding") {
  Tensor in(Shape{1, 1, 1, 1}, {3.0f});
  CHECK(affine_channel(in, std::vector<float>{2}, std::vector<float>{1}).data()[0] == 7.0f);
  std::mt19937 rng(6);
  const Tensor x = random_tensor(rng, {2, 3, 4, 4});
  CHECK(affine_channel(x, std::vector<float>(3, 1.0f), std::vector<float>(3, 0.0f)) == x);

  const std::vector<float> one{1}, zero{0};
  auto f = fold_batch_norm(std::vector<float>{2}, one, zero, one, 0.0);
  CHECK(f.scale[0] == 2.0f);
  CHECK(f.shift[0] == 1.0f);
  const Tensor y = affine_channel(Tensor(x.shape(), std::vector<float>(x.data().begin(), x.data().end())),
                                  std::vector<float>(3, f.scale[0]), std::vector<float>(3, f.shift[0]));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.data()[i] == doctest::Approx(2.0f * x.data()[i] + 1.0f));

  f = fold_batch_norm(std::vector<float>{2}, std::vector<float>{1}, std::vector<float>{3}, std::vector<float>{4}, 0.0);
  CHECK(f.scale[0] == 1.0f);
  CHECK(f.shift[0] == -2.0f);
  CHECK_THROWS_AS(affine_channel(x, std::vector<float>(2, 1.0f), std::vector<float>(3, 0.0f)), ShapeError);
}

TEST_CASE("relu6, pooling, dense, softmax") {
  const Tensor r = relu6(Tensor(Shape{1, 3, 1, 1}, {-1.0f, 3.0f, 7.0f}));
  CHECK(r.data()[0] == 0.0f);
  CHECK(r.data()[1] == 3.0f);
  CHECK(r.data()[2] == 6.0f);

  CHECK(global_avg_pool(Tensor(Shape{1, 1, 2, 2}, {1, 2, 3, 4})).data()[0] == 2.5f);
  CHECK(global_avg_pool(Tensor(Shape{1, 2, 3, 3}, 4.25f)).data()[1] == 4.25f);
  CHECK(global_avg_pool(Tensor(Shape{1, 1280, 7, 7})).shape() == Shape{1, 1280, 1, 1});
  CHECK_THROWS_AS(global_avg_pool(Tensor(Shape{1, 2, 0, 3})), ShapeError);

  const Tensor d = dense(Tensor(Shape{1, 2, 1, 1}, {2, 3}), std::vector<float>{1, 1}, std::vector<float>{1});
  CHECK(d.data()[0] == 6.0f);
  const Tensor id = dense(Tensor(Shape{1, 2, 1, 1}, {2, 3}), std::vector<float>{1, 0, 0, 1}, std::vector<float>{0, 0});
  CHECK(id.data()[0] == 2.0f);
  CHECK(id.data()[1] == 3.0f);
  CHECK_THROWS_AS(dense(Tensor(Shape{1, 3, 1, 1}), std::vector<float>{1, 1}, std::vector<float>{0}), ShapeError);

  const Tensor half = softmax(Tensor(Shape{1, 2, 1, 1}, {0, 0}));
  CHECK(half.data()[0] == 0.5f);
  const Tensor q = softmax(Tensor(Shape{1, 2, 1, 1}, {static_cast<float>(std::log(3.0)), 0.0f}));
  CHECK(q.data()[0] == doctest::Approx(0.75).epsilon(1e-6));
  CHECK(q.data()[1] == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("softmax properties on random vectors") {
  std::mt19937 rng(7);
  for (int t = 0; t < 200; ++t) {
    const std::size_t c = 1 + rng() % 16;
    auto v = oracle::uniform(rng, c, -20.0f, 20.0f);
    const Tensor s = softmax(Tensor(Shape{1, c, 1, 1}, v));
    double sum = 0.0;
    for (float p : s.data()) sum += p;
    CHECK(std::abs(sum - 1.0) <= 1e-6);
    const auto arg_in = std::max_element(v.begin(), v.end()) - v.begin();
    const auto arg_out = std::max_element(s.data().begin(), s.data().end()) - s.data().begin();
    CHECK(arg_in == arg_out);
    for (auto& x : v) x += 3.0f;  // exact shift on a coarse grid keeps inputs representable
    const Tensor shifted = softmax(Tensor(Shape{1, c, 1, 1}, v));
    for (std::size_t i = 0; i < c; ++i) CHECK(std::abs(shifted.data()[i] - s.data()[i]) <= 1e-6f);
  }
}

TEST_CASE("relu6 stays in range and kernels are deterministic") {
  std::mt19937 rng(8);
  const Tensor x = Tensor(Shape{1, 4, 6, 6}, oracle::uniform(rng, 144, -10.0f, 10.0f));
  const Tensor clipped = relu6(x);
  for (float v : clipped.data()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 6.0f);
  }
  const Tensor k = random_tensor(rng, {5, 4, 3, 3});
  const std::vector<float> b(5, 0.25f);
  CHECK(conv2d(x, k, b, 2, Padding::same) == conv2d(x, k, b, 2, Padding::same));
}
