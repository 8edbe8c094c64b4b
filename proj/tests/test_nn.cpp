// Copyright 2026 The TextBoxes-Desk Authors. All Rights Reserved.
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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "textboxes/errors.hpp"
#include "textboxes/nn.hpp"

using namespace textboxes;
using namespace textboxes::nn;

namespace {

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST(Tensor, ShapeAndSizeAgree) {
  Tensor t({2, 3, 4, 5}, 1.5);
  EXPECT_EQ(t.size(), 120u);
  EXPECT_EQ(t.at(1, 2, 3, 4), 1.5);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>(3)), ShapeError);
  EXPECT_THROW(Tensor({0, 2}), ShapeError);
}

TEST(Tensor, CheckFiniteRejectsNanAndInf) {
  Tensor t({1, 1, 1, 2});
  EXPECT_NO_THROW(check_finite(t, "t"));
  t[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(check_finite(t, "t"), NumericError);
  t[1] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(check_finite(t, "t"), NumericError);
}

TEST(Conv, ZeroInputGivesZeroOutput) {
  std::mt19937_64 rng(1);
  ConvLayer layer(oracle::random_tensor({2, 1, 3, 3}, rng), Tensor({2}), 1, {1, 1});
  const Tensor y = conv2d_forward(Tensor({1, 1, 3, 3}), layer);
  EXPECT_EQ(y.shape(), (Shape{1, 2, 3, 3}));
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(Conv, OneByFiveSlidingSum) {
  ConvLayer layer(Tensor({1, 1, 1, 5}, 1.0), Tensor({1}), 1, same_padding(1, 5));
  EXPECT_EQ(layer.padding(), (Padding{0, 2}));
  const Tensor x({1, 1, 1, 5}, {1, 2, 3, 4, 5});
  const Tensor y = conv2d_forward(x, layer);
  EXPECT_EQ(y, Tensor({1, 1, 1, 5}, {6, 10, 15, 14, 12}));
}

TEST(Conv, IdentityKernel) {
  std::mt19937_64 rng(2);
  const Tensor x = oracle::random_tensor({2, 1, 4, 6}, rng);
  ConvLayer layer(Tensor({1, 1, 1, 1}, 1.0), Tensor({1}), 1, {0, 0});
  EXPECT_EQ(conv2d_forward(x, layer), x);
}

TEST(Conv, MatchesNaiveLoops) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<int> d(1, 4), ks(1, 3), st(1, 2), sz(3, 9);
    const int c = d(rng), o = d(rng), kh = 2 * ks(rng) - 1, kw = 2 * ks(rng) - 1;
    const int stride = st(rng);
    const Tensor x = oracle::random_tensor({2, c, sz(rng), sz(rng)}, rng);
    const Tensor k = oracle::random_tensor({o, c, kh, kw}, rng);
    const Tensor b = oracle::random_tensor({o}, rng);
    const Padding pad{kh / 2, kw / 2};
    const Tensor y = conv2d_forward(x, ConvLayer(k, b, stride, pad));
    const Tensor ref = oracle::conv_naive(x, k, b, stride, pad.h, pad.w);
    ASSERT_EQ(y.shape(), ref.shape());
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-12);
  }
}

TEST(Conv, OutputSizeFormula) {
  ConvLayer layer(3, 4, 3, 5, 2, {1, 0});
  EXPECT_EQ(layer.output_size(9, 11), (std::pair<int, int>{5, 4}));
  EXPECT_THROW(layer.output_size(1, 4), ShapeError);
}

TEST(Conv, ChannelMismatchNamesBothShapes) {
  ConvLayer layer(3, 4, 3, 3);
  try {
    conv2d_forward(Tensor({1, 2, 5, 5}), layer);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("(1x2x5x5)"), std::string::npos) << msg;
    EXPECT_NE(msg.find("(4x3x3x3)"), std::string::npos) << msg;
  }
}

TEST(ConvBackward, ZeroUpstreamGivesZeroGradients) {
  std::mt19937_64 rng(4);
  ConvLayer layer(oracle::random_tensor({3, 2, 3, 3}, rng), oracle::random_tensor({3}, rng),
                  1, {1, 1});
  const Tensor x = oracle::random_tensor({1, 2, 5, 5}, rng);
  const ConvBackward g = conv2d_backward(x, layer, Tensor({1, 3, 5, 5}));
  for (double v : g.input.data()) EXPECT_EQ(v, 0.0);
  for (double v : g.params.kernel.data()) EXPECT_EQ(v, 0.0);
  for (double v : g.params.bias.data()) EXPECT_EQ(v, 0.0);
}

TEST(ConvBackward, SinglePixelKernelGradient) {
  const Tensor x({1, 1, 2, 2}, {1, 2, 3, 4});
  const Tensor go({1, 1, 2, 2}, {0.5, -1, 2, 0.25});
  ConvLayer layer(Tensor({1, 1, 1, 1}, 3.0), Tensor({1}), 1, {0, 0});
  const ConvBackward g = conv2d_backward(x, layer, go);
  EXPECT_DOUBLE_EQ(g.params.kernel[0], 0.5 * 1 - 2 + 6 + 1);
  EXPECT_DOUBLE_EQ(g.params.bias[0], 0.5 - 1 + 2 + 0.25);
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(g.input[i], 3.0 * go[i]);
}

TEST(ConvBackward, MatchesFiniteDifferences) {
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(100 + seed);
    std::uniform_int_distribution<int> d(1, 3), st(1, 2);
    const int c = d(rng), o = d(rng);
    const int kh = seed % 2 ? 1 : 3, kw = seed % 3 ? 5 : 3;
    ConvLayer layer(oracle::random_tensor({o, c, kh, kw}, rng), oracle::random_tensor({o}, rng),
                    st(rng), {kh / 2, kw / 2});
    Tensor x = oracle::random_tensor({2, c, 5, 7}, rng);
    const Tensor probe = oracle::random_tensor(conv2d_forward(x, layer).shape(), rng);
    auto f = [&] { return dot(conv2d_forward(x, layer), probe); };
    const ConvBackward g = conv2d_backward(x, layer, probe);
    EXPECT_LT(oracle::max_rel_error(g.input, oracle::numeric_grad(x, f)), 1e-4);
    EXPECT_LT(oracle::max_rel_error(g.params.kernel, oracle::numeric_grad(layer.kernel(), f)),
              1e-4);
    EXPECT_LT(oracle::max_rel_error(g.params.bias, oracle::numeric_grad(layer.bias(), f)), 1e-4);
  }
}

TEST(ConvBackward, ShapeMismatchThrows) {
  ConvLayer layer(1, 1, 3, 3);
  EXPECT_THROW(conv2d_backward(Tensor({1, 1, 4, 4}), layer, Tensor({1, 1, 3, 4})), ShapeError);
}

TEST(MaxPool, PicksFirstMaximumAndPadsOdd) {
  const Tensor x({1, 1, 3, 3}, {1, 5, 2,
                                5, 0, 7,
                                -1, -2, -3});
  const PoolResult r = maxpool2x2_forward(x);
  EXPECT_EQ(r.output, Tensor({1, 1, 2, 2}, {5, 7, -1, -3}));
  EXPECT_EQ(r.mask.argmax, (std::vector<std::size_t>{1, 5, 6, 8}));
  const Tensor gi = maxpool2x2_backward(r.mask, Tensor({1, 1, 2, 2}, {1, 2, 3, 4}));
  EXPECT_EQ(gi, Tensor({1, 1, 3, 3}, {0, 1, 0, 0, 0, 2, 3, 0, 4}));
}

TEST(MaxPool, BackwardMatchesFiniteDifferences) {
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(200 + seed);
    Tensor x = oracle::random_tensor({1, 2, 5, 6}, rng);
    const PoolResult r = maxpool2x2_forward(x);
    const Tensor probe = oracle::random_tensor(r.output.shape(), rng);
    auto f = [&] { return dot(maxpool2x2_forward(x).output, probe); };
    EXPECT_LT(oracle::max_rel_error(maxpool2x2_backward(r.mask, probe),
                                    oracle::numeric_grad(x, f)),
              1e-4);
  }
}

TEST(Relu, ForwardBackward) {
  const Tensor x({4}, {-1, 0, 2, -3});
  EXPECT_EQ(relu_forward(x), Tensor({4}, {0, 0, 2, 0}));
  EXPECT_EQ(relu_backward(x, Tensor({4}, 1.0)), Tensor({4}, {0, 0, 1, 0}));
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(300 + seed);
    Tensor y = oracle::random_tensor({1, 1, 4, 4}, rng);
    const Tensor probe = oracle::random_tensor(y.shape(), rng);
    auto f = [&] { return dot(relu_forward(y), probe); };
    EXPECT_LT(oracle::max_rel_error(relu_backward(y, probe), oracle::numeric_grad(y, f)), 1e-4);
  }
}

TEST(Softmax, StableAndNormalized) {
  const Tensor p = softmax2_forward(Tensor({3, 2}, {0, 0, 1000, 0, -5, 5}));
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[2], 1.0);
  EXPECT_DOUBLE_EQ(p[3], 0.0);
  EXPECT_NEAR(p[4] + p[5], 1.0, 1e-15);
  EXPECT_NEAR(p[5], 1.0 / (1.0 + std::exp(-10.0)), 1e-15);
}

TEST(GlorotInit, BoundedAndSeeded) {
  ConvLayer a(8, 16, 3, 3), b(8, 16, 3, 3);
  std::mt19937_64 r1(7), r2(7);
  glorot_uniform_init(a, r1);
  glorot_uniform_init(b, r2);
  EXPECT_EQ(a.kernel(), b.kernel());
  const double limit = std::sqrt(6.0 / (8 * 9 + 16 * 9));
  for (double v : a.kernel().data()) EXPECT_LE(std::abs(v), limit);
  for (double v : a.bias().data()) EXPECT_EQ(v, 0.0);
}
