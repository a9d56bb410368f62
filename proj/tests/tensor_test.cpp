// SPDX-FileCopyrightText: Copyright (c) 2026 The NestDrug Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nestdrug/tensor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "nestdrug/errors.hpp"
#include "nestdrug/kernels.hpp"
#include "nestdrug/optim.hpp"
#include "nestdrug/oracles.hpp"
#include "nestdrug/rng.hpp"

namespace nestdrug::tensor {
namespace {

Tensor random_param(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(r * c);
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::param(r, c, std::move(v));
}

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

void expect_grad_ok(const std::function<Tensor(const std::vector<Tensor>&)>& f, const std::vector<Tensor>& in,
                    const std::string& what) {
  const auto r = oracle::grad_check(f, in);
  EXPECT_TRUE(r.ok) << what << ": " << r.detail;
}

TEST(Primitives, Examples) {
  const auto a = Tensor::from(2, 3, {1, 2, 3, 4, 5, 6});
  const auto b = Tensor::from(3, 4, std::vector<double>(12, 1.0));
  const auto c = matmul(a, b);
  EXPECT_EQ(c.rows(), 2u);
  EXPECT_EQ(c.cols(), 4u);
  EXPECT_EQ(c.at(1, 2), 15.0);
  EXPECT_EQ(values(relu(Tensor::from(1, 3, {-1, 0, 2}))), (std::vector<double>{0, 0, 2}));
  const auto row = Tensor::from(1, 4, {3, -1, 7, 2});
  EXPECT_EQ(values(max(row, 0)), values(row));
  EXPECT_EQ(max(row).item(), 7.0);
  EXPECT_THROW(matmul(a, a), Error);
  try {
    add(Tensor::zeros(2, 3), Tensor::zeros(3, 2));
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
    EXPECT_NE(std::string(e.what()).find("(2x3)"), std::string::npos);
  }
}

TEST(Primitives, BroadcastingAndReductions) {
  const auto m = Tensor::from(2, 2, {1, 2, 3, 4});
  EXPECT_EQ(values(add(m, Tensor::from(1, 2, {10, 20}))), (std::vector<double>{11, 22, 13, 24}));
  EXPECT_EQ(values(mul(m, Tensor::from(2, 1, {2, 3}))), (std::vector<double>{2, 4, 9, 12}));
  EXPECT_EQ(values(sum(m, 0)), (std::vector<double>{4, 6}));
  EXPECT_EQ(values(sum(m, 1)), (std::vector<double>{3, 7}));
  EXPECT_EQ(mean(m).item(), 2.5);
  EXPECT_EQ(values(concat({m, m}, 1)), (std::vector<double>{1, 2, 1, 2, 3, 4, 3, 4}));
  EXPECT_EQ(values(slice(m, 1, 1, 1)), (std::vector<double>{2, 4}));
  const std::vector<std::size_t> idx = {1, 1, 0};
  EXPECT_EQ(values(gather_rows(m, idx)), (std::vector<double>{3, 4, 3, 4, 1, 2}));
  const std::vector<std::size_t> seg = {0, 0};
  EXPECT_EQ(values(segment_max(m, seg, 1)), (std::vector<double>{3, 4}));
  EXPECT_EQ(values(segment_mean(m, seg, 1)), (std::vector<double>{2, 3}));
}

TEST(Primitives, ZeroRowTensors) {
  const auto empty = Tensor::zeros(0, 3);
  const auto w = Tensor::from(3, 2, std::vector<double>(6, 1.0));
  const auto out = matmul(empty, w);
  EXPECT_EQ(out.rows(), 0u);
  EXPECT_EQ(out.cols(), 2u);
  EXPECT_EQ(values(sum(out, 0)), (std::vector<double>{0, 0}));
}

TEST(Backward, ClosedFormExamples) {
  {
    Tape tape;
    auto x = Tensor::param(1, 3, {1, 2, 3});
    const auto w = Tensor::from(1, 3, {0.5, -2, 4});
    tape.backward(sum(mul(w, x)));
    EXPECT_EQ(values(Tensor::from(1, 3, {x.grad()[0], x.grad()[1], x.grad()[2]})), values(w));
  }
  {
    Tape tape;
    auto x = Tensor::param(1, 2, {1, 2});
    tape.backward(sum(square(x)));
    EXPECT_EQ(x.grad()[0], 2.0);
    EXPECT_EQ(x.grad()[1], 4.0);
  }
}

TEST(Backward, OffPathLeavesGetZeroGrad) {
  Tape tape;
  auto x = Tensor::param(1, 2, {1, 2});
  auto unused = Tensor::param(1, 2, {5, 6});
  tape.backward(sum(x));
  EXPECT_EQ(unused.grad()[0], 0.0);
  EXPECT_EQ(unused.grad()[1], 0.0);
}

TEST(Backward, Errors) {
  Tape tape;
  auto x = Tensor::param(1, 2, {1, 2});
  try {
    tape.backward(mul(x, x));
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotScalar);
  }
  const auto loss = sum(x);
  tape.backward(loss);
  try {
    tape.backward(loss);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TapeConsumed);
  }
}

TEST(Backward, CheckedModeRejectsNaN) {
  const auto bad = Tensor::from(1, 2, {1, std::numeric_limits<double>::quiet_NaN()});
  try {
    relu(bad);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Data);
  }
  set_checked(false);
  EXPECT_NO_THROW(relu(bad));
  set_checked(true);
}

TEST(Backward, MaxTieRoutesToFirstIndex) {
  Tape tape;
  auto x = Tensor::param(1, 3, {2, 2, 1});
  tape.backward(max(x));
  EXPECT_EQ(x.grad()[0], 1.0);
  EXPECT_EQ(x.grad()[1], 0.0);
}

TEST(GradCheck, EveryPrimitiveOverRandomShapes) {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t r = 1 + rng.below(4), k = 1 + rng.below(4), c = 1 + rng.below(4);
    const auto a = random_param(rng, r, k);
    const auto b = random_param(rng, k, c);
    const auto same = random_param(rng, r, k);
    const auto row = random_param(rng, 1, k);
    const auto col = random_param(rng, r, 1);
    const auto positive = random_param(rng, r, k, 0.5, 2.0);
    const std::string tag = " trial " + std::to_string(trial);
    expect_grad_ok([](auto& x) { return matmul(x[0], x[1]); }, {a, b}, "matmul" + tag);
    expect_grad_ok([](auto& x) { return matmul_nt(x[0], x[1]); }, {a, same}, "matmul_nt" + tag);
    expect_grad_ok([](auto& x) { return add(x[0], x[1]); }, {a, row}, "add" + tag);
    expect_grad_ok([](auto& x) { return sub(x[0], x[1]); }, {a, col}, "sub" + tag);
    expect_grad_ok([](auto& x) { return mul(x[0], x[1]); }, {a, same}, "mul" + tag);
    expect_grad_ok([](auto& x) { return div(x[0], x[1]); }, {a, positive}, "div" + tag);
    expect_grad_ok([](auto& x) { return scale(add_scalar(x[0], 0.3), -1.7); }, {a}, "scale" + tag);
    expect_grad_ok([](auto& x) { return concat({x[0], x[1]}, 0); }, {a, same}, "concat0" + tag);
    expect_grad_ok([](auto& x) { return concat({x[0], x[1]}, 1); }, {a, col}, "concat1" + tag);
    expect_grad_ok([k](auto& x) { return slice(x[0], 1, k / 2, k - k / 2); }, {a}, "slice" + tag);
    for (int axis : {-1, 0, 1}) {
      expect_grad_ok([axis](auto& x) { return sum(x[0], axis); }, {a}, "sum" + tag);
      expect_grad_ok([axis](auto& x) { return mean(x[0], axis); }, {a}, "mean" + tag);
      expect_grad_ok([axis](auto& x) { return max(x[0], axis); }, {a}, "max" + tag);
    }
    expect_grad_ok([](auto& x) { return sigmoid(x[0]); }, {a}, "sigmoid" + tag);
    expect_grad_ok([](auto& x) { return tanh(x[0]); }, {a}, "tanh" + tag);
    expect_grad_ok([](auto& x) { return relu(x[0]); }, {a}, "relu" + tag);
    expect_grad_ok([](auto& x) { return exp(x[0]); }, {a}, "exp" + tag);
    expect_grad_ok([](auto& x) { return log(x[0]); }, {positive}, "log" + tag);
    expect_grad_ok([](auto& x) { return sqrt(x[0]); }, {positive}, "sqrt" + tag);
    expect_grad_ok([](auto& x) { return softmax(x[0]); }, {a}, "softmax" + tag);
    std::vector<std::size_t> idx(r + 2);
    for (auto& i : idx) i = rng.below(r);
    expect_grad_ok([idx](auto& x) { return gather_rows(x[0], idx); }, {a}, "gather" + tag);
    std::vector<std::size_t> seg(r);
    const std::size_t nseg = 1 + rng.below(r);
    for (std::size_t i = 0; i < r; ++i) seg[i] = i < nseg ? i : rng.below(nseg);
    expect_grad_ok([seg, nseg](auto& x) { return scatter_add_rows(x[0], seg, nseg + 1); }, {a}, "scatter" + tag);
    expect_grad_ok([seg, nseg](auto& x) { return segment_mean(x[0], seg, nseg); }, {a}, "segment_mean" + tag);
    expect_grad_ok([seg, nseg](auto& x) { return segment_max(x[0], seg, nseg); }, {a}, "segment_max" + tag);
    std::vector<double> y(r * k), w(r * k);
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] = static_cast<double>(rng.below(2));
      w[i] = rng.uniform(0.5, 2.0);
    }
    expect_grad_ok([y, w](auto& x) { return bce_with_logits(x[0], y, w); }, {a}, "bce" + tag);
    expect_grad_ok([y](auto& x) { return mse(x[0], y); }, {a}, "mse" + tag);
  }
}

TEST(GradCheck, ThreeLayerMlp) {
  Rng rng(5);
  const auto input = Tensor::from(4, 5, std::vector<double>(20, 0.3));
  const auto w1 = random_param(rng, 5, 8), b1 = random_param(rng, 1, 8);
  const auto w2 = random_param(rng, 8, 6), b2 = random_param(rng, 1, 6);
  const auto w3 = random_param(rng, 6, 1), b3 = random_param(rng, 1, 1);
  expect_grad_ok(
      [&](auto& x) {
        auto h = tanh(add(matmul(input, x[0]), x[1]));
        h = sigmoid(add(matmul(h, x[2]), x[3]));
        return add(matmul(h, x[4]), x[5]);
      },
      {w1, b1, w2, b2, w3, b3}, "mlp");
}

TEST(Losses, ClosedForms) {
  const std::vector<double> y = {1, 0, 1, 0}, w = {1, 1, 1, 1};
  EXPECT_NEAR(bce_with_logits(Tensor::zeros(1, 4), y, w).item(), std::log(2.0), 1e-15);
  EXPECT_EQ(mse(Tensor::from(1, 4, {1, 0, 1, 0}), y).item(), 0.0);
  try {
    mse(Tensor::zeros(0, 1), {});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyBatch);
  }
  EXPECT_THROW(mse(Tensor::zeros(1, 3), y), Error);
}

TEST(AdamW, ZeroGradientCases) {
  auto p = Tensor::param(1, 3, {1, -2, 3});
  AdamW frozen({{"all", {p}, 0.1, 0.0}});
  frozen.step();
  EXPECT_EQ(values(p), (std::vector<double>{1, -2, 3}));
  AdamW decaying({{"all", {p}, 0.1, 0.01}});
  decaying.step();
  EXPECT_EQ(p.data()[0], 1.0 * (1.0 - 0.001));
  EXPECT_EQ(p.data()[1], -2.0 * (1.0 - 0.001));
}

TEST(AdamW, HandEvaluatedFirstStep) {
  auto p = Tensor::param(1, 1, {1.0});
  p.mutable_grad()[0] = 1.0;
  AdamW opt({{"p", {p}, 0.1, 0.01}});
  opt.step();
  // decay: 1 - 0.1*0.01 = 0.999; m = 0.1, v = 0.001; mhat = 1, vhat = 1; step = 0.1/(1+1e-8)
  const double expected = 0.999 - 0.1 / (1.0 + 1e-8);
  EXPECT_DOUBLE_EQ(p.data()[0], expected);
  EXPECT_NEAR(p.data()[0], 0.899, 1e-7);
}

TEST(AdamW, MissingGradAndGroupIsolation) {
  auto no_grad = Tensor::from(1, 1, {1.0});
  AdamW bad({{"x", {no_grad}, 0.1, 0.0}});
  try {
    bad.step();
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingGrad);
  }
  auto a = Tensor::param(1, 2, {1, 2}), b = Tensor::param(1, 2, {3, 4});
  a.mutable_grad()[0] = b.mutable_grad()[0] = 0.5;
  AdamW opt({{"a", {a}, 0.0, 0.01}, {"b", {b}, 0.1, 0.01}});
  opt.step();
  EXPECT_EQ(values(a), (std::vector<double>{1, 2}));
  EXPECT_NE(b.data()[0], 3.0);
}

TEST(CosineLr, Examples) {
  EXPECT_EQ(cosine_lr(0, 100, 1e-3, 1e-5), 1e-3);
  EXPECT_EQ(cosine_lr(100, 100, 1e-3, 1e-5), 1e-5);
  EXPECT_NEAR(cosine_lr(50, 100, 1e-3, 1e-5), (1e-3 + 1e-5) / 2, 1e-18);
  EXPECT_THROW(cosine_lr(101, 100, 1, 0), Error);
  EXPECT_THROW(cosine_lr(0, 0, 1, 0), Error);
}

TEST(Checkpoint, RoundTrip) {
  Checkpoint ck;
  ck.manifest_json = R"({"hidden":32})";
  ck.arrays.emplace("w", Tensor::from(2, 3, {1, 2, 3, 4, 5, -6.25}));
  ck.arrays.emplace("empty", Tensor::zeros(0, 4));
  std::stringstream ss;
  write_checkpoint(ss, ck);
  EXPECT_EQ(ss.str().substr(0, 5), "NDCK1");
  const auto back = read_checkpoint(ss);
  EXPECT_EQ(back.manifest_json, ck.manifest_json);
  ASSERT_EQ(back.arrays.size(), 2u);
  EXPECT_EQ(values(back.arrays.at("w")), values(ck.arrays.at("w")));
  EXPECT_EQ(back.arrays.at("empty").cols(), 4u);
  std::stringstream junk("NOTACKPT");
  EXPECT_THROW(read_checkpoint(junk), Error);
}

TEST(Kernels, ParallelMatchesSerialBitwise) {
  Rng rng(9);
  const std::size_t m = 70, k = 90, n = 60;
  std::vector<double> a(m * k), b(k * n), bt(n * k), at(k * m);
  for (auto* v : {&a, &b, &bt, &at}) {
    for (double& x : *v) x = rng.normal();
  }
  std::vector<double> c1(m * n, 0), c2(m * n, 0);
  kernels::gemm_nn(a.data(), b.data(), c1.data(), m, k, n);
  kernels::gemm_nn_serial(a.data(), b.data(), c2.data(), m, k, n);
  EXPECT_EQ(c1, c2);
  std::fill(c1.begin(), c1.end(), 0);
  std::fill(c2.begin(), c2.end(), 0);
  kernels::gemm_nt(a.data(), bt.data(), c1.data(), m, k, n);
  kernels::gemm_nt_serial(a.data(), bt.data(), c2.data(), m, k, n);
  EXPECT_EQ(c1, c2);
  std::fill(c1.begin(), c1.end(), 0);
  std::fill(c2.begin(), c2.end(), 0);
  kernels::gemm_tn(at.data(), b.data(), c1.data(), m, k, n);
  kernels::gemm_tn_serial(at.data(), b.data(), c2.data(), m, k, n);
  EXPECT_EQ(c1, c2);
  // Reference triple loop.
  for (std::size_t i = 0; i < m; i += 17) {
    for (std::size_t j = 0; j < n; j += 13) {
      double s = 0;
      for (std::size_t p = 0; p < k; ++p) s += at[p * m + i] * b[p * n + j];
      EXPECT_NEAR(c1[i * n + j], s, 1e-10);
    }
  }
}

TEST(Determinism, IdenticalForwardAndBackward) {
  auto run = [] {
    Rng rng(77);
    auto w = random_param(rng, 6, 4);
    const auto x = Tensor::from(3, 6, std::vector<double>(18, 0.25));
    Tape tape;
    const auto loss = mean(tanh(matmul(x, w)));
    tape.backward(loss);
    std::vector<double> out = {loss.item()};
    out.insert(out.end(), w.grad().begin(), w.grad().end());
    return out;
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace nestdrug::tensor
