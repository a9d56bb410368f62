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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include "nestdrug/errors.hpp"
#include "nestdrug/kernels.hpp"
#include "nestdrug/rng.hpp"

namespace nestdrug::tensor {

namespace {

thread_local Tape* g_active_tape = nullptr;
std::atomic<bool> g_checked{true};

std::string shape_of(const Node& n) { return "(" + std::to_string(n.rows) + "x" + std::to_string(n.cols) + ")"; }

void require_defined(const Tensor& t, const char* op) {
  require(t.defined(), ErrorKind::Shape, std::string(op) + ": undefined tensor");
}

void check_nan(const Tensor& t, const char* op) {
  if (!g_checked.load(std::memory_order_relaxed)) return;
  for (double v : t.node()->value) {
    if (std::isnan(v)) fail(ErrorKind::Data, std::string(op) + ": NaN input " + shape_of(*t.node()));
  }
}

std::shared_ptr<Node> make_node(std::size_t rows, std::size_t cols, std::initializer_list<const Tensor*> inputs) {
  auto node = std::make_shared<Node>();
  node->rows = rows;
  node->cols = cols;
  node->value.assign(rows * cols, 0.0);
  Tape* tape = Tape::active();
  bool needs = false;
  for (const Tensor* t : inputs) needs = needs || t->requires_grad();
  if (needs && tape != nullptr && !tape->consumed()) {
    node->requires_grad = true;
    node->leaf = false;
    for (const Tensor* t : inputs) node->parents.push_back(t->shared());
  }
  return node;
}

Tensor finish(std::shared_ptr<Node> node, std::function<void(Node&)> backward) {
  if (node->requires_grad) {
    node->backward = std::move(backward);
    Tape::active()->record(node);
  }
  return Tensor(std::move(node));
}

// Parent i needs a gradient contribution.
Node* wants(Node& self, std::size_t i) {
  Node* p = self.parents[i].get();
  if (!p->requires_grad) return nullptr;
  p->ensure_grad();
  return p;
}

std::size_t broadcast_dim(std::size_t a, std::size_t b, const char* op, const Node& na, const Node& nb) {
  if (a == b) return a;
  if (a == 1) return b;
  if (b == 1) return a;
  fail(ErrorKind::Shape, std::string(op) + ": shapes " + shape_of(na) + " and " + shape_of(nb) + " do not broadcast");
}

enum class BinOp { Add, Sub, Mul, Div };

Tensor binary(const Tensor& a, const Tensor& b, BinOp op, const char* name) {
  require_defined(a, name);
  require_defined(b, name);
  check_nan(a, name);
  check_nan(b, name);
  const Node& na = *a.node();
  const Node& nb = *b.node();
  const std::size_t rows = broadcast_dim(na.rows, nb.rows, name, na, nb);
  const std::size_t cols = broadcast_dim(na.cols, nb.cols, name, na, nb);
  auto out = make_node(rows, cols, {&a, &b});
  const bool ar = na.rows == 1 && rows != 1, ac = na.cols == 1 && cols != 1;
  const bool br = nb.rows == 1 && rows != 1, bc = nb.cols == 1 && cols != 1;
  auto ia = [=, &na](std::size_t i, std::size_t j) { return (ar ? 0 : i) * na.cols + (ac ? 0 : j); };
  auto ib = [=, &nb](std::size_t i, std::size_t j) { return (br ? 0 : i) * nb.cols + (bc ? 0 : j); };
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double x = na.value[ia(i, j)], y = nb.value[ib(i, j)];
      double r = 0;
      switch (op) {
        case BinOp::Add: r = x + y; break;
        case BinOp::Sub: r = x - y; break;
        case BinOp::Mul: r = x * y; break;
        case BinOp::Div: r = x / y; break;
      }
      out->value[i * cols + j] = r;
    }
  }
  return finish(out, [=](Node& self) {
    Node* pa = wants(self, 0);
    Node* pb = wants(self, 1);
    const Node& A = *self.parents[0];
    const Node& B = *self.parents[1];
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        const double g = self.grad[i * cols + j];
        if (g == 0.0) continue;
        const std::size_t xa = (ar ? 0 : i) * A.cols + (ac ? 0 : j);
        const std::size_t xb = (br ? 0 : i) * B.cols + (bc ? 0 : j);
        switch (op) {
          case BinOp::Add:
            if (pa) pa->grad[xa] += g;
            if (pb) pb->grad[xb] += g;
            break;
          case BinOp::Sub:
            if (pa) pa->grad[xa] += g;
            if (pb) pb->grad[xb] -= g;
            break;
          case BinOp::Mul:
            if (pa) pa->grad[xa] += g * B.value[xb];
            if (pb) pb->grad[xb] += g * A.value[xa];
            break;
          case BinOp::Div: {
            const double y = B.value[xb];
            if (pa) pa->grad[xa] += g / y;
            if (pb) pb->grad[xb] -= g * A.value[xa] / (y * y);
            break;
          }
        }
      }
    }
  });
}

template <typename F, typename D>
Tensor unary(const Tensor& a, const char* name, F forward, D derivative) {
  require_defined(a, name);
  check_nan(a, name);
  const Node& na = *a.node();
  auto out = make_node(na.rows, na.cols, {&a});
  for (std::size_t i = 0; i < na.value.size(); ++i) out->value[i] = forward(na.value[i]);
  return finish(out, [derivative](Node& self) {
    Node* p = wants(self, 0);
    if (!p) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (self.grad[i] != 0.0) p->grad[i] += self.grad[i] * derivative(p->value[i], self.value[i]);
    }
  });
}

void check_indices(std::span<const std::size_t> idx, std::size_t limit, const char* op) {
  for (std::size_t i : idx) {
    require(i < limit, ErrorKind::Shape,
            std::string(op) + ": index " + std::to_string(i) + " out of range " + std::to_string(limit));
  }
}

}  // namespace

// ---- Tensor ----

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) { return full(rows, cols, 0.0); }

Tensor Tensor::full(std::size_t rows, std::size_t cols, double value) {
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value.assign(rows * cols, value);
  return Tensor(std::move(n));
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> values) {
  require(values.size() == rows * cols, ErrorKind::Shape,
          "tensor data length " + std::to_string(values.size()) + " does not match shape (" + std::to_string(rows) +
              "x" + std::to_string(cols) + ")");
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value = std::move(values);
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double value) { return from(1, 1, {value}); }

Tensor Tensor::param(std::size_t rows, std::size_t cols, std::vector<double> values) {
  Tensor t = from(rows, cols, std::move(values));
  t.node_->requires_grad = true;
  t.node_->ensure_grad();
  return t;
}

std::size_t Tensor::rows() const { return node_ ? node_->rows : 0; }
std::size_t Tensor::cols() const { return node_ ? node_->cols : 0; }
std::string Tensor::shape_string() const { return node_ ? shape_of(*node_) : "(undefined)"; }
bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
std::span<const double> Tensor::data() const { return node_->value; }

std::span<double> Tensor::mutable_data() {
  require(node_->leaf, ErrorKind::Internal, "mutable_data on a recorded intermediate");
  return node_->value;
}

std::span<const double> Tensor::grad() const { return node_->grad; }
std::span<double> Tensor::mutable_grad() { return node_->grad; }
bool Tensor::has_grad() const { return node_ && node_->grad.size() == node_->value.size() && node_->requires_grad; }

void Tensor::zero_grad() {
  if (node_ && node_->requires_grad) node_->grad.assign(node_->value.size(), 0.0);
}

double Tensor::item() const {
  require(node_ && node_->rows == 1 && node_->cols == 1, ErrorKind::NotScalar,
          "item() on non-scalar " + shape_string());
  return node_->value[0];
}

double Tensor::at(std::size_t r, std::size_t c) const { return node_->value[r * node_->cols + c]; }

Tensor Tensor::detach() const { return from(rows(), cols(), node_->value); }

// ---- Tape ----

Tape::Tape() : previous_(g_active_tape) { g_active_tape = this; }
Tape::~Tape() { g_active_tape = previous_; }
Tape* Tape::active() { return g_active_tape; }
void Tape::record(const std::shared_ptr<Node>& node) { nodes_.push_back(node); }

void Tape::backward(const Tensor& loss) {
  require(!consumed_, ErrorKind::TapeConsumed, "backward called twice on the same tape");
  require(loss.defined() && loss.rows() == 1 && loss.cols() == 1, ErrorKind::NotScalar,
          "backward requires a 1x1 loss, got " + loss.shape_string());
  consumed_ = true;
  Node* root = loss.node();
  if (!root->requires_grad) return;
  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    if (n.grad.empty() || !n.backward) continue;
    n.backward(n);
  }
  // Release closures and intermediate buffers; leaves keep their gradients.
  for (auto& n : nodes_) {
    n->backward = nullptr;
    n->parents.clear();
  }
  nodes_.clear();
}

void set_checked(bool on) { g_checked.store(on); }
bool checked() { return g_checked.load(); }

// ---- primitives ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  require(a.cols() == b.rows(), ErrorKind::Shape,
          "matmul: shapes " + a.shape_string() + " and " + b.shape_string() + " are incompatible");
  check_nan(a, "matmul");
  check_nan(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  auto out = make_node(m, n, {&a, &b});
  kernels::gemm_nn(a.node()->value.data(), b.node()->value.data(), out->value.data(), m, k, n);
  return finish(out, [m, k, n](Node& self) {
    const Node& A = *self.parents[0];
    const Node& B = *self.parents[1];
    if (Node* pa = wants(self, 0)) kernels::gemm_nt(self.grad.data(), B.value.data(), pa->grad.data(), m, n, k);
    if (Node* pb = wants(self, 1)) kernels::gemm_tn(A.value.data(), self.grad.data(), pb->grad.data(), k, m, n);
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_defined(a, "matmul_nt");
  require_defined(b, "matmul_nt");
  require(a.cols() == b.cols(), ErrorKind::Shape,
          "matmul_nt: shapes " + a.shape_string() + " and " + b.shape_string() + " are incompatible");
  check_nan(a, "matmul_nt");
  check_nan(b, "matmul_nt");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  auto out = make_node(m, n, {&a, &b});
  kernels::gemm_nt(a.node()->value.data(), b.node()->value.data(), out->value.data(), m, k, n);
  return finish(out, [m, k, n](Node& self) {
    const Node& A = *self.parents[0];
    const Node& B = *self.parents[1];
    // C = A Bᵀ: dA = dC B, dB = dCᵀ A
    if (Node* pa = wants(self, 0)) kernels::gemm_nn(self.grad.data(), B.value.data(), pa->grad.data(), m, n, k);
    if (Node* pb = wants(self, 1)) kernels::gemm_tn(self.grad.data(), A.value.data(), pb->grad.data(), n, m, k);
  });
}

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::Add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::Sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::Mul, "mul"); }
Tensor div(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::Div, "div"); }

Tensor scale(const Tensor& a, double s) {
  return unary(a, "scale", [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary(a, "add_scalar", [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  require(!parts.empty(), ErrorKind::Shape, "concat: no inputs");
  require(axis == 0 || axis == 1, ErrorKind::Shape, "concat: axis must be 0 or 1");
  for (const auto& p : parts) {
    require_defined(p, "concat");
    check_nan(p, "concat");
  }
  std::size_t rows = 0, cols = 0;
  if (axis == 1) {
    rows = parts[0].rows();
    for (const auto& p : parts) {
      require(p.rows() == rows, ErrorKind::Shape,
              "concat(axis=1): row mismatch " + parts[0].shape_string() + " vs " + p.shape_string());
      cols += p.cols();
    }
  } else {
    cols = parts[0].cols();
    for (const auto& p : parts) {
      require(p.cols() == cols, ErrorKind::Shape,
              "concat(axis=0): column mismatch " + parts[0].shape_string() + " vs " + p.shape_string());
      rows += p.rows();
    }
  }
  auto out = std::make_shared<Node>();
  out->rows = rows;
  out->cols = cols;
  out->value.resize(rows * cols);
  bool needs = false;
  for (const auto& p : parts) needs = needs || p.requires_grad();
  Tape* tape = Tape::active();
  if (needs && tape && !tape->consumed()) {
    out->requires_grad = true;
    out->leaf = false;
    for (const auto& p : parts) out->parents.push_back(p.shared());
  }
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const Node& n = *p.node();
    if (axis == 1) {
      for (std::size_t i = 0; i < rows; ++i) {
        std::copy_n(n.value.data() + i * n.cols, n.cols, out->value.data() + i * cols + offset);
      }
      offset += n.cols;
    } else {
      std::copy(n.value.begin(), n.value.end(), out->value.begin() + static_cast<std::ptrdiff_t>(offset * cols));
      offset += n.rows;
    }
  }
  return finish(out, [axis, rows, cols](Node& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node* p = wants(self, k);
      const Node& n = *self.parents[k];
      if (axis == 1) {
        if (p) {
          for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < n.cols; ++j) p->grad[i * n.cols + j] += self.grad[i * cols + off + j];
          }
        }
        off += n.cols;
      } else {
        if (p) {
          for (std::size_t i = 0; i < n.value.size(); ++i) p->grad[i] += self.grad[off * cols + i];
        }
        off += n.rows;
      }
    }
  });
}

Tensor slice(const Tensor& a, int axis, std::size_t start, std::size_t length) {
  require_defined(a, "slice");
  require(axis == 0 || axis == 1, ErrorKind::Shape, "slice: axis must be 0 or 1");
  const std::size_t extent = axis == 0 ? a.rows() : a.cols();
  require(start + length <= extent, ErrorKind::Shape,
          "slice: range [" + std::to_string(start) + ", " + std::to_string(start + length) + ") exceeds " +
              a.shape_string());
  check_nan(a, "slice");
  const std::size_t rows = axis == 0 ? length : a.rows();
  const std::size_t cols = axis == 1 ? length : a.cols();
  const std::size_t src_cols = a.cols();
  auto out = make_node(rows, cols, {&a});
  const auto& v = a.node()->value;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t si = axis == 0 ? i + start : i;
      const std::size_t sj = axis == 1 ? j + start : j;
      out->value[i * cols + j] = v[si * src_cols + sj];
    }
  }
  return finish(out, [=](Node& self) {
    Node* p = wants(self, 0);
    if (!p) return;
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        const std::size_t si = axis == 0 ? i + start : i;
        const std::size_t sj = axis == 1 ? j + start : j;
        p->grad[si * src_cols + sj] += self.grad[i * cols + j];
      }
    }
  });
}

namespace {

Tensor reduce_sum(const Tensor& a, int axis, double factor, const char* name) {
  require_defined(a, name);
  require(axis >= -1 && axis <= 1, ErrorKind::Shape, std::string(name) + ": axis must be -1, 0 or 1");
  check_nan(a, name);
  const std::size_t R = a.rows(), C = a.cols();
  const std::size_t rows = axis == 1 ? R : 1;
  const std::size_t cols = axis == 0 ? C : 1;
  auto out = make_node(rows, cols, {&a});
  const auto& v = a.node()->value;
  for (std::size_t i = 0; i < R; ++i) {
    for (std::size_t j = 0; j < C; ++j) {
      const std::size_t o = axis == -1 ? 0 : axis == 0 ? j : i;
      out->value[o] += v[i * C + j];
    }
  }
  for (double& x : out->value) x *= factor;
  return finish(out, [=](Node& self) {
    Node* p = wants(self, 0);
    if (!p) return;
    for (std::size_t i = 0; i < R; ++i) {
      for (std::size_t j = 0; j < C; ++j) {
        const std::size_t o = axis == -1 ? 0 : axis == 0 ? j : i;
        p->grad[i * C + j] += self.grad[o] * factor;
      }
    }
  });
}

}  // namespace

Tensor sum(const Tensor& a, int axis) { return reduce_sum(a, axis, 1.0, "sum"); }

Tensor mean(const Tensor& a, int axis) {
  const std::size_t count = axis == -1 ? a.size() : axis == 0 ? a.rows() : a.cols();
  require(count > 0, ErrorKind::Shape, "mean over an empty axis of " + a.shape_string());
  return reduce_sum(a, axis, 1.0 / static_cast<double>(count), "mean");
}

Tensor max(const Tensor& a, int axis) {
  require_defined(a, "max");
  require(axis >= -1 && axis <= 1, ErrorKind::Shape, "max: axis must be -1, 0 or 1");
  check_nan(a, "max");
  const std::size_t R = a.rows(), C = a.cols();
  const std::size_t rows = axis == 1 ? R : 1;
  const std::size_t cols = axis == 0 ? C : 1;
  const std::size_t count = axis == -1 ? R * C : axis == 0 ? R : C;
  require(count > 0, ErrorKind::Shape, "max over an empty axis of " + a.shape_string());
  auto out = make_node(rows, cols, {&a});
  std::vector<std::size_t> arg(rows * cols, SIZE_MAX);
  const auto& v = a.node()->value;
  for (std::size_t i = 0; i < R; ++i) {
    for (std::size_t j = 0; j < C; ++j) {
      const std::size_t o = axis == -1 ? 0 : axis == 0 ? j : i;
      const std::size_t src = i * C + j;
      if (arg[o] == SIZE_MAX || v[src] > out->value[o]) {
        arg[o] = src;
        out->value[o] = v[src];
      }
    }
  }
  return finish(out, [arg = std::move(arg)](Node& self) {
    Node* p = wants(self, 0);
    if (!p) return;
    for (std::size_t o = 0; o < arg.size(); ++o) p->grad[arg[o]] += self.grad[o];
  });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, "sigmoid",
      [](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(a, "tanh", [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
  return unary(a, "relu", [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& a) {
  return unary(a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(a, "log", [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
  return unary(a, "sqrt", [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Tensor square(const Tensor& a) {
  return unary(a, "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor softmax(const Tensor& a) {
  require_defined(a, "softmax");
  check_nan(a, "softmax");
  const std::size_t R = a.rows(), C = a.cols();
  auto out = make_node(R, C, {&a});
  const auto& v = a.node()->value;
  for (std::size_t i = 0; i < R; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < C; ++j) m = std::max(m, v[i * C + j]);
    double z = 0;
    for (std::size_t j = 0; j < C; ++j) z += (out->value[i * C + j] = std::exp(v[i * C + j] - m));
    for (std::size_t j = 0; j < C; ++j) out->value[i * C + j] /= z;
  }
  return finish(out, [R, C](Node& self) {
    Node* p = wants(self, 0);
    if (!p) return;
    for (std::size_t i = 0; i < R; ++i) {
      double dot = 0;
      for (std::size_t j = 0; j < C; ++j) dot += self.grad[i * C + j] * self.value[i * C + j];
      for (std::size_t j = 0; j < C; ++j) {
        p->grad[i * C + j] += self.value[i * C + j] * (self.grad[i * C + j] - dot);
      }
    }
  });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> idx) {
  require_defined(a, "gather_rows");
  check_indices(idx, a.rows(), "gather_rows");
  check_nan(a, "gather_rows");
  const std::size_t C = a.cols();
  auto out = make_node(idx.size(), C, {&a});
  const auto& v = a.node()->value;
  for (std::size_t i = 0; i < idx.size(); ++i) std::copy_n(v.data() + idx[i] * C, C, out->value.data() + i * C);
  std::vector<std::size_t> index(idx.begin(), idx.end());
  return finish(out, [index = std::move(index), C](Node& self) {
    Node* p = wants(self, 0);
    if (!p) return;
    for (std::size_t i = 0; i < index.size(); ++i) {
      double* dst = p->grad.data() + index[i] * C;
      const double* src = self.grad.data() + i * C;
      for (std::size_t j = 0; j < C; ++j) dst[j] += src[j];
    }
  });
}

Tensor scatter_add_rows(const Tensor& a, std::span<const std::size_t> idx, std::size_t out_rows) {
  require_defined(a, "scatter_add_rows");
  require(idx.size() == a.rows(), ErrorKind::Shape,
          "scatter_add_rows: " + std::to_string(idx.size()) + " indices for " + a.shape_string());
  check_indices(idx, out_rows, "scatter_add_rows");
  check_nan(a, "scatter_add_rows");
  const std::size_t C = a.cols();
  auto out = make_node(out_rows, C, {&a});
  const auto& v = a.node()->value;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    double* dst = out->value.data() + idx[i] * C;
    for (std::size_t j = 0; j < C; ++j) dst[j] += v[i * C + j];
  }
  std::vector<std::size_t> index(idx.begin(), idx.end());
  return finish(out, [index = std::move(index), C](Node& self) {
    Node* p = wants(self, 0);
    if (!p) return;
    for (std::size_t i = 0; i < index.size(); ++i) {
      const double* src = self.grad.data() + index[i] * C;
      double* dst = p->grad.data() + i * C;
      for (std::size_t j = 0; j < C; ++j) dst[j] += src[j];
    }
  });
}

Tensor segment_mean(const Tensor& a, std::span<const std::size_t> segment, std::size_t n_segments) {
  require(segment.size() == a.rows(), ErrorKind::Shape, "segment_mean: segment ids do not match rows");
  std::vector<double> counts(n_segments, 0.0);
  check_indices(segment, n_segments, "segment_mean");
  for (std::size_t s : segment) counts[s] += 1.0;
  for (double c : counts) require(c > 0, ErrorKind::EmptyMolecule, "segment_mean: empty segment");
  std::vector<double> inv(n_segments);
  for (std::size_t s = 0; s < n_segments; ++s) inv[s] = 1.0 / counts[s];
  return mul(scatter_add_rows(a, segment, n_segments), Tensor::from(n_segments, 1, std::move(inv)));
}

Tensor segment_max(const Tensor& a, std::span<const std::size_t> segment, std::size_t n_segments) {
  require_defined(a, "segment_max");
  require(segment.size() == a.rows(), ErrorKind::Shape, "segment_max: segment ids do not match rows");
  check_indices(segment, n_segments, "segment_max");
  check_nan(a, "segment_max");
  const std::size_t C = a.cols();
  auto out = make_node(n_segments, C, {&a});
  std::vector<std::size_t> arg(n_segments * C, SIZE_MAX);
  const auto& v = a.node()->value;
  for (std::size_t i = 0; i < segment.size(); ++i) {
    for (std::size_t j = 0; j < C; ++j) {
      const std::size_t o = segment[i] * C + j;
      if (arg[o] == SIZE_MAX || v[i * C + j] > out->value[o]) {
        arg[o] = i * C + j;
        out->value[o] = v[i * C + j];
      }
    }
  }
  for (std::size_t o = 0; o < arg.size(); ++o) {
    require(arg[o] != SIZE_MAX, ErrorKind::EmptyMolecule, "segment_max: empty segment");
  }
  return finish(out, [arg = std::move(arg)](Node& self) {
    Node* p = wants(self, 0);
    if (!p) return;
    for (std::size_t o = 0; o < arg.size(); ++o) p->grad[arg[o]] += self.grad[o];
  });
}

Tensor dropout(const Tensor& a, double rate, Rng& rng) {
  require(rate >= 0.0 && rate < 1.0, ErrorKind::Parameter, "dropout rate must be in [0, 1)");
  if (rate == 0.0) return a;
  std::vector<double> mask(a.size());
  const double keep = 1.0 / (1.0 - rate);
  for (double& m : mask) m = rng.uniform() < rate ? 0.0 : keep;
  return mul(a, Tensor::from(a.rows(), a.cols(), std::move(mask)));
}

Tensor bce_with_logits(const Tensor& logits, std::span<const double> targets, std::span<const double> weights) {
  require_defined(logits, "bce_with_logits");
  const std::size_t n = logits.size();
  require(n > 0, ErrorKind::EmptyBatch, "bce_with_logits on an empty batch");
  require(targets.size() == n && weights.size() == n, ErrorKind::Shape,
          "bce_with_logits: " + std::to_string(n) + " logits, " + std::to_string(targets.size()) + " targets, " +
              std::to_string(weights.size()) + " weights");
  check_nan(logits, "bce_with_logits");
  auto out = make_node(1, 1, {&logits});
  const auto& z = logits.node()->value;
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double l = std::max(z[i], 0.0) - z[i] * targets[i] + std::log1p(std::exp(-std::abs(z[i])));
    total += weights[i] * l;
  }
  out->value[0] = total / static_cast<double>(n);
  std::vector<double> y(targets.begin(), targets.end()), w(weights.begin(), weights.end());
  return finish(out, [y = std::move(y), w = std::move(w), n](Node& self) {
    Node* p = wants(self, 0);
    if (!p) return;
    const double g = self.grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double zi = p->value[i];
      const double s = zi >= 0 ? 1.0 / (1.0 + std::exp(-zi)) : std::exp(zi) / (1.0 + std::exp(zi));
      p->grad[i] += g * w[i] * (s - y[i]);
    }
  });
}

Tensor mse(const Tensor& pred, std::span<const double> targets) {
  require_defined(pred, "mse");
  const std::size_t n = pred.size();
  require(n > 0, ErrorKind::EmptyBatch, "mse on an empty batch");
  require(targets.size() == n, ErrorKind::Shape,
          "mse: " + std::to_string(n) + " predictions, " + std::to_string(targets.size()) + " targets");
  check_nan(pred, "mse");
  auto out = make_node(1, 1, {&pred});
  const auto& p = pred.node()->value;
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) total += (p[i] - targets[i]) * (p[i] - targets[i]);
  out->value[0] = total / static_cast<double>(n);
  std::vector<double> y(targets.begin(), targets.end());
  return finish(out, [y = std::move(y), n](Node& self) {
    Node* q = wants(self, 0);
    if (!q) return;
    const double g = 2.0 * self.grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) q->grad[i] += g * (q->value[i] - y[i]);
  });
}

}  // namespace nestdrug::tensor
