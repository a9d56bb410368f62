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

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace nestdrug {
class Rng;
}

namespace nestdrug::tensor {

struct Node;

/// Dense row-major matrix of doubles with optional gradient tracking. Vectors are 1×n,
/// scalars 1×1. Zero-row tensors are allowed. Copies share the underlying node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor full(std::size_t rows, std::size_t cols, double value);
  static Tensor from(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor scalar(double value);
  /// Leaf that requires grad; its gradient buffer is allocated (zeros) immediately.
  static Tensor param(std::size_t rows, std::size_t cols, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t size() const { return rows() * cols(); }
  std::string shape_string() const;
  bool requires_grad() const;

  std::span<const double> data() const;
  /// Mutable access for leaves (parameters, inputs). Not for recorded intermediates.
  std::span<double> mutable_data();
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  bool has_grad() const;
  void zero_grad();

  double item() const;
  double at(std::size_t r, std::size_t c) const;

  /// Detached copy holding the same values.
  Tensor detach() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<Node> node_;
};

struct Node {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

/// Records operations on the current thread while alive. Nested tapes shadow outer ones.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();
  void record(const std::shared_ptr<Node>& node);
  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  /// Reverse pass from a 1×1 loss; gradients accumulate into leaf grad buffers.
  void backward(const Tensor& loss);

 private:
  std::vector<std::shared_ptr<Node>> nodes_;
  Tape* previous_ = nullptr;
  bool consumed_ = false;
};

/// Checked mode (default on): primitives reject NaN inputs with a Data error.
void set_checked(bool on);
bool checked();

// ---- primitives ----
Tensor matmul(const Tensor& a, const Tensor& b);
/// a · bᵀ
Tensor matmul_nt(const Tensor& a, const Tensor& b);

// Broadcasting elementwise ops: each operand dim must match or be 1.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor neg(const Tensor& a);

Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& a, int axis, std::size_t start, std::size_t length);

/// axis -1 = all elements (1×1), 0 = over rows (1×cols), 1 = over columns (rows×1).
Tensor sum(const Tensor& a, int axis = -1);
Tensor mean(const Tensor& a, int axis = -1);
/// Gradient goes to the first maximal element.
Tensor max(const Tensor& a, int axis = -1);

Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor square(const Tensor& a);
/// Row-wise softmax.
Tensor softmax(const Tensor& a);

/// out[i] = a[idx[i]]
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> idx);
/// out[idx[i]] += a[i] over out_rows rows.
Tensor scatter_add_rows(const Tensor& a, std::span<const std::size_t> idx, std::size_t out_rows);
/// Segment pooling of rows; every segment must be non-empty.
Tensor segment_mean(const Tensor& a, std::span<const std::size_t> segment, std::size_t n_segments);
Tensor segment_max(const Tensor& a, std::span<const std::size_t> segment, std::size_t n_segments);

/// Inverted dropout with the given drop rate; identity when rate is 0.
Tensor dropout(const Tensor& a, double rate, Rng& rng);

/// Weighted mean binary cross-entropy on logits: Σ wᵢ·ℓᵢ / n.
Tensor bce_with_logits(const Tensor& logits, std::span<const double> targets, std::span<const double> weights);
/// Mean squared error.
Tensor mse(const Tensor& pred, std::span<const double> targets);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }

}  // namespace nestdrug::tensor
