// core/include/corrkd/tensor.hpp

// Copyright 2026  corrkd authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef CORRKD_TENSOR_HPP_
#define CORRKD_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace corrkd {

#define CORRKD_CHECK(cond, msg)                             \
  do {                                                      \
    if (!(cond)) {                                          \
      std::ostringstream os_;                               \
      os_ << msg;                                           \
      throw std::invalid_argument(os_.str());               \
    }                                                       \
  } while (0)

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

class Tape;
namespace detail {
struct TensorAccess;
}

/// Dense row-major tensor of 64-bit floats. Copies are shallow; treat a
/// tensor as immutable once it has been fed into an op. A tensor becomes
/// part of a gradient tape only through Tape::watch or as the result of an
/// op whose inputs are tracked.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const { return data_ != nullptr; }
  const Shape& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t numel() const { return data_ ? data_->size() : 0; }

  std::span<const double> data() const { return {data_->data(), data_->size()}; }
  std::span<double> mutable_data() { return {data_->data(), data_->size()}; }
  const std::shared_ptr<std::vector<double>>& storage() const { return data_; }

  /// Value of a one-element tensor.
  double value() const;
  double at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool rg) { requires_grad_ = rg; }

  Tape* tape() const { return tape_; }
  int node() const { return node_; }
  bool tracked() const { return tape_ != nullptr && node_ >= 0; }

  /// Deep copy with fresh storage (never shares data).
  Tensor clone() const;

 private:
  friend class Tape;
  friend struct detail::TensorAccess;
  Shape shape_;
  std::shared_ptr<std::vector<double>> data_;
  bool requires_grad_ = false;
  Tape* tape_ = nullptr;
  int node_ = -1;
};

/// Result of a backward pass: node id -> gradient tensor, for every watched
/// leaf with requires_grad=true. Disconnected leaves map to zeros.
class GradientMap {
 public:
  bool contains(const Tensor& t) const { return t.node() >= 0 && grads_.count(t.node()) > 0; }
  bool contains(int node_id) const { return grads_.count(node_id) > 0; }
  const Tensor& at(const Tensor& t) const;
  const Tensor& at(int node_id) const;
  std::size_t size() const { return grads_.size(); }

 private:
  friend class Tape;
  std::unordered_map<int, Tensor> grads_;
};

/// Reverse-mode gradient tape. Nodes are recorded in execution order, which
/// is a topological order by construction; backward visits each node exactly
/// once in reverse. A tape is confined to one thread and is meant to live
/// for a single training step.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Register a leaf. The returned tensor shares storage with `leaf`.
  /// Gradients are reported only for leaves with requires_grad=true.
  Tensor watch(const Tensor& leaf);

  /// Backward from a scalar loss (adjoint seeded with 1).
  GradientMap backward(const Tensor& loss);

  /// Backward from any tracked tensor with an explicit output adjoint.
  GradientMap backward_from(const Tensor& output, std::span<const double> seed);

  std::size_t node_count() const { return nodes_.size(); }

  // --- recording interface used by the op implementations ---
  using PullFn = std::function<void(Tape&)>;
  int record(const Shape& shape, std::shared_ptr<std::vector<double>> value,
             PullFn pull);
  /// Adjoint buffer for a node, allocated (zero) on first touch.
  std::vector<double>& adj(int node_id);
  /// Adjoint buffer if the node was reached during this backward pass.
  const std::vector<double>* adj_if_touched(int node_id) const;

 private:
  struct Node {
    Shape shape;
    std::shared_ptr<std::vector<double>> value;
    PullFn pull;             // null for leaves
    bool leaf = false;
    bool wants_grad = false; // leaf with requires_grad
  };
  std::vector<Node> nodes_;
  std::vector<std::unique_ptr<std::vector<double>>> adjoints_;
};

// ---- elementwise ops (numpy-style trailing-dimension broadcasting) ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);
Tensor neg(const Tensor& a);

Tensor abs(const Tensor& a);
Tensor square(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor log(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);

// ---- reductions ----
Tensor sum_all(const Tensor& a);                     // -> scalar (shape {})
Tensor reduce_sum(const Tensor& a, std::size_t axis);
Tensor reduce_mean(const Tensor& a, std::size_t axis);

// ---- structure ----
Tensor reshape(const Tensor& a, Shape shape);
Tensor transpose(const Tensor& a);                   // 2-D
Tensor slice_last(const Tensor& a, std::size_t start, std::size_t len);
Tensor concat_last(std::span<const Tensor> parts);
Tensor stack_first(std::span<const Tensor> parts);   // new leading axis

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);     // 2-D

/// Per-(p,t) batch-averaged outer product:
///   out[p,t,i,j] = (1/B) sum_b a[b,p,t,i] * b[b,p,t,j]
/// for a, b of identical shape [B,P,T,D]; out is [P,T,D,D].
Tensor batched_outer(const Tensor& a, const Tensor& b);

// ---- composites ----
/// Standardize along the leading (batch) axis: each slice over axis 0 ends
/// with mean 0 and stddev 1, guarded as x' = (x - mean) / (std + epsilon) so
/// constant slices map to zeros. Requires batch size >= 2.
Tensor batch_standardize(const Tensor& x, double epsilon = 1e-8);

/// Softmax along the last axis (max-shifted for stability; the shift is a
/// constant, which leaves both value and gradient exact).
Tensor softmax_last(const Tensor& a);

/// Gaussian error linear unit, tanh approximation.
Tensor gelu(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

}  // namespace corrkd

#endif  // CORRKD_TENSOR_HPP_
