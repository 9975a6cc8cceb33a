// core/src/tensor.cpp

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

#include "corrkd/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace corrkd {

namespace detail {
struct TensorAccess {
  static Tensor make(Shape shape, std::shared_ptr<std::vector<double>> data,
                     Tape* tape, int node) {
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    t.tape_ = tape;
    t.node_ = node;
    return t;
  }
};
}  // namespace detail

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  s += ")";
  return s;
}

// ============================================================================
// Tensor
// ============================================================================

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::make_shared<std::vector<double>>(shape_numel(t.shape_), value);
  t.requires_grad_ = requires_grad;
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  CORRKD_CHECK(shape_numel(shape) == data.size(),
               "tensor data length " << data.size() << " does not match shape "
                                     << shape_to_string(shape));
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::make_shared<std::vector<double>>(std::move(data));
  t.requires_grad_ = requires_grad;
  return t;
}

Tensor Tensor::scalar(double value) { return from({}, {value}); }

double Tensor::value() const {
  CORRKD_CHECK(defined() && numel() == 1,
               "value() needs a one-element tensor, got shape "
                   << shape_to_string(shape_));
  return (*data_)[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  CORRKD_CHECK(index.size() == shape_.size(), "index rank " << index.size()
                                                            << " vs tensor rank "
                                                            << shape_.size());
  std::size_t off = 0;
  std::size_t d = 0;
  for (std::size_t i : index) {
    CORRKD_CHECK(i < shape_[d], "index out of range in dim " << d);
    off = off * shape_[d] + i;
    ++d;
  }
  return (*data_)[off];
}

Tensor Tensor::clone() const {
  Tensor t;
  t.shape_ = shape_;
  t.data_ = std::make_shared<std::vector<double>>(*data_);
  t.requires_grad_ = requires_grad_;
  return t;
}

// ============================================================================
// GradientMap
// ============================================================================

const Tensor& GradientMap::at(const Tensor& t) const {
  CORRKD_CHECK(t.node() >= 0, "gradient lookup for a tensor not on any tape");
  return at(t.node());
}

const Tensor& GradientMap::at(int node_id) const {
  auto it = grads_.find(node_id);
  CORRKD_CHECK(it != grads_.end(), "no gradient recorded for node " << node_id);
  return it->second;
}

// ============================================================================
// Tape
// ============================================================================

Tensor Tape::watch(const Tensor& leaf) {
  CORRKD_CHECK(leaf.defined(), "watch() on an undefined tensor");
  Node n;
  n.shape = leaf.shape();
  n.value = leaf.storage();
  n.leaf = true;
  n.wants_grad = leaf.requires_grad();
  nodes_.push_back(std::move(n));

  Tensor out = leaf;  // shares storage
  out.tape_ = this;
  out.node_ = static_cast<int>(nodes_.size()) - 1;
  return out;
}

int Tape::record(const Shape& shape, std::shared_ptr<std::vector<double>> value,
                 PullFn pull) {
  Node n;
  n.shape = shape;
  n.value = std::move(value);
  n.pull = std::move(pull);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

std::vector<double>& Tape::adj(int node_id) {
  auto& slot = adjoints_[static_cast<std::size_t>(node_id)];
  if (!slot) {
    slot = std::make_unique<std::vector<double>>(
        shape_numel(nodes_[static_cast<std::size_t>(node_id)].shape), 0.0);
  }
  return *slot;
}

const std::vector<double>* Tape::adj_if_touched(int node_id) const {
  return adjoints_[static_cast<std::size_t>(node_id)].get();
}

GradientMap Tape::backward(const Tensor& loss) {
  CORRKD_CHECK(loss.numel() == 1, "backward: loss must be scalar, got shape "
                                      << shape_to_string(loss.shape()));
  const double one = 1.0;
  return backward_from(loss, std::span<const double>(&one, 1));
}

GradientMap Tape::backward_from(const Tensor& output,
                                std::span<const double> seed) {
  CORRKD_CHECK(output.tape() == this && output.node() >= 0,
               "backward: output is not recorded on this tape");
  CORRKD_CHECK(!nodes_.empty(), "backward on an empty tape");
  CORRKD_CHECK(seed.size() == output.numel(),
               "backward seed has " << seed.size() << " elements, output has "
                                    << output.numel());

  adjoints_.clear();
  adjoints_.resize(nodes_.size());
  {
    auto& a = adj(output.node());
    std::copy(seed.begin(), seed.end(), a.begin());
  }
  for (int i = output.node(); i >= 0; --i) {
    if (!adjoints_[static_cast<std::size_t>(i)]) continue;  // not on the path
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.pull) n.pull(*this);
  }

  GradientMap map;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (!n.leaf || !n.wants_grad) continue;
    const auto* a = adjoints_[i].get();
    Tensor g = a ? Tensor::from(n.shape, *a) : Tensor::zeros(n.shape);
    map.grads_.emplace(static_cast<int>(i), std::move(g));
  }
  adjoints_.clear();
  return map;
}

// ============================================================================
// op plumbing
// ============================================================================

namespace {

using Buf = std::shared_ptr<std::vector<double>>;

Buf alloc(std::size_t n) { return std::make_shared<std::vector<double>>(n); }

// Per-input element strides right-aligned against the output shape; 0 where
// the input dimension is broadcast.
struct BroadcastPlan {
  Shape out;
  std::vector<std::size_t> sa, sb;
  bool same = false;
};

BroadcastPlan make_broadcast_plan(const Shape& a, const Shape& b,
                                  const char* op_name) {
  BroadcastPlan p;
  if (a == b) {
    p.out = a;
    p.same = true;
    return p;
  }
  const std::size_t ra = a.size(), rb = b.size();
  const std::size_t r = std::max(ra, rb);
  p.out.resize(r);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t da = i < r - ra ? 1 : a[i - (r - ra)];
    const std::size_t db = i < r - rb ? 1 : b[i - (r - rb)];
    CORRKD_CHECK(da == db || da == 1 || db == 1,
                 op_name << ": shapes " << shape_to_string(a) << " and "
                         << shape_to_string(b)
                         << " are not broadcast-compatible");
    p.out[i] = std::max(da, db);
  }
  p.sa.assign(r, 0);
  p.sb.assign(r, 0);
  std::size_t stride = 1;
  for (std::size_t i = r; i-- > 0;) {
    const std::size_t da = i < r - ra ? 1 : a[i - (r - ra)];
    if (da != 1) p.sa[i] = stride;
    stride *= da;
  }
  stride = 1;
  for (std::size_t i = r; i-- > 0;) {
    const std::size_t db = i < r - rb ? 1 : b[i - (r - rb)];
    if (db != 1) p.sb[i] = stride;
    stride *= db;
  }
  return p;
}

// Visit every output element with both input offsets. f(i, off_a, off_b).
template <class F>
void for_each_bcast(const BroadcastPlan& p, F&& f) {
  const std::size_t n = shape_numel(p.out);
  if (p.same) {
    for (std::size_t i = 0; i < n; ++i) f(i, i, i);
    return;
  }
  const std::size_t r = p.out.size();
  std::vector<std::size_t> idx(r, 0);
  std::size_t oa = 0, ob = 0;
  for (std::size_t i = 0; i < n; ++i) {
    f(i, oa, ob);
    for (std::size_t d = r; d-- > 0;) {
      ++idx[d];
      oa += p.sa[d];
      ob += p.sb[d];
      if (idx[d] < p.out[d]) break;
      oa -= p.sa[d] * p.out[d];
      ob -= p.sb[d] * p.out[d];
      idx[d] = 0;
    }
  }
}

Tape* result_tape(const Tensor& a, const Tensor& b) {
  Tape* t = nullptr;
  if (a.tracked()) t = a.tape();
  if (b.tracked()) {
    CORRKD_CHECK(t == nullptr || t == b.tape(),
                 "op inputs live on different tapes");
    t = b.tape();
  }
  return t;
}

Tensor finish(Tape* tape, Shape shape, Buf data, Tape::PullFn pull) {
  int node = -1;
  if (tape) node = tape->record(shape, data, std::move(pull));
  return detail::TensorAccess::make(std::move(shape), std::move(data), tape,
                                    node);
}

// Binary elementwise op with broadcasting.
// dfa(g, av, bv, cv) and dfb(...) give the local input gradients.
template <class FwdF, class DA, class DB>
Tensor binary_op(const char* name, const Tensor& a, const Tensor& b, FwdF fwd,
                 DA dfa, DB dfb) {
  CORRKD_CHECK(a.defined() && b.defined(), name << ": undefined input");
  BroadcastPlan plan = make_broadcast_plan(a.shape(), b.shape(), name);
  Buf out = alloc(shape_numel(plan.out));
  {
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* pc = out->data();
    for_each_bcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
      pc[i] = fwd(pa[ia], pb[ib]);
    });
  }
  Tape* tape = result_tape(a, b);
  if (!tape) return finish(nullptr, std::move(plan.out), out, nullptr);

  const int na = a.tracked() ? a.node() : -1;
  const int nb = b.tracked() ? b.node() : -1;
  Buf da = a.storage();
  Buf db = b.storage();
  Shape out_shape = plan.out;
  // The closure needs this node's id, known only after record(); it reads it
  // from a shared slot filled right after.
  auto self_id = std::make_shared<int>(-1);
  Tape::PullFn pull = [plan = std::move(plan), na, nb, da, db, out, dfa, dfb,
                       self_id](Tape& t) {
    const std::vector<double>& g = t.adj(*self_id);
    std::vector<double>* ga = na >= 0 ? &t.adj(na) : nullptr;
    std::vector<double>* gb = nb >= 0 ? &t.adj(nb) : nullptr;
    const double* pa = da->data();
    const double* pb = db->data();
    const double* pc = out->data();
    for_each_bcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
      if (ga) (*ga)[ia] += dfa(g[i], pa[ia], pb[ib], pc[i]);
      if (gb) (*gb)[ib] += dfb(g[i], pa[ia], pb[ib], pc[i]);
    });
  };
  int node = tape->record(out_shape, out, std::move(pull));
  *self_id = node;
  return detail::TensorAccess::make(std::move(out_shape), out, tape, node);
}

// Unary elementwise op. df(g, x, y) gives the input gradient.
template <class FwdF, class DF>
Tensor unary_op(const char* name, const Tensor& a, FwdF fwd, DF df) {
  CORRKD_CHECK(a.defined(), name << ": undefined input");
  const std::size_t n = a.numel();
  Buf out = alloc(n);
  {
    const double* pa = a.data().data();
    double* pc = out->data();
    for (std::size_t i = 0; i < n; ++i) pc[i] = fwd(pa[i]);
  }
  if (!a.tracked()) return finish(nullptr, a.shape(), out, nullptr);

  Tape* tape = a.tape();
  const int na = a.node();
  Buf da = a.storage();
  auto self_id = std::make_shared<int>(-1);
  Tape::PullFn pull = [n, na, da, out, df, self_id](Tape& t) {
    const std::vector<double>& g = t.adj(*self_id);
    std::vector<double>& ga = t.adj(na);
    const double* pa = da->data();
    const double* pc = out->data();
    for (std::size_t i = 0; i < n; ++i) ga[i] += df(g[i], pa[i], pc[i]);
  };
  int node = tape->record(a.shape(), out, std::move(pull));
  *self_id = node;
  return detail::TensorAccess::make(a.shape(), out, tape, node);
}

}  // namespace

// ============================================================================
// elementwise ops
// ============================================================================

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double g, double, double, double) { return g; },
      [](double g, double, double, double) { return g; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double g, double, double, double) { return g; },
      [](double g, double, double, double) { return -g; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double g, double, double y, double) { return g * y; },
      [](double g, double x, double, double) { return g * x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_op(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double g, double, double y, double) { return g / y; },
      [](double g, double, double y, double c) { return -g * c / y; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary_op(
      "add_scalar", a, [s](double x) { return x + s; },
      [](double g, double, double) { return g; });
}

Tensor mul_scalar(const Tensor& a, double s) {
  return unary_op(
      "mul_scalar", a, [s](double x) { return x * s; },
      [s](double g, double, double) { return g * s; });
}

Tensor neg(const Tensor& a) { return mul_scalar(a, -1.0); }

Tensor abs(const Tensor& a) {
  return unary_op(
      "abs", a, [](double x) { return std::fabs(x); },
      [](double g, double x, double) {
        return x > 0.0 ? g : (x < 0.0 ? -g : 0.0);
      });
}

Tensor square(const Tensor& a) {
  return unary_op(
      "square", a, [](double x) { return x * x; },
      [](double g, double x, double) { return 2.0 * g * x; });
}

Tensor sqrt(const Tensor& a) {
  // Gradient at exactly 0 is taken as 0 so that epsilon-guarded
  // standardization of constant slices stays finite end to end.
  return unary_op(
      "sqrt", a, [](double x) { return std::sqrt(x); },
      [](double g, double, double y) { return y > 0.0 ? g / (2.0 * y) : 0.0; });
}

Tensor log(const Tensor& a) {
  return unary_op(
      "log", a, [](double x) { return std::log(x); },
      [](double g, double x, double) { return g / x; });
}

Tensor exp(const Tensor& a) {
  return unary_op(
      "exp", a, [](double x) { return std::exp(x); },
      [](double g, double, double y) { return g * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double g, double, double y) { return g * y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary_op(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double g, double, double y) { return g * (1.0 - y * y); });
}

// ============================================================================
// reductions
// ============================================================================

Tensor sum_all(const Tensor& a) {
  CORRKD_CHECK(a.defined(), "sum_all: undefined input");
  const std::size_t n = a.numel();
  Buf out = alloc(1);
  {
    const double* pa = a.data().data();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += pa[i];
    (*out)[0] = s;
  }
  if (!a.tracked()) return finish(nullptr, {}, out, nullptr);
  Tape* tape = a.tape();
  const int na = a.node();
  auto self_id = std::make_shared<int>(-1);
  Tape::PullFn pull = [n, na, self_id](Tape& t) {
    const double g = t.adj(*self_id)[0];
    std::vector<double>& ga = t.adj(na);
    for (std::size_t i = 0; i < n; ++i) ga[i] += g;
  };
  int node = tape->record({}, out, std::move(pull));
  *self_id = node;
  return detail::TensorAccess::make({}, out, tape, node);
}

namespace {

Tensor reduce_axis(const char* name, const Tensor& a, std::size_t axis,
                   double scale) {
  CORRKD_CHECK(a.defined(), name << ": undefined input");
  CORRKD_CHECK(axis < a.ndim(), name << ": axis " << axis
                                     << " out of range for shape "
                                     << shape_to_string(a.shape()));
  const Shape& s = a.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t n = s[axis];
  Shape out_shape;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i != axis) out_shape.push_back(s[i]);

  Buf out = alloc(outer * inner);
  {
    const double* pa = a.data().data();
    double* pc = out->data();
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < inner; ++i) pc[o * inner + i] = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double* row = pa + (o * n + k) * inner;
        double* dst = pc + o * inner;
        for (std::size_t i = 0; i < inner; ++i) dst[i] += row[i];
      }
      if (scale != 1.0) {
        double* dst = pc + o * inner;
        for (std::size_t i = 0; i < inner; ++i) dst[i] *= scale;
      }
    }
  }
  if (!a.tracked()) return finish(nullptr, std::move(out_shape), out, nullptr);
  Tape* tape = a.tape();
  const int na = a.node();
  auto self_id = std::make_shared<int>(-1);
  Tape::PullFn pull = [outer, inner, n, scale, na, self_id](Tape& t) {
    const std::vector<double>& g = t.adj(*self_id);
    std::vector<double>& ga = t.adj(na);
    for (std::size_t o = 0; o < outer; ++o) {
      const double* src = g.data() + o * inner;
      for (std::size_t k = 0; k < n; ++k) {
        double* dst = ga.data() + (o * n + k) * inner;
        for (std::size_t i = 0; i < inner; ++i) dst[i] += scale * src[i];
      }
    }
  };
  int node = tape->record(out_shape, out, std::move(pull));
  *self_id = node;
  return detail::TensorAccess::make(std::move(out_shape), out, tape, node);
}

}  // namespace

Tensor reduce_sum(const Tensor& a, std::size_t axis) {
  return reduce_axis("reduce_sum", a, axis, 1.0);
}

Tensor reduce_mean(const Tensor& a, std::size_t axis) {
  CORRKD_CHECK(a.defined() && axis < a.ndim() && a.shape()[axis] > 0,
               "reduce_mean: bad axis");
  return reduce_axis("reduce_mean", a, axis,
                     1.0 / static_cast<double>(a.shape()[axis]));
}

// ============================================================================
// structure ops
// ============================================================================

Tensor reshape(const Tensor& a, Shape shape) {
  CORRKD_CHECK(a.defined(), "reshape: undefined input");
  CORRKD_CHECK(shape_numel(shape) == a.numel(),
               "reshape: cannot view " << shape_to_string(a.shape()) << " as "
                                       << shape_to_string(shape));
  const std::size_t n = a.numel();
  Buf out = std::make_shared<std::vector<double>>(a.data().begin(),
                                                  a.data().end());
  if (!a.tracked()) return finish(nullptr, std::move(shape), out, nullptr);
  Tape* tape = a.tape();
  const int na = a.node();
  auto self_id = std::make_shared<int>(-1);
  Tape::PullFn pull = [n, na, self_id](Tape& t) {
    const std::vector<double>& g = t.adj(*self_id);
    std::vector<double>& ga = t.adj(na);
    for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
  };
  int node = tape->record(shape, out, std::move(pull));
  *self_id = node;
  return detail::TensorAccess::make(std::move(shape), out, tape, node);
}

Tensor transpose(const Tensor& a) {
  CORRKD_CHECK(a.defined() && a.ndim() == 2,
               "transpose: expected a 2-D tensor, got "
                   << shape_to_string(a.shape()));
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  Buf out = alloc(m * n);
  {
    const double* pa = a.data().data();
    double* pc = out->data();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) pc[j * m + i] = pa[i * n + j];
  }
  Shape out_shape{n, m};
  if (!a.tracked()) return finish(nullptr, std::move(out_shape), out, nullptr);
  Tape* tape = a.tape();
  const int na = a.node();
  auto self_id = std::make_shared<int>(-1);
  Tape::PullFn pull = [m, n, na, self_id](Tape& t) {
    const std::vector<double>& g = t.adj(*self_id);  // [n,m]
    std::vector<double>& ga = t.adj(na);             // [m,n]
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < m; ++i) ga[i * n + j] += g[j * m + i];
  };
  int node = tape->record(out_shape, out, std::move(pull));
  *self_id = node;
  return detail::TensorAccess::make(std::move(out_shape), out, tape, node);
}

Tensor slice_last(const Tensor& a, std::size_t start, std::size_t len) {
  CORRKD_CHECK(a.defined() && a.ndim() >= 1, "slice_last: bad input");
  const std::size_t last = a.shape().back();
  CORRKD_CHECK(start + len <= last, "slice_last: [" << start << "," << start + len
                                                    << ") out of range for last dim "
                                                    << last);
  const std::size_t rows = a.numel() / last;
  Shape out_shape = a.shape();
  out_shape.back() = len;
  Buf out = alloc(rows * len);
  {
    const double* pa = a.data().data();
    double* pc = out->data();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < len; ++j)
        pc[r * len + j] = pa[r * last + start + j];
  }
  if (!a.tracked()) return finish(nullptr, std::move(out_shape), out, nullptr);
  Tape* tape = a.tape();
  const int na = a.node();
  auto self_id = std::make_shared<int>(-1);
  Tape::PullFn pull = [rows, len, last, start, na, self_id](Tape& t) {
    const std::vector<double>& g = t.adj(*self_id);
    std::vector<double>& ga = t.adj(na);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < len; ++j)
        ga[r * last + start + j] += g[r * len + j];
  };
  int node = tape->record(out_shape, out, std::move(pull));
  *self_id = node;
  return detail::TensorAccess::make(std::move(out_shape), out, tape, node);
}

Tensor concat_last(std::span<const Tensor> parts) {
  CORRKD_CHECK(!parts.empty(), "concat_last: no inputs");
  const Shape& head = parts[0].shape();
  CORRKD_CHECK(!head.empty(), "concat_last: inputs must have rank >= 1");
  std::size_t total_last = 0;
  Tape* tape = nullptr;
  for (const Tensor& p : parts) {
    CORRKD_CHECK(p.ndim() == head.size(), "concat_last: rank mismatch");
    for (std::size_t d = 0; d + 1 < head.size(); ++d)
      CORRKD_CHECK(p.shape()[d] == head[d],
                   "concat_last: leading dims differ: "
                       << shape_to_string(p.shape()) << " vs "
                       << shape_to_string(head));
    total_last += p.shape().back();
    if (p.tracked()) {
      CORRKD_CHECK(tape == nullptr || tape == p.tape(),
                   "concat_last: inputs on different tapes");
      tape = p.tape();
    }
  }
  const std::size_t rows = parts[0].numel() / head.back();
  Shape out_shape = head;
  out_shape.back() = total_last;
  Buf out = alloc(rows * total_last);
  {
    double* pc = out->data();
    std::size_t col = 0;
    for (const Tensor& p : parts) {
      const std::size_t len = p.shape().back();
      const double* pa = p.data().data();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < len; ++j)
          pc[r * total_last + col + j] = pa[r * len + j];
      col += len;
    }
  }
  if (!tape) return finish(nullptr, std::move(out_shape), out, nullptr);

  struct Piece {
    int node;
    std::size_t len, col;
  };
  std::vector<Piece> pieces;
  std::size_t col = 0;
  for (const Tensor& p : parts) {
    pieces.push_back({p.tracked() ? p.node() : -1, p.shape().back(), col});
    col += p.shape().back();
  }
  auto self_id = std::make_shared<int>(-1);
  Tape::PullFn pull = [rows, total_last, pieces = std::move(pieces),
                       self_id](Tape& t) {
    const std::vector<double>& g = t.adj(*self_id);
    for (const Piece& p : pieces) {
      if (p.node < 0) continue;
      std::vector<double>& ga = t.adj(p.node);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < p.len; ++j)
          ga[r * p.len + j] += g[r * total_last + p.col + j];
    }
  };
  int node = tape->record(out_shape, out, std::move(pull));
  *self_id = node;
  return detail::TensorAccess::make(std::move(out_shape), out, tape, node);
}

Tensor stack_first(std::span<const Tensor> parts) {
  CORRKD_CHECK(!parts.empty(), "stack_first: no inputs");
  const Shape& head = parts[0].shape();
  Tape* tape = nullptr;
  for (const Tensor& p : parts) {
    CORRKD_CHECK(p.shape() == head, "stack_first: shape mismatch: "
                                        << shape_to_string(p.shape()) << " vs "
                                        << shape_to_string(head));
    if (p.tracked()) {
      CORRKD_CHECK(tape == nullptr || tape == p.tape(),
                   "stack_first: inputs on different tapes");
      tape = p.tape();
    }
  }
  const std::size_t per = shape_numel(head);
  Shape out_shape;
  out_shape.push_back(parts.size());
  out_shape.insert(out_shape.end(), head.begin(), head.end());
  Buf out = alloc(parts.size() * per);
  {
    double* pc = out->data();
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const double* pa = parts[k].data().data();
      std::copy(pa, pa + per, pc + k * per);
    }
  }
  if (!tape) return finish(nullptr, std::move(out_shape), out, nullptr);

  std::vector<int> ids;
  for (const Tensor& p : parts) ids.push_back(p.tracked() ? p.node() : -1);
  auto self_id = std::make_shared<int>(-1);
  Tape::PullFn pull = [per, ids = std::move(ids), self_id](Tape& t) {
    const std::vector<double>& g = t.adj(*self_id);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (ids[k] < 0) continue;
      std::vector<double>& ga = t.adj(ids[k]);
      const double* src = g.data() + k * per;
      for (std::size_t i = 0; i < per; ++i) ga[i] += src[i];
    }
  };
  int node = tape->record(out_shape, out, std::move(pull));
  *self_id = node;
  return detail::TensorAccess::make(std::move(out_shape), out, tape, node);
}

// ============================================================================
// linear algebra
// ============================================================================

namespace {

// C[M,N] += A[M,K] * B[K,N]
void mm_nn_acc(const double* A, const double* B, double* C, std::size_t M,
               std::size_t K, std::size_t N) {
  for (std::size_t m = 0; m < M; ++m) {
    const double* a = A + m * K;
    double* c = C + m * N;
    for (std::size_t k = 0; k < K; ++k) {
      const double av = a[k];
      const double* b = B + k * N;
      for (std::size_t n = 0; n < N; ++n) c[n] += av * b[n];
    }
  }
}

// C[M,K] += G[M,N] * B[K,N]^T   (C[m,k] += sum_n G[m,n] * B[k,n])
void mm_nt_acc(const double* G, const double* B, double* C, std::size_t M,
               std::size_t N, std::size_t K) {
  for (std::size_t m = 0; m < M; ++m) {
    const double* g = G + m * N;
    double* c = C + m * K;
    for (std::size_t k = 0; k < K; ++k) {
      const double* b = B + k * N;
      double s = 0.0;
      for (std::size_t n = 0; n < N; ++n) s += g[n] * b[n];
      c[k] += s;
    }
  }
}

// C[K,N] += A[M,K]^T * G[M,N]   (C[k,n] += sum_m A[m,k] * G[m,n])
void mm_tn_acc(const double* A, const double* G, double* C, std::size_t M,
               std::size_t K, std::size_t N) {
  for (std::size_t m = 0; m < M; ++m) {
    const double* a = A + m * K;
    const double* g = G + m * N;
    for (std::size_t k = 0; k < K; ++k) {
      const double av = a[k];
      double* c = C + k * N;
      for (std::size_t n = 0; n < N; ++n) c[n] += av * g[n];
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  CORRKD_CHECK(a.defined() && b.defined() && a.ndim() == 2 && b.ndim() == 2,
               "matmul: expects 2-D inputs, got "
                   << shape_to_string(a.shape()) << " and "
                   << shape_to_string(b.shape()));
  const std::size_t M = a.shape()[0], K = a.shape()[1];
  CORRKD_CHECK(b.shape()[0] == K, "matmul: inner dims differ: "
                                      << shape_to_string(a.shape()) << " x "
                                      << shape_to_string(b.shape()));
  const std::size_t N = b.shape()[1];
  Buf out = alloc(M * N);
  std::fill(out->begin(), out->end(), 0.0);
  mm_nn_acc(a.data().data(), b.data().data(), out->data(), M, K, N);

  Shape out_shape{M, N};
  Tape* tape = result_tape(a, b);
  if (!tape) return finish(nullptr, std::move(out_shape), out, nullptr);

  const int na = a.tracked() ? a.node() : -1;
  const int nb = b.tracked() ? b.node() : -1;
  Buf da = a.storage();
  Buf db = b.storage();
  auto self_id = std::make_shared<int>(-1);
  Tape::PullFn pull = [M, K, N, na, nb, da, db, self_id](Tape& t) {
    const std::vector<double>& g = t.adj(*self_id);
    if (na >= 0) mm_nt_acc(g.data(), db->data(), t.adj(na).data(), M, N, K);
    if (nb >= 0) mm_tn_acc(da->data(), g.data(), t.adj(nb).data(), M, K, N);
  };
  int node = tape->record(out_shape, out, std::move(pull));
  *self_id = node;
  return detail::TensorAccess::make(std::move(out_shape), out, tape, node);
}

Tensor batched_outer(const Tensor& a, const Tensor& b) {
  CORRKD_CHECK(a.defined() && b.defined(), "batched_outer: undefined input");
  CORRKD_CHECK(a.shape() == b.shape(),
               "batched_outer: shapes differ: " << shape_to_string(a.shape())
                                                << " vs "
                                                << shape_to_string(b.shape()));
  CORRKD_CHECK(a.ndim() == 4, "batched_outer: expects [B,P,T,D], got "
                                  << shape_to_string(a.shape()));
  const std::size_t B = a.shape()[0], P = a.shape()[1], T = a.shape()[2],
                    D = a.shape()[3];
  CORRKD_CHECK(B >= 1, "batched_outer: empty batch");
  const std::size_t PT = P * T;
  const double inv_b = 1.0 / static_cast<double>(B);

  Buf out = alloc(PT * D * D);
  std::fill(out->begin(), out->end(), 0.0);
  {
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* pc = out->data();
    for (std::size_t bb = 0; bb < B; ++bb) {
      for (std::size_t pt = 0; pt < PT; ++pt) {
        const double* va = pa + (bb * PT + pt) * D;
        const double* vb = pb + (bb * PT + pt) * D;
        double* m = pc + pt * D * D;
        for (std::size_t i = 0; i < D; ++i) {
          const double ai = va[i];
          double* row = m + i * D;
          for (std::size_t j = 0; j < D; ++j) row[j] += ai * vb[j];
        }
      }
    }
    for (std::size_t i = 0; i < PT * D * D; ++i) pc[i] *= inv_b;
  }

  Shape out_shape{P, T, D, D};
  Tape* tape = result_tape(a, b);
  if (!tape) return finish(nullptr, std::move(out_shape), out, nullptr);

  const int na = a.tracked() ? a.node() : -1;
  const int nb = b.tracked() ? b.node() : -1;
  Buf da = a.storage();
  Buf db = b.storage();
  auto self_id = std::make_shared<int>(-1);
  Tape::PullFn pull = [B, PT, D, inv_b, na, nb, da, db, self_id](Tape& t) {
    const std::vector<double>& g = t.adj(*self_id);  // [PT,D,D]
    const double* pa = da->data();
    const double* pb = db->data();
    if (na >= 0) {
      std::vector<double>& ga = t.adj(na);
      for (std::size_t bb = 0; bb < B; ++bb) {
        for (std::size_t pt = 0; pt < PT; ++pt) {
          const double* vb = pb + (bb * PT + pt) * D;
          double* va = ga.data() + (bb * PT + pt) * D;
          const double* m = g.data() + pt * D * D;
          for (std::size_t i = 0; i < D; ++i) {
            const double* row = m + i * D;
            double s = 0.0;
            for (std::size_t j = 0; j < D; ++j) s += row[j] * vb[j];
            va[i] += inv_b * s;
          }
        }
      }
    }
    if (nb >= 0) {
      std::vector<double>& gb = t.adj(nb);
      for (std::size_t bb = 0; bb < B; ++bb) {
        for (std::size_t pt = 0; pt < PT; ++pt) {
          const double* va = pa + (bb * PT + pt) * D;
          double* vb = gb.data() + (bb * PT + pt) * D;
          const double* m = g.data() + pt * D * D;
          for (std::size_t i = 0; i < D; ++i) {
            const double ai = va[i];
            const double* row = m + i * D;
            for (std::size_t j = 0; j < D; ++j) vb[j] += inv_b * ai * row[j];
          }
        }
      }
    }
  };
  int node = tape->record(out_shape, out, std::move(pull));
  *self_id = node;
  return detail::TensorAccess::make(std::move(out_shape), out, tape, node);
}

// ============================================================================
// composites
// ============================================================================

Tensor batch_standardize(const Tensor& x, double epsilon) {
  CORRKD_CHECK(x.defined() && x.ndim() >= 1,
               "batch_standardize: undefined or rank-0 input");
  CORRKD_CHECK(x.shape()[0] >= 2,
               "batch_standardize: batch size must be >= 2, got "
                   << x.shape()[0]
                   << " (correlation along the batch is undefined)");
  Tensor m = reduce_mean(x, 0);
  Tensor centered = sub(x, m);
  Tensor variance = reduce_mean(square(centered), 0);
  Tensor denom = add_scalar(sqrt(variance), epsilon);
  return div(centered, denom);
}

Tensor softmax_last(const Tensor& a) {
  CORRKD_CHECK(a.defined() && a.ndim() >= 1, "softmax_last: bad input");
  const std::size_t last = a.shape().back();
  const std::size_t rows = a.numel() / last;
  // Row maxes as a constant shift: softmax(x - c) == softmax(x) exactly.
  std::vector<double> mx(rows);
  {
    const double* pa = a.data().data();
    for (std::size_t r = 0; r < rows; ++r) {
      double m = pa[r * last];
      for (std::size_t j = 1; j < last; ++j)
        m = std::max(m, pa[r * last + j]);
      mx[r] = m;
    }
  }
  Shape row_shape = a.shape();
  row_shape.back() = 1;
  Tensor shift = Tensor::from(row_shape, std::move(mx));
  Tensor e = exp(sub(a, shift));
  Tensor denom = reshape(reduce_sum(e, e.ndim() - 1), row_shape);
  return div(e, denom);
}

Tensor gelu(const Tensor& a) {
  // 0.5 * x * (1 + tanh(sqrt(2/pi) * (x + 0.044715 x^3)))
  constexpr double kAlpha = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kBeta = 0.044715;
  Tensor x3 = mul(a, square(a));
  Tensor inner = mul_scalar(add(a, mul_scalar(x3, kBeta)), kAlpha);
  Tensor t = tanh(inner);
  return mul_scalar(mul(a, add_scalar(t, 1.0)), 0.5);
}

}  // namespace corrkd
