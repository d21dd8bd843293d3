// Copyright 2026 The ipagnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Minimal reverse-mode automatic differentiation over dense row-major
// arrays of rank <= 3. A Tape records primitive applications in topological
// order and backward() replays them in reverse, accumulating adjoints.
// Matrix-shaped ops view an operand as rows = product of the leading dims,
// cols = last dim.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ipagnn/errors.h"

namespace ipagnn::ad {

class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<int> dims) {
    if (dims.size() > 3) throw ShapeError("rank above 3 is unsupported");
    for (int d : dims) {
      if (d < 0) throw ShapeError("negative dimension");
      dims_[rank_++] = d;
    }
  }

  int rank() const { return rank_; }
  int dim(int axis) const { return dims_[axis]; }
  std::int64_t size() const {
    std::int64_t n = 1;
    for (int i = 0; i < rank_; ++i) n *= dims_[i];
    return n;
  }
  int cols() const { return rank_ == 0 ? 1 : dims_[rank_ - 1]; }
  int rows() const {
    int n = 1;
    for (int i = 0; i + 1 < rank_; ++i) n *= dims_[i];
    return n;
  }
  // (outer, extent, inner) sizes around one axis.
  std::array<std::int64_t, 3> split(int axis) const {
    std::int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= dims_[i];
    for (int i = axis + 1; i < rank_; ++i) inner *= dims_[i];
    return {outer, dims_[axis], inner};
  }
  Shape with_dim(int axis, int extent) const {
    Shape s = *this;
    s.dims_[axis] = extent;
    return s;
  }
  Shape without_dim(int axis) const {
    Shape s;
    for (int i = 0; i < rank_; ++i) {
      if (i != axis) s.dims_[s.rank_++] = dims_[i];
    }
    return s;
  }

  std::string str() const {
    std::string s = "[";
    for (int i = 0; i < rank_; ++i) {
      if (i) s += ",";
      s += std::to_string(dims_[i]);
    }
    return s + "]";
  }

  bool operator==(const Shape& o) const {
    if (rank_ != o.rank_) return false;
    for (int i = 0; i < rank_; ++i) {
      if (dims_[i] != o.dims_[i]) return false;
    }
    return true;
  }

 private:
  std::array<int, 3> dims_{};
  int rank_ = 0;
};

// Named learnable array with its gradient slot.
template <typename T>
struct Parameter {
  std::string name;
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;

  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

template <typename T>
class Tape;

// Handle to a value recorded on a tape.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, int id) : tape_(tape), id_(id) {}

  Tape<T>& tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  const Shape& shape() const { return tape_->shape(*this); }
  std::span<const T> value() const { return tape_->value(*this); }
  T item() const { return tape_->item(*this); }

 private:
  Tape<T>* tape_ = nullptr;
  int id_ = -1;
};

template <typename T>
class Tape {
 public:
  using Matrix =
      Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using ConstMap = Eigen::Map<const Matrix>;
  using MutMap = Eigen::Map<Matrix>;
  using V = Var<T>;

  Tape() { nodes_.reserve(512); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // ---- inspection --------------------------------------------------------

  const Shape& shape(V v) const { return nodes_[v.id()].shape; }
  std::span<const T> value(V v) const {
    const Node& n = nodes_[v.id()];
    return {val(v.id()), static_cast<size_t>(n.shape.size())};
  }
  T item(V v) const {
    if (shape(v).size() != 1) {
      throw ShapeError("item() on non-scalar " + shape(v).str());
    }
    return val(v.id())[0];
  }
  // Adjoint of a recorded value after backward(); zeros if none reached it.
  std::vector<T> gradient(V v) const {
    const Node& n = nodes_[v.id()];
    if (n.external_grad) {
      return {n.external_grad, n.external_grad + n.shape.size()};
    }
    if (n.grad.empty()) return std::vector<T>(n.shape.size(), T(0));
    return n.grad;
  }
  size_t size() const { return nodes_.size(); }

  // ---- leaves ------------------------------------------------------------

  V constant(Shape shape, std::vector<T> values) {
    if (static_cast<std::int64_t>(values.size()) != shape.size()) {
      throw ShapeError("constant of shape " + shape.str() + " given " +
                       std::to_string(values.size()) + " values");
    }
    Node& n = push(shape, false);
    n.value = std::move(values);
    return last();
  }

  // Converting overload, so scalar-generic code can pass f64 data.
  template <typename U>
    requires(!std::is_same_v<U, T>)
  V constant(Shape shape, const std::vector<U>& values) {
    return constant(shape, std::vector<T>(values.begin(), values.end()));
  }

  V zeros(Shape shape) {
    return constant(shape, std::vector<T>(shape.size(), T(0)));
  }

  // Differentiable leaf owning its value (used by tests and grad checks).
  V variable(Shape shape, std::vector<T> values) {
    V v = constant(shape, std::move(values));
    nodes_[v.id()].requires_grad = true;
    return v;
  }

  // Leaf aliasing a parameter without copying; adjoints accumulate directly
  // into `p.grad`.
  V parameter(Parameter<T>& p) {
    if (p.grad.size() != p.value.size()) p.grad.assign(p.value.size(), T(0));
    Node& n = push(p.shape, true);
    n.external_value = p.value.data();
    n.external_grad = p.grad.data();
    return last();
  }

  // ---- primitives --------------------------------------------------------

  V matmul(V a, V b) {
    const Shape sa = shape(a), sb = shape(b);
    if (sa.cols() != sb.rows() || sb.rank() > 2) {
      throw ShapeError("matmul shape mismatch: " + sa.str() + " x " +
                       sb.str());
    }
    const int m = sa.rows(), k = sa.cols(), n = sb.cols();
    const int ia = a.id(), ib = b.id();
    Node& out = push(Shape{m, n}, req(ia) || req(ib));
    out.value.resize(static_cast<size_t>(m) * n);
    if (k == 0) {
      std::fill(out.value.begin(), out.value.end(), T(0));
    } else {
      MutMap(out.value.data(), m, n).noalias() =
          ConstMap(val(ia), m, k) * ConstMap(val(ib), k, n);
    }
    const int io = out_id();
    on_backward([this, ia, ib, io, m, k, n] {
      ConstMap g(grad(io), m, n);
      if (req(ia)) {
        MutMap(grad(ia), m, k).noalias() +=
            g * ConstMap(val(ib), k, n).transpose();
      }
      if (req(ib)) {
        MutMap(grad(ib), k, n).noalias() +=
            ConstMap(val(ia), m, k).transpose() * g;
      }
    });
    return last();
  }

  // a + b where b matches a, or b is one row broadcast over a's rows.
  V add(V a, V b) {
    const Broadcast mode = broadcast_mode(a, b, "add", false);
    const int ia = a.id(), ib = b.id();
    const Shape s = shape(a);
    const int rows = s.rows(), cols = s.cols();
    Node& out = push(s, req(ia) || req(ib));
    out.value.assign(val(ia), val(ia) + s.size());
    const T* pb = val(ib);
    T* po = out.value.data();
    if (mode == Broadcast::kNone) {
      for (std::int64_t i = 0; i < s.size(); ++i) po[i] += pb[i];
    } else {
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) po[r * cols + c] += pb[c];
      }
    }
    const int io = out_id();
    on_backward([this, ia, ib, io, mode, rows, cols] {
      const T* g = grad(io);
      const std::int64_t total = static_cast<std::int64_t>(rows) * cols;
      if (req(ia)) {
        T* ga = grad(ia);
        for (std::int64_t i = 0; i < total; ++i) ga[i] += g[i];
      }
      if (req(ib)) {
        T* gb = grad(ib);
        if (mode == Broadcast::kNone) {
          for (std::int64_t i = 0; i < total; ++i) gb[i] += g[i];
        } else {
          for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) gb[c] += g[r * cols + c];
          }
        }
      }
    });
    return last();
  }

  // Elementwise a * b; b may also be a row (1 x cols) or a column
  // (rows x 1) broadcast over a.
  V mul(V a, V b) {
    const Broadcast mode = broadcast_mode(a, b, "mul", true);
    const int ia = a.id(), ib = b.id();
    const Shape s = shape(a);
    const int rows = s.rows(), cols = s.cols();
    Node& out = push(s, req(ia) || req(ib));
    out.value.resize(s.size());
    const T* pa = val(ia);
    const T* pb = val(ib);
    T* po = out.value.data();
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const int i = r * cols + c;
        po[i] = pa[i] * pb[bindex(mode, r, c, cols)];
      }
    }
    const int io = out_id();
    on_backward([this, ia, ib, io, mode, rows, cols] {
      const T* g = grad(io);
      const T* pa = val(ia);
      const T* pb = val(ib);
      T* ga = req(ia) ? grad(ia) : nullptr;
      T* gb = req(ib) ? grad(ib) : nullptr;
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
          const int i = r * cols + c;
          const int j = bindex(mode, r, c, cols);
          if (ga) ga[i] += g[i] * pb[j];
          if (gb) gb[j] += g[i] * pa[i];
        }
      }
    });
    return last();
  }

  // alpha * a + beta
  V affine(V a, T alpha, T beta) {
    return unary_impl(
        a, [alpha, beta](T x) { return alpha * x + beta; },
        [alpha](T, T) { return alpha; });
  }
  V scale(V a, T alpha) { return affine(a, alpha, T(0)); }

  V sigmoid(V a) {
    return unary_impl(
        a,
        [](T x) {
          // Split by sign so exp never overflows.
          if (x >= 0) return T(1) / (T(1) + std::exp(-x));
          const T e = std::exp(x);
          return e / (T(1) + e);
        },
        [](T, T y) { return y * (T(1) - y); });
  }

  V tanh(V a) {
    return unary_impl(
        a, [](T x) { return std::tanh(x); },
        [](T, T y) { return T(1) - y * y; });
  }

  V log(V a) {
    return unary_impl(
        a, [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
  }

  V exp(V a) {
    return unary_impl(
        a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
  }

  // Softmax along `axis`; backward uses y * (g - <g, y>).
  V softmax(V a, int axis = -1) {
    const Shape s = shape(a);
    axis = normalize_axis(s, axis);
    const auto [outer, extent, inner] = s.split(axis);
    const int ia = a.id();
    Node& out = push(s, req(ia));
    out.value.resize(s.size());
    const T* x = val(ia);
    T* y = out.value.data();
    for (std::int64_t o = 0; o < outer; ++o) {
      for (std::int64_t i = 0; i < inner; ++i) {
        const std::int64_t base = o * extent * inner + i;
        T hi = x[base];
        for (std::int64_t k = 1; k < extent; ++k) {
          hi = std::max(hi, x[base + k * inner]);
        }
        T total = 0;
        for (std::int64_t k = 0; k < extent; ++k) {
          y[base + k * inner] = std::exp(x[base + k * inner] - hi);
          total += y[base + k * inner];
        }
        for (std::int64_t k = 0; k < extent; ++k) y[base + k * inner] /= total;
      }
    }
    const int io = out_id();
    on_backward([this, ia, io, outer, extent, inner] {
      const T* y = val(io);
      const T* g = grad(io);
      T* gx = grad(ia);
      for (std::int64_t o = 0; o < outer; ++o) {
        for (std::int64_t i = 0; i < inner; ++i) {
          const std::int64_t base = o * extent * inner + i;
          T dot = 0;
          for (std::int64_t k = 0; k < extent; ++k) {
            dot += g[base + k * inner] * y[base + k * inner];
          }
          for (std::int64_t k = 0; k < extent; ++k) {
            gx[base + k * inner] +=
                y[base + k * inner] * (g[base + k * inner] - dot);
          }
        }
      }
    });
    return last();
  }

  // Sum of all elements, as a scalar.
  V sum(V a) {
    const int ia = a.id();
    const std::int64_t n = shape(a).size();
    Node& out = push(Shape{}, req(ia));
    T total = 0;
    const T* x = val(ia);
    for (std::int64_t i = 0; i < n; ++i) total += x[i];
    out.value = {total};
    const int io = out_id();
    on_backward([this, ia, io, n] {
      const T g = grad(io)[0];
      T* gx = grad(ia);
      for (std::int64_t i = 0; i < n; ++i) gx[i] += g;
    });
    return last();
  }

  // Sum over one axis; the axis is removed from the shape.
  V sum(V a, int axis) {
    const Shape s = shape(a);
    axis = normalize_axis(s, axis);
    const auto [outer, extent, inner] = s.split(axis);
    const int ia = a.id();
    Node& out = push(s.without_dim(axis), req(ia));
    out.value.assign(outer * inner, T(0));
    const T* x = val(ia);
    for (std::int64_t o = 0; o < outer; ++o) {
      for (std::int64_t k = 0; k < extent; ++k) {
        for (std::int64_t i = 0; i < inner; ++i) {
          out.value[o * inner + i] += x[(o * extent + k) * inner + i];
        }
      }
    }
    const int io = out_id();
    on_backward([this, ia, io, outer, extent, inner] {
      const T* g = grad(io);
      T* gx = grad(ia);
      for (std::int64_t o = 0; o < outer; ++o) {
        for (std::int64_t k = 0; k < extent; ++k) {
          for (std::int64_t i = 0; i < inner; ++i) {
            gx[(o * extent + k) * inner + i] += g[o * inner + i];
          }
        }
      }
    });
    return last();
  }

  // Concatenation along `axis`; all other extents must agree.
  V concat(std::span<const V> parts, int axis) {
    if (parts.empty()) throw ShapeError("concat of zero operands");
    const Shape first = shape(parts[0]);
    axis = normalize_axis(first, axis);
    int extent = 0;
    bool any_req = false;
    std::vector<int> ids, extents;
    for (const V& p : parts) {
      const Shape s = shape(p);
      if (s.rank() != first.rank() ||
          !(s.with_dim(axis, 0) == first.with_dim(axis, 0))) {
        throw ShapeError("concat shape mismatch: " + first.str() + " vs " +
                         s.str() + " on axis " + std::to_string(axis));
      }
      extent += s.dim(axis);
      any_req |= req(p.id());
      ids.push_back(p.id());
      extents.push_back(s.dim(axis));
    }
    const Shape so = first.with_dim(axis, extent);
    const auto [outer, total, inner] = so.split(axis);
    Node& out = push(so, any_req);
    out.value.resize(so.size());
    T* y = out.value.data();
    std::int64_t offset = 0;
    for (size_t p = 0; p < ids.size(); ++p) {
      const T* x = val(ids[p]);
      const std::int64_t chunk = extents[p] * inner;
      for (std::int64_t o = 0; o < outer; ++o) {
        std::copy(x + o * chunk, x + (o + 1) * chunk,
                  y + o * total * inner + offset);
      }
      offset += chunk;
    }
    const int io = out_id();
    on_backward([this, ids, extents, io, outer = outer, total = total,
                 inner = inner] {
      const T* g = grad(io);
      std::int64_t offset = 0;
      for (size_t p = 0; p < ids.size(); ++p) {
        const std::int64_t chunk = extents[p] * inner;
        if (req(ids[p])) {
          T* gx = grad(ids[p]);
          for (std::int64_t o = 0; o < outer; ++o) {
            const T* src = g + o * total * inner + offset;
            for (std::int64_t i = 0; i < chunk; ++i) gx[o * chunk + i] += src[i];
          }
        }
        offset += chunk;
      }
    });
    return last();
  }
  V concat(std::initializer_list<V> parts, int axis) {
    return concat(std::span<const V>(parts.begin(), parts.size()), axis);
  }

  // Half-open range [begin, end) along `axis`.
  V slice(V a, int axis, int begin, int end) {
    const Shape s = shape(a);
    axis = normalize_axis(s, axis);
    if (begin < 0 || end > s.dim(axis) || begin > end) {
      throw ShapeError("slice [" + std::to_string(begin) + ", " +
                       std::to_string(end) + ") out of range for " + s.str());
    }
    const auto [outer, extent, inner] = s.split(axis);
    const Shape so = s.with_dim(axis, end - begin);
    const int ia = a.id();
    Node& out = push(so, req(ia));
    const std::int64_t chunk = (end - begin) * inner;
    out.value.resize(so.size());
    const T* x = val(ia);
    for (std::int64_t o = 0; o < outer; ++o) {
      const T* src = x + (o * extent + begin) * inner;
      std::copy(src, src + chunk, out.value.data() + o * chunk);
    }
    const int io = out_id();
    on_backward([this, ia, io, outer = outer, extent = extent, inner = inner,
                 begin, chunk] {
      const T* g = grad(io);
      T* gx = grad(ia);
      for (std::int64_t o = 0; o < outer; ++o) {
        T* dst = gx + (o * extent + begin) * inner;
        for (std::int64_t i = 0; i < chunk; ++i) dst[i] += g[o * chunk + i];
      }
    });
    return last();
  }

  // Same values viewed under a new shape of equal size.
  V reshape(V a, Shape to) {
    const Shape s = shape(a);
    if (s.size() != to.size()) {
      throw ShapeError("reshape " + s.str() + " to " + to.str());
    }
    const int ia = a.id();
    Node& out = push(to, req(ia));
    out.value.assign(val(ia), val(ia) + s.size());
    const int io = out_id();
    on_backward([this, ia, io, n = s.size()] {
      const T* g = grad(io);
      T* gx = grad(ia);
      for (std::int64_t i = 0; i < n; ++i) gx[i] += g[i];
    });
    return last();
  }

  // out[i, :] = a[indices[i], :]
  V row_gather(V a, std::vector<int> indices) {
    const Shape s = shape(a);
    const int rows = s.rows(), cols = s.cols();
    for (int r : indices) {
      if (r < 0 || r >= rows) {
        throw ShapeError("row_gather index " + std::to_string(r) +
                         " out of range for " + s.str());
      }
    }
    const int ia = a.id();
    const int n = static_cast<int>(indices.size());
    Node& out = push(Shape{n, cols}, req(ia));
    out.value.resize(static_cast<size_t>(n) * cols);
    const T* x = val(ia);
    for (int i = 0; i < n; ++i) {
      std::copy(x + static_cast<std::int64_t>(indices[i]) * cols,
                x + static_cast<std::int64_t>(indices[i] + 1) * cols,
                out.value.data() + static_cast<std::int64_t>(i) * cols);
    }
    const int io = out_id();
    on_backward([this, ia, io, cols, idx = std::move(indices)] {
      const T* g = grad(io);
      T* gx = grad(ia);
      for (size_t i = 0; i < idx.size(); ++i) {
        T* dst = gx + static_cast<std::int64_t>(idx[i]) * cols;
        const T* src = g + static_cast<std::int64_t>(i) * cols;
        for (int c = 0; c < cols; ++c) dst[c] += src[c];
      }
    });
    return last();
  }

  // out = zeros(out_rows, cols); out[indices[i], :] += a[i, :]
  V row_scatter_add(V a, std::vector<int> indices, int out_rows) {
    const Shape s = shape(a);
    const int cols = s.cols();
    if (static_cast<int>(indices.size()) != s.rows()) {
      throw ShapeError("row_scatter_add: " + std::to_string(indices.size()) +
                       " indices for " + s.str());
    }
    for (int r : indices) {
      if (r < 0 || r >= out_rows) {
        throw ShapeError("row_scatter_add index " + std::to_string(r) +
                         " out of range " + std::to_string(out_rows));
      }
    }
    const int ia = a.id();
    Node& out = push(Shape{out_rows, cols}, req(ia));
    out.value.assign(static_cast<size_t>(out_rows) * cols, T(0));
    const T* x = val(ia);
    for (size_t i = 0; i < indices.size(); ++i) {
      T* dst = out.value.data() + static_cast<std::int64_t>(indices[i]) * cols;
      const T* src = x + static_cast<std::int64_t>(i) * cols;
      for (int c = 0; c < cols; ++c) dst[c] += src[c];
    }
    const int io = out_id();
    on_backward([this, ia, io, cols, idx = std::move(indices)] {
      const T* g = grad(io);
      T* gx = grad(ia);
      for (size_t i = 0; i < idx.size(); ++i) {
        const T* src = g + static_cast<std::int64_t>(idx[i]) * cols;
        T* dst = gx + static_cast<std::int64_t>(i) * cols;
        for (int c = 0; c < cols; ++c) dst[c] += src[c];
      }
    });
    return last();
  }

  // Per-row softmax cross-entropy: out[r] = logsumexp(z[r]) - z[r, y_r].
  // Shape [rows, 1].
  V softmax_cross_entropy(V logits, std::vector<int> labels) {
    const Shape s = shape(logits);
    const int rows = s.rows(), cols = s.cols();
    if (static_cast<int>(labels.size()) != rows) {
      throw ShapeError("softmax_cross_entropy: " +
                       std::to_string(labels.size()) + " labels for " +
                       s.str());
    }
    for (int y : labels) {
      if (y < 0 || y >= cols) {
        throw ShapeError("label " + std::to_string(y) + " outside [0, " +
                         std::to_string(cols) + ")");
      }
    }
    const int ia = logits.id();
    Node& out = push(Shape{rows, 1}, req(ia));
    out.value.resize(rows);
    std::vector<T> probs(static_cast<size_t>(rows) * cols);
    const T* z = val(ia);
    for (int r = 0; r < rows; ++r) {
      const T* zr = z + static_cast<std::int64_t>(r) * cols;
      T* pr = probs.data() + static_cast<std::int64_t>(r) * cols;
      const T hi = *std::max_element(zr, zr + cols);
      // Partition function accumulated in extended precision.
      long double total = 0;
      for (int c = 0; c < cols; ++c) {
        const long double e = std::exp(static_cast<long double>(zr[c] - hi));
        pr[c] = static_cast<T>(e);
        total += e;
      }
      for (int c = 0; c < cols; ++c) pr[c] = static_cast<T>(pr[c] / total);
      out.value[r] = static_cast<T>(std::log(total) + hi - zr[labels[r]]);
    }
    const int io = out_id();
    on_backward([this, ia, io, rows, cols, probs = std::move(probs),
                 labels = std::move(labels)] {
      const T* g = grad(io);
      T* gz = grad(ia);
      for (int r = 0; r < rows; ++r) {
        const T* pr = probs.data() + static_cast<std::int64_t>(r) * cols;
        T* gr = gz + static_cast<std::int64_t>(r) * cols;
        for (int c = 0; c < cols; ++c) gr[c] += g[r] * pr[c];
        gr[labels[r]] -= g[r];
      }
    });
    return last();
  }

  // Elementwise f with caller-supplied derivative df(x, f(x)).
  template <typename F, typename DF>
  V map(V a, F f, DF df) {
    return unary_impl(a, std::move(f), std::move(df));
  }

  // Records an op whose forward value the caller already computed.
  // `backward_fn(g, input_grads)` receives the output adjoint and one
  // adjoint buffer per input (nullptr where no gradient is needed).
  template <typename B>
  V custom(Shape shape, std::vector<T> value, std::vector<V> inputs,
           B backward_fn) {
    if (static_cast<std::int64_t>(value.size()) != shape.size()) {
      throw ShapeError("custom op of shape " + shape.str() + " given " +
                       std::to_string(value.size()) + " values");
    }
    bool any_req = false;
    std::vector<int> ids;
    for (const V& v : inputs) {
      any_req |= req(v.id());
      ids.push_back(v.id());
    }
    Node& out = push(shape, any_req);
    out.value = std::move(value);
    const int io = out_id();
    on_backward([this, io, ids = std::move(ids), fn = std::move(backward_fn)] {
      std::vector<T*> grads(ids.size(), nullptr);
      for (size_t i = 0; i < ids.size(); ++i) {
        if (req(ids[i])) grads[i] = grad(ids[i]);
      }
      fn(static_cast<const T*>(grad(io)), grads);
    });
    return last();
  }

  // ---- reverse pass ------------------------------------------------------

  // Propagates d(loss)/d(.) to every recorded value. One call per tape.
  void backward(V loss) {
    if (backward_done_) {
      throw NumericError("backward() already ran on this tape; "
                         "double backward is unsupported");
    }
    if (shape(loss).size() != 1) {
      throw ShapeError("backward() needs a scalar loss, got " +
                       shape(loss).str());
    }
    backward_done_ = true;
    if (!req(loss.id())) return;
    grad(loss.id())[0] += T(1);
    for (int i = loss.id(); i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.backward && n.requires_grad && n.touched) n.backward();
    }
  }

 private:
  enum class Broadcast { kNone, kRow, kCol };

  struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;
    const T* external_value = nullptr;
    T* external_grad = nullptr;
    bool requires_grad = false;
    bool touched = false;  // some adjoint reached this node
    std::function<void()> backward;
  };

  Node& push(Shape shape, bool requires_grad) {
    if (backward_done_) {
      throw NumericError("cannot record onto a tape after backward()");
    }
    nodes_.emplace_back();
    Node& n = nodes_.back();
    n.shape = shape;
    n.requires_grad = requires_grad;
    return n;
  }
  V last() { return V(this, out_id()); }
  int out_id() const { return static_cast<int>(nodes_.size()) - 1; }
  void on_backward(std::function<void()> fn) {
    if (nodes_.back().requires_grad) nodes_.back().backward = std::move(fn);
  }

  bool req(int id) const { return nodes_[id].requires_grad; }
  const T* val(int id) const {
    const Node& n = nodes_[id];
    return n.external_value ? n.external_value : n.value.data();
  }
  T* grad(int id) {
    Node& n = nodes_[id];
    n.touched = true;
    if (n.external_grad) return n.external_grad;
    if (n.grad.empty()) n.grad.assign(n.shape.size(), T(0));
    return n.grad.data();
  }

  static int normalize_axis(const Shape& s, int axis) {
    const int rank = std::max(s.rank(), 1);
    if (axis < 0) axis += rank;
    if (axis < 0 || axis >= rank || s.rank() == 0) {
      throw ShapeError("axis " + std::to_string(axis) + " invalid for " +
                       s.str());
    }
    return axis;
  }

  Broadcast broadcast_mode(V a, V b, const char* op, bool allow_col) const {
    const Shape sa = shape(a), sb = shape(b);
    if (sa.size() == sb.size() && (sa == sb || sb.rank() <= 1 ||
                                   sa.rank() <= 1)) {
      return Broadcast::kNone;
    }
    if (sb.size() == sa.cols() && sb.rows() == 1) return Broadcast::kRow;
    if (allow_col && sb.cols() == 1 && sb.rows() == sa.rows()) {
      return Broadcast::kCol;
    }
    throw ShapeError(std::string(op) + " shape mismatch: " + sa.str() +
                     " and " + sb.str());
  }

  static int bindex(Broadcast mode, int r, int c, int cols) {
    switch (mode) {
      case Broadcast::kNone: return r * cols + c;
      case Broadcast::kRow: return c;
      case Broadcast::kCol: return r;
    }
    return 0;
  }

  template <typename F, typename DF>
  V unary_impl(V a, F f, DF df) {
    const int ia = a.id();
    const Shape s = shape(a);
    Node& out = push(s, req(ia));
    out.value.resize(s.size());
    const T* x = val(ia);
    for (std::int64_t i = 0; i < s.size(); ++i) out.value[i] = f(x[i]);
    const int io = out_id();
    on_backward([this, ia, io, n = s.size(), df] {
      const T* x = val(ia);
      const T* y = val(io);
      const T* g = grad(io);
      T* gx = grad(ia);
      for (std::int64_t i = 0; i < n; ++i) gx[i] += g[i] * df(x[i], y[i]);
    });
    return last();
  }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// ---- free-function spelling --------------------------------------------

template <typename T> Var<T> matmul(Var<T> a, Var<T> b) { return a.tape().matmul(a, b); }
template <typename T> Var<T> operator+(Var<T> a, Var<T> b) { return a.tape().add(a, b); }
template <typename T> Var<T> operator*(Var<T> a, Var<T> b) { return a.tape().mul(a, b); }
template <typename T> Var<T> sigmoid(Var<T> a) { return a.tape().sigmoid(a); }
template <typename T> Var<T> tanh(Var<T> a) { return a.tape().tanh(a); }
template <typename T> Var<T> log(Var<T> a) { return a.tape().log(a); }
template <typename T> Var<T> softmax(Var<T> a, int axis = -1) { return a.tape().softmax(a, axis); }
template <typename T> Var<T> sum(Var<T> a) { return a.tape().sum(a); }
template <typename T> Var<T> sum(Var<T> a, int axis) { return a.tape().sum(a, axis); }
template <typename T> Var<T> slice(Var<T> a, int axis, int begin, int end) {
  return a.tape().slice(a, axis, begin, end);
}

}  // namespace ipagnn::ad
