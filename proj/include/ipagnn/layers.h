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
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ipagnn/autodiff.h"
#include "ipagnn/errors.h"
#include "ipagnn/interp.h"
#include "ipagnn/params.h"
#include "ipagnn/program.h"
#include "ipagnn/rng.h"

namespace ipagnn {

// Width of each of the four token embeddings for hidden size H.
inline int embed_width(int hidden) { return (hidden + 3) / 4; }

namespace init {

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
template <typename T>
std::vector<T> scaled_uniform(Rng& rng, std::int64_t count, int fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<T> v(count);
  for (auto& x : v) x = static_cast<T>((2.0 * rng.uniform_real() - 1.0) * bound);
  return v;
}

template <typename T>
void weight(ParameterStore<T>& s, const std::string& name, int in, int out,
            Rng& rng) {
  s.add(name, ad::Shape{in, out},
        scaled_uniform<T>(rng, static_cast<std::int64_t>(in) * out, in));
}

template <typename T>
void bias(ParameterStore<T>& s, const std::string& name, int width,
          T fill = T(0)) {
  s.add(name, ad::Shape{width}, std::vector<T>(width, fill));
}

}  // namespace init

// ---------------------------------------------------------------------------
// Parameter groups. Each `add_*` registers a group under fixed names; models
// that share a group share those names, so checkpoints transfer by name.

template <typename T>
void add_embedding(ParameterStore<T>& s, int hidden, Rng& rng) {
  const int e = embed_width(hidden);
  s.add("embed.indent", ad::Shape{vocab::kIndentSize, e},
        init::scaled_uniform<T>(rng, vocab::kIndentSize * e, 1));
  s.add("embed.op", ad::Shape{vocab::kOpSize, e},
        init::scaled_uniform<T>(rng, vocab::kOpSize * e, 1));
  s.add("embed.var", ad::Shape{vocab::kVarSize, e},
        init::scaled_uniform<T>(rng, vocab::kVarSize * e, 1));
  s.add("embed.operand", ad::Shape{vocab::kOperandSize, e},
        init::scaled_uniform<T>(rng, vocab::kOperandSize * e, 1));
  init::weight(s, "embed.proj.W", 4 * e, hidden, rng);
  init::bias(s, "embed.proj.b", hidden);
}

// Two stacked LSTM cells; gate blocks are ordered (input, forget, cell,
// output) along the 4H axis.
template <typename T>
void add_lstm(ParameterStore<T>& s, int hidden, Rng& rng) {
  for (const char* layer : {"lstm.l1", "lstm.l2"}) {
    const std::string p = layer;
    init::weight(s, p + ".Wx", hidden, 4 * hidden, rng);
    init::weight(s, p + ".Wh", hidden, 4 * hidden, rng);
    std::vector<T> b(4 * hidden, T(0));
    std::fill(b.begin() + hidden, b.begin() + 2 * hidden, T(1));
    s.add(p + ".b", ad::Shape{4 * hidden}, std::move(b));
  }
}

template <typename T>
void add_dense(ParameterStore<T>& s, const std::string& prefix, int in,
               int out, Rng& rng) {
  init::weight(s, prefix + ".W", in, out, rng);
  init::bias(s, prefix + ".b", out);
}

// GRU with update gate z, reset gate r and candidate c:
//   z = sigmoid(m Wm_z + h U_z + b_z)
//   r = sigmoid(m Wm_r + h U_r + b_r)
//   c = tanh(m Wm_c + (r * h) U_c + b_c)
//   h' = z * h + (1 - z) * c
template <typename T>
void add_gru(ParameterStore<T>& s, int hidden, Rng& rng) {
  init::weight(s, "gru.Wm", hidden, 3 * hidden, rng);
  init::weight(s, "gru.Uzr", hidden, 2 * hidden, rng);
  init::weight(s, "gru.Uc", hidden, hidden, rng);
  init::bias(s, "gru.b", 3 * hidden);
}

template <typename T>
void add_head(ParameterStore<T>& s, int hidden, Rng& rng) {
  add_dense(s, "head", hidden, kNumClasses, rng);
}

inline std::int64_t embedding_parameter_count(int h) {
  const std::int64_t e = embed_width(h);
  return (vocab::kIndentSize + vocab::kOpSize + vocab::kVarSize +
          vocab::kOperandSize) * e + 4 * e * h + h;
}
inline std::int64_t lstm_parameter_count(int h) {
  return 2 * (2 * std::int64_t{h} * 4 * h + 4 * h);
}
inline std::int64_t dense_parameter_count(int in, int out) {
  return std::int64_t{in} * out + out;
}
inline std::int64_t gru_parameter_count(int h) {
  return std::int64_t{h} * 3 * h + std::int64_t{h} * 2 * h +
         std::int64_t{h} * h + 3 * h;
}

// ---------------------------------------------------------------------------
// Forward building blocks.

template <typename T>
ad::Var<T> dense(ad::Tape<T>& t, ParameterStore<T>& s,
                 const std::string& prefix, ad::Var<T> x) {
  return t.add(t.matmul(x, t.parameter(s.get(prefix + ".W"))),
               t.parameter(s.get(prefix + ".b")));
}

// Rows are statements; result is [rows, H].
template <typename T>
ad::Var<T> embed_statements(ad::Tape<T>& t, ParameterStore<T>& s,
                            std::span<const StatementTuple> tuples) {
  std::vector<int> indent, op, var, operand;
  for (const StatementTuple& x : tuples) {
    if (x.indent < 0 || x.indent >= vocab::kIndentSize || x.op < 0 ||
        x.op >= vocab::kOpSize || x.var < 0 || x.var >= vocab::kVarSize ||
        x.operand < 0 || x.operand >= vocab::kOperandSize) {
      throw SchemaError("tokens", "token outside the vocabulary: (" +
                                      std::to_string(x.indent) + ", " +
                                      std::to_string(x.op) + ", " +
                                      std::to_string(x.var) + ", " +
                                      std::to_string(x.operand) + ")");
    }
    indent.push_back(x.indent);
    op.push_back(x.op);
    var.push_back(x.var);
    operand.push_back(x.operand);
  }
  const ad::Var<T> parts[] = {
      t.row_gather(t.parameter(s.get("embed.indent")), std::move(indent)),
      t.row_gather(t.parameter(s.get("embed.op")), std::move(op)),
      t.row_gather(t.parameter(s.get("embed.var")), std::move(var)),
      t.row_gather(t.parameter(s.get("embed.operand")), std::move(operand)),
  };
  return dense(t, s, "embed.proj", t.concat(std::span(parts), 1));
}

namespace detail {

template <typename T>
T stable_sigmoid(T x) {
  if (x >= 0) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace detail

// Pointwise LSTM cell. z: [n, 4H] pre-activations, c: [n, H] previous cell.
// Returns [n, 2H] = [h' | c'].
template <typename T>
ad::Var<T> lstm_cell(ad::Tape<T>& t, ad::Var<T> z, ad::Var<T> c) {
  const int n = z.shape().rows(), h4 = z.shape().cols(), h = h4 / 4;
  if (h4 != 4 * h || c.shape().rows() != n || c.shape().cols() != h) {
    throw ShapeError("lstm_cell width mismatch: " + z.shape().str() +
                     " and " + c.shape().str());
  }
  std::vector<T> out(static_cast<size_t>(n) * 2 * h);
  const T* zv = z.value().data();
  const T* cv = c.value().data();
  for (int r = 0; r < n; ++r) {
    const T* zr = zv + static_cast<std::int64_t>(r) * h4;
    T* o = out.data() + static_cast<std::int64_t>(r) * 2 * h;
    for (int k = 0; k < h; ++k) {
      const T ig = detail::stable_sigmoid(zr[k]);
      const T fg = detail::stable_sigmoid(zr[h + k]);
      const T gg = std::tanh(zr[2 * h + k]);
      const T og = detail::stable_sigmoid(zr[3 * h + k]);
      const T cn = fg * cv[static_cast<std::int64_t>(r) * h + k] + ig * gg;
      o[h + k] = cn;
      o[k] = og * std::tanh(cn);
    }
  }
  return t.custom(
      ad::Shape{n, 2 * h}, std::move(out), {z, c},
      [z, c, n, h](const T* g, std::span<T*> grads) {
        const T* zv = z.value().data();
        const T* cv = c.value().data();
        T* gz = grads[0];
        T* gc = grads[1];
        for (int r = 0; r < n; ++r) {
          const T* zr = zv + static_cast<std::int64_t>(r) * 4 * h;
          const T* gr = g + static_cast<std::int64_t>(r) * 2 * h;
          for (int k = 0; k < h; ++k) {
            const std::int64_t ci = static_cast<std::int64_t>(r) * h + k;
            const T ig = detail::stable_sigmoid(zr[k]);
            const T fg = detail::stable_sigmoid(zr[h + k]);
            const T gg = std::tanh(zr[2 * h + k]);
            const T og = detail::stable_sigmoid(zr[3 * h + k]);
            const T cn = fg * cv[ci] + ig * gg;
            const T tc = std::tanh(cn);
            const T dc = gr[h + k] + gr[k] * og * (T(1) - tc * tc);
            if (gz) {
              T* gzr = gz + static_cast<std::int64_t>(r) * 4 * h;
              gzr[k] += dc * gg * ig * (T(1) - ig);
              gzr[h + k] += dc * cv[ci] * fg * (T(1) - fg);
              gzr[2 * h + k] += dc * ig * (T(1) - gg * gg);
              gzr[3 * h + k] += gr[k] * tc * og * (T(1) - og);
            }
            if (gc) gc[ci] += dc * fg;
          }
        }
      });
}

// Input-side pre-activations of the first LSTM layer: x Wx + b. Computed
// once per statement and reused every step.
template <typename T>
ad::Var<T> lstm_input(ad::Tape<T>& t, ParameterStore<T>& s, ad::Var<T> x) {
  return t.add(t.matmul(x, t.parameter(s.get("lstm.l1.Wx"))),
               t.parameter(s.get("lstm.l1.b")));
}

// One step of the stacked LSTM. `state` is [n, 4H] laid out as
// [h1 | c1 | h2 | c2]; `input` is the matching rows of lstm_input().
// Returns the new state in the same layout; the output is its h2 block.
template <typename T>
ad::Var<T> lstm_step(ad::Tape<T>& t, ParameterStore<T>& s, ad::Var<T> state,
                     ad::Var<T> input) {
  const int h = state.shape().cols() / 4;
  if (state.shape().cols() != 4 * h || input.shape().cols() != 4 * h ||
      input.shape().rows() != state.shape().rows()) {
    throw ShapeError("lstm_step width mismatch: state " +
                     state.shape().str() + ", input " + input.shape().str());
  }
  const auto h1 = t.slice(state, 1, 0, h);
  const auto c1 = t.slice(state, 1, h, 2 * h);
  const auto h2 = t.slice(state, 1, 2 * h, 3 * h);
  const auto c2 = t.slice(state, 1, 3 * h, 4 * h);
  const auto z1 = t.add(input, t.matmul(h1, t.parameter(s.get("lstm.l1.Wh"))));
  const auto hc1 = lstm_cell(t, z1, c1);
  const auto z2 = t.add(
      t.add(t.matmul(t.slice(hc1, 1, 0, h), t.parameter(s.get("lstm.l2.Wx"))),
            t.matmul(h2, t.parameter(s.get("lstm.l2.Wh")))),
      t.parameter(s.get("lstm.l2.b")));
  const auto hc2 = lstm_cell(t, z2, c2);
  return t.concat({hc1, hc2}, 1);
}

template <typename T>
ad::Var<T> lstm_output(ad::Tape<T>& t, ad::Var<T> state) {
  const int h = state.shape().cols() / 4;
  return t.slice(state, 1, 2 * h, 3 * h);
}

// h, m: [n, H].
template <typename T>
ad::Var<T> gated_update(ad::Tape<T>& t, ParameterStore<T>& s, ad::Var<T> h,
                        ad::Var<T> m) {
  const int w = h.shape().cols();
  if (!(m.shape() == h.shape())) {
    throw ShapeError("gated_update width mismatch: " + h.shape().str() +
                     " and " + m.shape().str());
  }
  const auto zm = t.add(t.matmul(m, t.parameter(s.get("gru.Wm"))),
                        t.parameter(s.get("gru.b")));
  const auto zh = t.matmul(h, t.parameter(s.get("gru.Uzr")));
  const auto z = t.sigmoid(t.add(t.slice(zm, 1, 0, w), t.slice(zh, 1, 0, w)));
  const auto r =
      t.sigmoid(t.add(t.slice(zm, 1, w, 2 * w), t.slice(zh, 1, w, 2 * w)));
  const auto c = t.tanh(t.add(t.slice(zm, 1, 2 * w, 3 * w),
                              t.matmul(t.mul(r, h),
                                       t.parameter(s.get("gru.Uc")))));
  // z * h + (1 - z) * c == c + z * (h - c)
  return t.add(c, t.mul(z, t.add(h, t.scale(c, T(-1)))));
}

template <typename T>
ad::Var<T> output_head(ad::Tape<T>& t, ParameterStore<T>& s, ad::Var<T> h) {
  return dense(t, s, "head", h);
}

// Mean over rows of -log softmax(logits)[label].
template <typename T>
ad::Var<T> xent_loss(ad::Tape<T>& t, ad::Var<T> logits,
                     std::vector<int> labels) {
  for (int y : labels) {
    if (y < 0 || y >= kNumClasses) {
      throw SchemaError("target", "label " + std::to_string(y) +
                                      " outside 0.." +
                                      std::to_string(kNumClasses - 1));
    }
  }
  const int rows = logits.shape().rows();
  return t.scale(t.sum(t.softmax_cross_entropy(logits, std::move(labels))),
                 T(1) / T(rows));
}

// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over every parameter of a store, in store order.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  const AdamConfig& config() const { return config_; }
  std::int64_t steps() const { return step_; }
  const std::vector<std::vector<T>>& first_moments() const { return m_; }
  const std::vector<std::vector<T>>& second_moments() const { return v_; }

  void step(ParameterStore<T>& store) {
    auto& params = store.all();
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p.value.size(), T(0));
        v_.emplace_back(p.value.size(), T(0));
      }
    }
    if (m_.size() != params.size()) {
      throw ShapeError("optimizer tracks " + std::to_string(m_.size()) +
                       " parameters, store has " +
                       std::to_string(params.size()));
    }
    for (size_t i = 0; i < params.size(); ++i) {
      const auto& p = params[i];
      if (p.grad.size() != p.value.size() || m_[i].size() != p.value.size()) {
        throw ShapeError("gradient/moment shape mismatch for parameter '" +
                         p.name + "'");
      }
      for (T g : p.grad) {
        if (!std::isfinite(static_cast<double>(g))) {
          throw NumericError("non-finite gradient in parameter '" + p.name +
                             "'");
        }
      }
    }
    ++step_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const T lr_t = static_cast<T>(config_.lr);
    const T c1 = static_cast<T>(1.0 - std::pow(b1, static_cast<double>(step_)));
    const T c2 = static_cast<T>(1.0 - std::pow(b2, static_cast<double>(step_)));
    const T eps = static_cast<T>(config_.eps);
    for (size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i];
      T* m = m_[i].data();
      T* v = v_[i].data();
      for (size_t k = 0; k < p.value.size(); ++k) {
        const T g = p.grad[k];
        m[k] = static_cast<T>(b1) * m[k] + static_cast<T>(1 - b1) * g;
        v[k] = static_cast<T>(b2) * v[k] + static_cast<T>(1 - b2) * g * g;
        p.value[k] -= lr_t * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
      }
    }
  }

  // Saves moments as "adam.m/<name>" and "adam.v/<name>" plus the step
  // counter in the metadata.
  void append_to(Checkpoint& ckpt, const ParameterStore<T>& store) const {
    ckpt.metadata["adam.step"] = std::to_string(step_);
    if (m_.empty()) return;
    const auto& params = store.all();
    for (size_t i = 0; i < params.size(); ++i) {
      ckpt.entries.push_back({"adam.m/" + params[i].name, params[i].shape,
                              {m_[i].begin(), m_[i].end()}});
      ckpt.entries.push_back({"adam.v/" + params[i].name, params[i].shape,
                              {v_[i].begin(), v_[i].end()}});
    }
  }

  void load_from(const Checkpoint& ckpt, const ParameterStore<T>& store) {
    auto it = ckpt.metadata.find("adam.step");
    step_ = it == ckpt.metadata.end() ? 0 : std::stoll(it->second);
    m_.clear();
    v_.clear();
    if (step_ == 0) return;
    for (const auto& p : store.all()) {
      m_.push_back(find(ckpt, "adam.m/" + p.name, p));
      v_.push_back(find(ckpt, "adam.v/" + p.name, p));
    }
  }

 private:
  static std::vector<T> find(const Checkpoint& ckpt, const std::string& name,
                             const ad::Parameter<T>& p) {
    const Checkpoint::Entry* e = ckpt.find(name);
    if (!e) throw SchemaError(name, "optimizer state missing from checkpoint");
    if (!(e->shape == p.shape)) {
      throw ShapeError("optimizer state '" + name + "' has shape " +
                       e->shape.str() + ", expected " + p.shape.str());
    }
    return {e->values.begin(), e->values.end()};
  }

  AdamConfig config_;
  std::int64_t step_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

}  // namespace ipagnn
