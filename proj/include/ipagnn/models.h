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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ipagnn/autodiff.h"
#include "ipagnn/cfg.h"
#include "ipagnn/errors.h"
#include "ipagnn/example.h"
#include "ipagnn/layers.h"
#include "ipagnn/params.h"
#include "ipagnn/rng.h"

namespace ipagnn {

enum class ModelKind {
  kIpagnn,
  kLine,
  kTrace,
  kHardIp,
  kGgnn,
  kNoControl,
  kNoExecute,
};

inline constexpr ModelKind kAllModels[] = {
    ModelKind::kIpagnn, ModelKind::kLine,      ModelKind::kTrace,
    ModelKind::kHardIp, ModelKind::kGgnn,      ModelKind::kNoControl,
    ModelKind::kNoExecute};

inline std::string_view model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kIpagnn: return "ipagnn";
    case ModelKind::kLine: return "line";
    case ModelKind::kTrace: return "trace";
    case ModelKind::kHardIp: return "hardip";
    case ModelKind::kGgnn: return "ggnn";
    case ModelKind::kNoControl: return "nocontrol";
    case ModelKind::kNoExecute: return "noexecute";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view name) {
  for (ModelKind k : kAllModels) {
    if (model_name(k) == name) return k;
  }
  throw UsageError("unknown model '" + std::string(name) +
                   "' (expected ipagnn, line, trace, hardip, ggnn, "
                   "nocontrol or noexecute)");
}

inline bool reads_trace(ModelKind kind) { return kind == ModelKind::kTrace; }

// Models whose state is steered by a soft instruction pointer.
inline bool has_pointer(ModelKind kind) {
  return kind == ModelKind::kIpagnn || kind == ModelKind::kNoExecute;
}

// Parameter groups in registration order. Groups with equal names have
// equal shapes across models, except edge.* (H-wide for ggnn/noexecute,
// 4H-wide for nocontrol).
inline std::vector<std::string> parameter_groups(ModelKind kind) {
  switch (kind) {
    case ModelKind::kIpagnn:
    case ModelKind::kHardIp:
      return {"embed", "lstm", "branch", "head"};
    case ModelKind::kLine:
    case ModelKind::kTrace:
      return {"embed", "lstm", "head"};
    case ModelKind::kGgnn:
      return {"embed", "edge.tf", "edge.ff", "edge.tr", "edge.fr", "gru",
              "head"};
    case ModelKind::kNoControl:
      return {"embed", "lstm", "edge.tf", "edge.ff", "edge.tr", "edge.fr",
              "head"};
    case ModelKind::kNoExecute:
      return {"embed", "edge.tf", "edge.ff", "branch", "gru", "head"};
  }
  return {};
}

inline std::uint64_t group_stream(std::string_view group) {
  if (group == "embed") return 1;
  if (group == "lstm") return 2;
  if (group == "branch") return 3;
  if (group == "gru") return 5;
  if (group == "head") return 6;
  if (group == "edge.tf") return 10;
  if (group == "edge.ff") return 11;
  if (group == "edge.tr") return 12;
  return 13;  // edge.fr
}

// Every group draws from its own stream of `seed`, so models built with the
// same seed start from identical shared weights.
template <typename T>
ParameterStore<T> make_parameters(ModelKind kind, int hidden,
                                  std::uint64_t seed) {
  if (hidden < 1) throw UsageError("hidden size must be positive");
  const int edge_width = kind == ModelKind::kNoControl ? 4 * hidden : hidden;
  ParameterStore<T> s;
  for (const std::string& g : parameter_groups(kind)) {
    Rng rng = Rng::derive(seed, group_stream(g));
    if (g == "embed") {
      add_embedding(s, hidden, rng);
    } else if (g == "lstm") {
      add_lstm(s, hidden, rng);
    } else if (g == "branch") {
      add_dense(s, "branch", hidden, 2, rng);
    } else if (g == "gru") {
      add_gru(s, hidden, rng);
    } else if (g == "head") {
      add_head(s, hidden, rng);
    } else {
      add_dense(s, g, edge_width, edge_width, rng);
    }
  }
  return s;
}

inline std::int64_t expected_parameter_count(ModelKind kind, int h) {
  std::int64_t n = embedding_parameter_count(h) +
                   dense_parameter_count(h, kNumClasses);
  switch (kind) {
    case ModelKind::kIpagnn:
    case ModelKind::kHardIp:
      return n + lstm_parameter_count(h) + dense_parameter_count(h, 2);
    case ModelKind::kLine:
    case ModelKind::kTrace:
      return n + lstm_parameter_count(h);
    case ModelKind::kGgnn:
      return n + 4 * dense_parameter_count(h, h) + gru_parameter_count(h);
    case ModelKind::kNoControl:
      return n + lstm_parameter_count(h) +
             4 * dense_parameter_count(4 * h, 4 * h);
    case ModelKind::kNoExecute:
      return n + 2 * dense_parameter_count(h, h) +
             dense_parameter_count(h, 2) + gru_parameter_count(h);
  }
  return n;
}

// ---------------------------------------------------------------------------
// Packed batch: the programs of a batch form one block-diagonal graph.
// Examples are ordered by step budget, longest first, so the examples still
// running at step t are always a prefix and so are their node rows and
// edges.

struct GraphBatch {
  std::vector<const Example*> examples;  // batch position order
  std::vector<int> order;                // position -> caller's index
  std::vector<int> node_offset;          // size B + 1
  std::vector<int> edge_offset;          // forward edges, size B + 1
  std::vector<int> typed_offset;         // forward + reverse, size B + 1
  std::vector<StatementTuple> tokens;    // one row per node

  // Forward CFG edges. slot: 0 true/fallthrough of a branch, 1 false of a
  // branch, 2 sole successor.
  std::vector<int> src, dst, slot;
  // Forward then reverse edges, per example, with EdgeType codes.
  std::vector<int> typed_src, typed_dst, typed_type;

  std::vector<int> exit_row;
  std::vector<int> steps;
  std::vector<int> labels;
  std::vector<std::vector<int>> traces;  // only when requested

  int size() const { return static_cast<int>(examples.size()); }
  int node_count() const { return node_offset.back(); }
  int max_steps() const { return steps.empty() ? 0 : steps.front(); }
  // Examples with at least t steps.
  int active(int t) const {
    return static_cast<int>(
        std::partition_point(steps.begin(), steps.end(),
                             [t](int s) { return s >= t; }) -
        steps.begin());
  }
};

inline GraphBatch make_batch(std::span<const Example* const> examples,
                             bool with_traces = false) {
  GraphBatch b;
  std::vector<int> idx(examples.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int x, int y) {
    return examples[x]->step_budget > examples[y]->step_budget;
  });
  b.node_offset.push_back(0);
  b.edge_offset.push_back(0);
  b.typed_offset.push_back(0);
  for (int i : idx) {
    const Example& e = *examples[i];
    if (e.node_count() < 2 ||
        static_cast<int>(e.successors.size()) != e.node_count()) {
      throw SchemaError("successors", "example " + e.id +
                                          " has an inconsistent graph");
    }
    const int base = b.node_offset.back();
    b.examples.push_back(&e);
    b.order.push_back(i);
    for (const auto& t : e.tokens) b.tokens.push_back(t);
    const size_t first_edge = b.src.size();
    for (int n = 0; n < e.node_count(); ++n) {
      const auto& out = e.successors[n];
      for (size_t k = 0; k < out.size(); ++k) {
        b.src.push_back(base + n);
        b.dst.push_back(base + out[k]);
        b.slot.push_back(out.size() == 1 ? 2 : static_cast<int>(k));
      }
    }
    for (int pass = 0; pass < 2; ++pass) {
      for (size_t k = first_edge; k < b.src.size(); ++k) {
        const int label = b.slot[k] == 1 ? 1 : 0;
        b.typed_src.push_back(pass == 0 ? b.src[k] : b.dst[k]);
        b.typed_dst.push_back(pass == 0 ? b.dst[k] : b.src[k]);
        b.typed_type.push_back(label + 2 * pass);
      }
    }
    b.node_offset.push_back(base + e.node_count());
    b.edge_offset.push_back(static_cast<int>(b.src.size()));
    b.typed_offset.push_back(static_cast<int>(b.typed_src.size()));
    b.exit_row.push_back(base + e.exit_index());
    b.steps.push_back(e.step_budget);
    b.labels.push_back(e.target);
    if (with_traces) b.traces.push_back(e.trace());
  }
  return b;
}

inline GraphBatch make_batch(const std::vector<Example>& examples,
                             bool with_traces = false) {
  std::vector<const Example*> ptrs;
  for (const auto& e : examples) ptrs.push_back(&e);
  return make_batch(std::span<const Example* const>(ptrs), with_traces);
}

// ---------------------------------------------------------------------------

struct ForwardOptions {
  bool record = false;           // keep per-step pointer/state values
  bool oracle_branches = false;  // Hard IP-RNN follows the recorded trace
};

template <typename T>
struct ForwardResult {
  ad::Var<T> logits;  // [B, 1000], batch position order
  // With `record`: entry t holds the values after step t (t = 0 is the
  // initial state), over the rows still active at t.
  std::vector<std::vector<T>> pointer;  // p[t, n]
  std::vector<std::vector<T>> states;   // per-node or per-thread state
  std::vector<std::vector<int>> path;   // Hard IP-RNN node ids per example
};

namespace detail {

template <typename T>
class Runner {
 public:
  using V = ad::Var<T>;

  Runner(ad::Tape<T>& t, ParameterStore<T>& s, const GraphBatch& b,
         const ForwardOptions& o)
      : t_(t), s_(s), b_(b), o_(o), readout_(b.size()) {}

  ForwardResult<T> run(ModelKind kind) {
    switch (kind) {
      case ModelKind::kIpagnn: ipagnn(); break;
      case ModelKind::kLine: sequence(false); break;
      case ModelKind::kTrace: sequence(true); break;
      case ModelKind::kHardIp: hard(); break;
      case ModelKind::kGgnn: ggnn(); break;
      case ModelKind::kNoControl: nocontrol(); break;
      case ModelKind::kNoExecute: noexecute(); break;
    }
    V h = t_.concat(std::span<const V>(readout_), 0);
    result_.logits = output_head(t_, s_, h);
    return std::move(result_);
  }

 private:
  int hidden() const { return s_.get("embed.proj.b").shape.size(); }

  V embedded() { return embed_statements(t_, s_, b_.tokens); }

  // Row block [0, rows) of `v`, or `v` itself when already that size.
  V prefix(V v, int rows) {
    return v.shape().rows() == rows ? v : t_.slice(v, 0, 0, rows);
  }

  V one_hot_pointer() {
    std::vector<T> p(b_.node_count(), T(0));
    for (int e = 0; e < b_.size(); ++e) p[b_.node_offset[e]] = T(1);
    return t_.constant(ad::Shape{b_.node_count(), 1}, std::move(p));
  }

  // Reads out examples whose budget ends at step t from per-node rows of
  // `state`, taking columns [c0, c1).
  void read_exits(int t, V state, int c0, int c1) {
    std::vector<int> rows, who;
    for (int e = b_.active(t + 1); e < b_.active(t); ++e) {
      rows.push_back(b_.exit_row[e]);
      who.push_back(e);
    }
    if (rows.empty()) return;
    V picked = t_.row_gather(state, rows);
    if (c0 != 0 || c1 != picked.shape().cols()) {
      picked = t_.slice(picked, 1, c0, c1);
    }
    for (size_t i = 0; i < who.size(); ++i) {
      readout_[who[i]] = t_.slice(picked, 0, static_cast<int>(i),
                                  static_cast<int>(i) + 1);
    }
  }

  void check_finite(V v, int t, std::span<const int> row_owner = {}) {
    const auto vals = v.value();
    const int cols = v.shape().cols();
    for (size_t i = 0; i < vals.size(); ++i) {
      if (!std::isfinite(static_cast<double>(vals[i]))) {
        const int row = static_cast<int>(i) / cols;
        std::string where;
        if (row_owner.empty()) {
          const int e = static_cast<int>(
              std::upper_bound(b_.node_offset.begin(), b_.node_offset.end(),
                               row) -
              b_.node_offset.begin()) - 1;
          where = "node " + std::to_string(row - b_.node_offset[e]) +
                  " of example " + b_.examples[e]->id;
        } else {
          where = "example " + b_.examples[row_owner[row]]->id;
        }
        throw NumericError("non-finite state at step " + std::to_string(t) +
                           ", " + where);
      }
    }
  }

  void record(V pointer, V state) {
    if (!o_.record) return;
    if (pointer.valid()) {
      result_.pointer.emplace_back(pointer.value().begin(),
                                   pointer.value().end());
    }
    result_.states.emplace_back(state.value().begin(), state.value().end());
  }

  // Soft-pointer edge weights p[src] * b[src, slot] for the first `m`
  // forward edges; `branch_logits` is [n, 2].
  V edge_weights(V pointer, V branch_logits, int n, int m) {
    V b = t_.softmax(branch_logits, 1);
    V bb = t_.concat({b, t_.constant(ad::Shape{n, 1},
                                     std::vector<T>(n, T(1)))},
                     1);
    V pb = t_.mul(bb, pointer);  // column broadcast
    std::vector<int> pick(m);
    for (int k = 0; k < m; ++k) pick[k] = b_.src[k] * 3 + b_.slot[k];
    return t_.row_gather(t_.reshape(pb, ad::Shape{3 * n, 1}), std::move(pick));
  }

  std::vector<int> first(const std::vector<int>& v, int m) {
    return {v.begin(), v.begin() + m};
  }

  // Dense message per typed edge: gathers row `src * types + type` from
  // `per_type`, which is [n, types * width].
  V typed_messages(V per_type, int types, const std::vector<int>& src,
                   const std::vector<int>& type, int m) {
    const int n = per_type.shape().rows();
    const int width = per_type.shape().cols() / types;
    std::vector<int> pick(m);
    for (int k = 0; k < m; ++k) pick[k] = src[k] * types + type[k];
    return t_.row_gather(t_.reshape(per_type, ad::Shape{n * types, width}),
                         std::move(pick));
  }

  V concat_params(std::initializer_list<const char*> names, const char* field,
                  int axis) {
    std::vector<V> parts;
    for (const char* n : names) {
      parts.push_back(t_.parameter(s_.get(std::string(n) + "." + field)));
    }
    if (axis == 1 && parts[0].shape().rank() == 1) {
      return t_.concat(std::span<const V>(parts), 0);
    }
    return t_.concat(std::span<const V>(parts), axis);
  }

  // ---- models -------------------------------------------------------------

  void ipagnn() {
    const int h = hidden();
    V x = lstm_input(t_, s_, embedded());
    V state = t_.zeros(ad::Shape{b_.node_count(), 4 * h});
    V p = one_hot_pointer();
    record(p, state);
    read_exits(0, state, 2 * h, 3 * h);
    for (int t = 1; t <= b_.max_steps(); ++t) {
      const int k = b_.active(t);
      const int n = b_.node_offset[k], m = b_.edge_offset[k];
      state = prefix(state, n);
      p = prefix(p, n);
      x = prefix(x, n);
      V a = lstm_step(t_, s_, state, x);
      V w = edge_weights(p, dense(t_, s_, "branch", lstm_output(t_, a)), n, m);
      V msgs = t_.mul(t_.row_gather(a, first(b_.src, m)), w);
      state = t_.row_scatter_add(msgs, first(b_.dst, m), n);
      p = t_.row_scatter_add(w, first(b_.dst, m), n);
      check_finite(state, t);
      record(p, state);
      read_exits(t, state, 2 * h, 3 * h);
    }
  }

  void noexecute() {
    const int h = hidden();
    V state = embedded();
    V p = one_hot_pointer();
    V w_msg = concat_params({"edge.tf", "edge.ff"}, "W", 1);
    V b_msg = concat_params({"edge.tf", "edge.ff"}, "b", 1);
    std::vector<int> type(b_.src.size());
    for (size_t k = 0; k < type.size(); ++k) type[k] = b_.slot[k] == 1 ? 1 : 0;
    record(p, state);
    read_exits(0, state, 0, h);
    for (int t = 1; t <= b_.max_steps(); ++t) {
      const int k = b_.active(t);
      const int n = b_.node_offset[k], m = b_.edge_offset[k];
      state = prefix(state, n);
      p = prefix(p, n);
      V w = edge_weights(p, dense(t_, s_, "branch", state), n, m);
      V per_type = t_.add(t_.matmul(state, w_msg), b_msg);
      V msgs = t_.mul(typed_messages(per_type, 2, b_.src, type, m), w);
      V agg = t_.row_scatter_add(msgs, first(b_.dst, m), n);
      p = t_.row_scatter_add(w, first(b_.dst, m), n);
      state = gated_update(t_, s_, state, agg);
      check_finite(state, t);
      record(p, state);
      read_exits(t, state, 0, h);
    }
  }

  void ggnn() {
    const int h = hidden();
    V state = embedded();
    V w_msg = concat_params({"edge.tf", "edge.ff", "edge.tr", "edge.fr"}, "W", 1);
    V b_msg = concat_params({"edge.tf", "edge.ff", "edge.tr", "edge.fr"}, "b", 1);
    record(V(), state);
    read_exits(0, state, 0, h);
    for (int t = 1; t <= b_.max_steps(); ++t) {
      const int k = b_.active(t);
      const int n = b_.node_offset[k], m = b_.typed_offset[k];
      state = prefix(state, n);
      V per_type = t_.add(t_.matmul(state, w_msg), b_msg);
      V msgs = typed_messages(per_type, 4, b_.typed_src, b_.typed_type, m);
      V agg = t_.row_scatter_add(msgs, first(b_.typed_dst, m), n);
      state = gated_update(t_, s_, state, agg);
      check_finite(state, t);
      record(V(), state);
      read_exits(t, state, 0, h);
    }
  }

  void nocontrol() {
    const int h = hidden();
    V x = lstm_input(t_, s_, embedded());
    V state = t_.zeros(ad::Shape{b_.node_count(), 4 * h});
    V w_msg = concat_params({"edge.tf", "edge.ff", "edge.tr", "edge.fr"}, "W", 1);
    V b_msg = concat_params({"edge.tf", "edge.ff", "edge.tr", "edge.fr"}, "b", 1);
    record(V(), state);
    read_exits(0, state, 2 * h, 3 * h);
    for (int t = 1; t <= b_.max_steps(); ++t) {
      const int k = b_.active(t);
      const int n = b_.node_offset[k], m = b_.typed_offset[k];
      state = prefix(state, n);
      x = prefix(x, n);
      V a = lstm_step(t_, s_, state, x);
      V per_type = t_.add(t_.matmul(a, w_msg), b_msg);
      V msgs = typed_messages(per_type, 4, b_.typed_src, b_.typed_type, m);
      state = t_.row_scatter_add(msgs, first(b_.typed_dst, m), n);
      check_finite(state, t);
      record(V(), state);
      read_exits(t, state, 2 * h, 3 * h);
    }
  }

  // Line-by-Line (statements in program order) or Trace RNN (statements in
  // trace order): one LSTM thread per example.
  void sequence(bool use_trace) {
    const int h = hidden();
    const int batch = b_.size();
    std::vector<std::vector<int>> seq(batch);
    for (int e = 0; e < batch; ++e) {
      const int base = b_.node_offset[e];
      if (use_trace) {
        if (b_.traces.size() != static_cast<size_t>(batch)) {
          throw UsageError("the trace model needs a batch built with traces");
        }
        const auto& tr = b_.traces[e];
        if (tr.empty() || tr.back() != b_.examples[e]->exit_index()) {
          throw SchemaError("trace", "trace of example " +
                                         b_.examples[e]->id +
                                         " does not end at exit");
        }
        for (int n : tr) seq[e].push_back(base + n);
      } else {
        for (int n = 0; n < b_.examples[e]->node_count(); ++n) {
          seq[e].push_back(base + n);
        }
      }
    }
    // Thread order: longest sequence first, so running threads are a prefix.
    std::vector<int> lane(batch);
    std::iota(lane.begin(), lane.end(), 0);
    std::stable_sort(lane.begin(), lane.end(), [&](int a, int b) {
      return seq[a].size() > seq[b].size();
    });
    V x = lstm_input(t_, s_, embedded());
    V state = t_.zeros(ad::Shape{batch, 4 * h});
    record(V(), state);
    const int longest = static_cast<int>(seq[lane[0]].size());
    for (int t = 1; t <= longest; ++t) {
      int k = 0;
      while (k < batch && static_cast<int>(seq[lane[k]].size()) >= t) ++k;
      std::vector<int> rows(k);
      for (int i = 0; i < k; ++i) rows[i] = seq[lane[i]][t - 1];
      state = lstm_step(t_, s_, prefix(state, k), t_.row_gather(x, rows));
      check_finite(state, t, std::span<const int>(lane).first(k));
      record(V(), state);
      for (int i = 0; i < k; ++i) {
        if (static_cast<int>(seq[lane[i]].size()) == t) {
          readout_[lane[i]] =
              t_.slice(t_.slice(state, 0, i, i + 1), 1, 2 * h, 3 * h);
        }
      }
    }
  }

  // Hard IP-RNN: one thread per example that follows the argmax branch
  // (ties to the true branch) for exactly T(x) steps, staying on the exit
  // self-loop once there.
  void hard() {
    const int h = hidden();
    const int batch = b_.size();
    if (o_.oracle_branches && b_.traces.size() != static_cast<size_t>(batch)) {
      throw UsageError("oracle branches need a batch built with traces");
    }
    V x = lstm_input(t_, s_, embedded());
    V state = t_.zeros(ad::Shape{batch, 4 * h});
    std::vector<int> node(batch, 0);  // local node id per example
    result_.path.assign(batch, {0});
    record(V(), state);
    for (int e = b_.active(1); e < batch; ++e) {
      readout_[e] = t_.slice(t_.slice(state, 0, e, e + 1), 1, 2 * h, 3 * h);
    }
    for (int t = 1; t <= b_.max_steps(); ++t) {
      const int k = b_.active(t);
      std::vector<int> rows(k);
      for (int e = 0; e < k; ++e) rows[e] = b_.node_offset[e] + node[e];
      state = lstm_step(t_, s_, prefix(state, k), t_.row_gather(x, rows));
      std::vector<int> owner(k);
      std::iota(owner.begin(), owner.end(), 0);
      check_finite(state, t, owner);
      const auto logits =
          dense(t_, s_, "branch", lstm_output(t_, state)).value();
      for (int e = 0; e < k; ++e) {
        const auto& out = b_.examples[e]->successors[node[e]];
        int next = out[0];
        if (o_.oracle_branches) {
          const auto& tr = b_.traces[e];
          next = t < static_cast<int>(tr.size()) ? tr[t] : tr.back();
        } else if (out.size() == 2 && logits[2 * e + 1] > logits[2 * e]) {
          next = out[1];
        }
        node[e] = next;
        result_.path[e].push_back(next);
        if (b_.steps[e] == t) {
          readout_[e] =
              t_.slice(t_.slice(state, 0, e, e + 1), 1, 2 * h, 3 * h);
        }
      }
      record(V(), state);
    }
  }

  ad::Tape<T>& t_;
  ParameterStore<T>& s_;
  const GraphBatch& b_;
  const ForwardOptions& o_;
  std::vector<V> readout_;
  ForwardResult<T> result_;
};

}  // namespace detail

template <typename T>
ForwardResult<T> forward(ModelKind kind, ad::Tape<T>& tape,
                         ParameterStore<T>& params, const GraphBatch& batch,
                         const ForwardOptions& options = {}) {
  if (batch.size() == 0) throw UsageError("empty batch");
  return detail::Runner<T>(tape, params, batch, options).run(kind);
}

// Mean cross-entropy of a forward result against the batch labels.
template <typename T>
ad::Var<T> batch_loss(ad::Tape<T>& tape, const ForwardResult<T>& r,
                      const GraphBatch& batch) {
  return xent_loss(tape, r.logits, batch.labels);
}

// Argmax class per example, in the caller's original order.
template <typename T>
std::vector<int> predictions(const ForwardResult<T>& r,
                             const GraphBatch& batch) {
  const auto v = r.logits.value();
  std::vector<int> out(batch.size());
  for (int pos = 0; pos < batch.size(); ++pos) {
    const T* row = v.data() + static_cast<std::int64_t>(pos) * kNumClasses;
    out[batch.order[pos]] =
        static_cast<int>(std::max_element(row, row + kNumClasses) - row);
  }
  return out;
}

}  // namespace ipagnn
