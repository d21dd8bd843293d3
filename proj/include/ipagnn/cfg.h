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
#include <cstdint>
#include <string>
#include <vector>

#include "ipagnn/errors.h"
#include "ipagnn/program.h"

namespace ipagnn {

// Statement-level control flow graph. `out[n]` is ordered: index 0 is the
// true (or only) successor, index 1 the false successor of an if/while.
struct ControlFlowGraph {
  std::vector<std::vector<int>> out;
  std::vector<std::vector<int>> in;  // ascending
  int exit_index = 0;

  int node_count() const { return static_cast<int>(out.size()); }
  bool operator==(const ControlFlowGraph&) const = default;
};

enum class EdgeType : int {
  kTrueForward = 0,
  kFalseForward = 1,
  kTrueReverse = 2,
  kFalseReverse = 3,
};
inline constexpr int kNumEdgeTypes = 4;

inline const char* edge_type_name(EdgeType type) {
  switch (type) {
    case EdgeType::kTrueForward: return "true-forward";
    case EdgeType::kFalseForward: return "false-forward";
    case EdgeType::kTrueReverse: return "true-reverse";
    case EdgeType::kFalseReverse: return "false-reverse";
  }
  return "?";
}

struct TypedEdge {
  int source = 0;
  int dest = 0;
  EdgeType type = EdgeType::kTrueForward;

  bool operator==(const TypedEdge&) const = default;
};

namespace detail {

// Index one past the last statement nested under statement `i`.
inline int block_end(const Program& p, int i) {
  int j = i + 1;
  while (j < p.exit_index() && p[j].indent > p[i].indent) ++j;
  return j;
}

class CfgBuilder {
 public:
  explicit CfgBuilder(const Program& p) : p_(p) {
    g_.out.resize(p.size());
    g_.in.resize(p.size());
    g_.exit_index = p.exit_index();
  }

  ControlFlowGraph build() {
    if (p_.size() == 0 || p_.statements.back().kind != StatementKind::kExit) {
      throw CfgError("program must end with <exit>");
    }
    const int exit = p_.exit_index();
    if (exit > 0) build_block(0, exit, exit, -1, -1);
    g_.out[exit] = {exit};
    for (int n = 0; n < p_.size(); ++n) {
      for (int m : g_.out[n]) g_.in[m].push_back(n);
    }
    for (auto& preds : g_.in) {
      std::sort(preds.begin(), preds.end());
      preds.erase(std::unique(preds.begin(), preds.end()), preds.end());
    }
    return std::move(g_);
  }

 private:
  // Wires statements [begin, end) at one indentation level. Control leaving
  // the block falls through to `next`.
  void build_block(int begin, int end, int next, int loop_head,
                   int loop_exit) {
    int i = begin;
    while (i < end) {
      const Statement& s = p_[i];
      int after = block_end(p_, i);
      int else_node = -1;
      if (s.kind == StatementKind::kIf && after < end &&
          p_[after].kind == StatementKind::kElse &&
          p_[after].indent == s.indent) {
        else_node = after;
        after = block_end(p_, else_node);
      }
      const int follow = after < end ? after : next;
      switch (s.kind) {
        case StatementKind::kIf:
          require_body(i);
          g_.out[i] = {i + 1, else_node >= 0 ? else_node : follow};
          build_block(i + 1, block_end(p_, i), follow, loop_head, loop_exit);
          if (else_node >= 0) {
            require_body(else_node);
            g_.out[else_node] = {else_node + 1};
            build_block(else_node + 1, after, follow, loop_head, loop_exit);
          }
          break;
        case StatementKind::kWhile:
          require_body(i);
          g_.out[i] = {i + 1, follow};
          build_block(i + 1, after, i, i, follow);
          break;
        case StatementKind::kElse:
          throw CfgError("'else' at node " + std::to_string(i) +
                         " has no matching 'if'");
        case StatementKind::kBreak:
        case StatementKind::kContinue:
          if (loop_head < 0) {
            throw CfgError(std::string(s.kind == StatementKind::kBreak
                                           ? "break"
                                           : "continue") +
                           " at node " + std::to_string(i) +
                           " has no enclosing loop");
          }
          g_.out[i] = {s.kind == StatementKind::kBreak ? loop_exit
                                                        : loop_head};
          break;
        case StatementKind::kExit:
          throw CfgError("<exit> before the final node");
        default:
          g_.out[i] = {follow};
      }
      i = after;
    }
  }

  void require_body(int i) const {
    if (i + 1 >= p_.exit_index() || p_[i + 1].indent != p_[i].indent + 1) {
      throw CfgError("compound statement at node " + std::to_string(i) +
                     " has an empty body");
    }
  }

  const Program& p_;
  ControlFlowGraph g_;
};

}  // namespace detail

inline ControlFlowGraph build_cfg(const Program& p) {
  return detail::CfgBuilder(p).build();
}

// Forward edges with their branch labels followed by their transposes.
inline std::vector<TypedEdge> typed_edges(const ControlFlowGraph& g) {
  std::vector<TypedEdge> edges;
  for (int n = 0; n < g.node_count(); ++n) {
    for (size_t k = 0; k < g.out[n].size(); ++k) {
      edges.push_back({n, g.out[n][k],
                       k == 0 ? EdgeType::kTrueForward
                              : EdgeType::kFalseForward});
    }
  }
  const size_t forward = edges.size();
  for (size_t e = 0; e < forward; ++e) {
    edges.push_back({edges[e].dest, edges[e].source,
                     edges[e].type == EdgeType::kTrueForward
                         ? EdgeType::kTrueReverse
                         : EdgeType::kFalseReverse});
  }
  return edges;
}

struct StepBudget {
  std::int64_t steps = 0;             // T(x)
  std::vector<int> loop_nesting;      // per node, <exit> included
};

// Number of layers T(x): every node weighted by 2^(enclosing while loops),
// plus each while header weighted the same way once more.
inline StepBudget step_budget(const Program& p, const ControlFlowGraph& g) {
  StepBudget b;
  b.loop_nesting.assign(p.size(), 0);
  for (int i = 0; i < p.exit_index(); ++i) {
    if (p[i].kind != StatementKind::kWhile) continue;
    const int end = detail::block_end(p, i);
    for (int j = i + 1; j < end; ++j) ++b.loop_nesting[j];
  }
  for (int i = 0; i <= g.exit_index; ++i) {
    b.steps += std::int64_t{1} << b.loop_nesting[i];
    if (p[i].kind == StatementKind::kWhile) {
      b.steps += std::int64_t{1} << b.loop_nesting[i];
    }
  }
  return b;
}

// One line per node: `n: out=[a,b] in=[...] type=[true,false]`.
inline std::string format_adjacency(const ControlFlowGraph& g) {
  auto join = [](const std::vector<int>& xs) {
    std::string s;
    for (size_t i = 0; i < xs.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(xs[i]);
    }
    return s;
  };
  std::string out;
  for (int n = 0; n < g.node_count(); ++n) {
    out += std::to_string(n) + ": out=[" + join(g.out[n]) + "] in=[" +
           join(g.in[n]) + "] type=[" +
           (g.out[n].size() == 2 ? "true,false" : "true") + "]\n";
  }
  return out;
}

}  // namespace ipagnn
