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
#include <array>
#include <string>
#include <vector>

#include "ipagnn/errors.h"
#include "ipagnn/program.h"
#include "ipagnn/rng.h"

namespace ipagnn {

// Grammar-level statement before Repeat desugaring. Conditions always test
// `v0 % 10`; expressions always update v0.
struct RawStatement {
  enum class Kind { kExpression, kIf, kIfElse, kRepeat, kContinue, kBreak, kPass };

  Kind kind = Kind::kPass;
  ArithOp op = ArithOp::kAdd;        // kExpression
  Comparator cmp = Comparator::kGt;  // kIf, kIfElse
  int operand = 0;                   // N for expressions, conditions, repeats
  std::vector<RawStatement> body;
  std::vector<RawStatement> orelse;  // kIfElse only

  bool operator==(const RawStatement&) const = default;
};

struct RawProgram {
  int init = 0;  // M in `v0 = M`
  std::vector<RawStatement> body;

  bool operator==(const RawProgram&) const = default;
};

// Relative production weights. The defaults favour plain expressions; they
// are a declared choice, not a measured one.
struct ProductionWeights {
  double expression = 6.0;
  double if_then = 2.0;
  double if_else = 1.0;
  double repeat = 2.0;
  double continue_ = 0.3;
  double break_ = 0.3;
  double pass = 0.3;
};

struct SamplerLimits {
  // The desugared line count (excluding <exit>) is drawn uniformly from
  // [min_lines, max_lines].
  int min_lines = 2;
  int max_lines = 10;
  // Deepest indentation a sampled statement may reach.
  int max_depth = 4;
  // Cap on the line count of any single nested block.
  int max_block_lines = 6;
  ProductionWeights weights;
  int max_retries = 1000;
};

namespace detail {

// Desugared line cost of each production's smallest instance.
inline constexpr int kIfMinLines = 2;      // if + 1 body line
inline constexpr int kIfElseMinLines = 4;  // if, body, else, body
inline constexpr int kRepeatOverhead = 3;  // vK = N, while, vK -= 1

inline bool block_terminates(const std::vector<RawStatement>& block);

inline bool statement_terminates(const RawStatement& s) {
  switch (s.kind) {
    case RawStatement::Kind::kBreak:
    case RawStatement::Kind::kContinue:
      return true;
    case RawStatement::Kind::kIfElse:
      return block_terminates(s.body) && block_terminates(s.orelse);
    default:
      return false;
  }
}

inline bool block_terminates(const std::vector<RawStatement>& block) {
  return !block.empty() && statement_terminates(block.back());
}

class BlockSampler {
 public:
  BlockSampler(Rng& rng, const SamplerLimits& limits)
      : rng_(rng), limits_(limits) {}

  // Fills exactly `budget` desugared lines at indentation `depth`. Returns
  // false when the attempt dead-ends; the caller retries.
  bool sample_block(int budget, int depth, int loop_depth,
                    std::vector<RawStatement>& out) {
    while (budget > 0) {
      const auto& w = limits_.weights;
      const bool can_nest = depth < limits_.max_depth;
      // Break/continue end their block; anything after would be dead code.
      const bool can_jump = loop_depth > 0 && budget == 1;
      const std::array<double, 7> weights = {
          w.expression,
          can_nest && budget >= kIfMinLines ? w.if_then : 0.0,
          can_nest && budget >= kIfElseMinLines ? w.if_else : 0.0,
          can_nest && budget >= kRepeatOverhead + 1 &&
                  loop_depth < kNumVariables - 1
              ? w.repeat
              : 0.0,
          can_jump ? w.continue_ : 0.0,
          can_jump ? w.break_ : 0.0,
          w.pass,
      };
      const int pick = rng_.weighted(weights);
      if (pick < 0) return false;
      RawStatement s;
      s.kind = static_cast<RawStatement::Kind>(pick);
      switch (s.kind) {
        case RawStatement::Kind::kExpression:
          s.op = static_cast<ArithOp>(rng_.uniform_int(0, 2));
          s.operand = static_cast<int>(rng_.uniform_int(0, 9));
          budget -= 1;
          break;
        case RawStatement::Kind::kIf: {
          sample_condition(s);
          const int inner = inner_budget(budget - 1);
          if (!sample_block(inner, depth + 1, loop_depth, s.body)) return false;
          budget -= 1 + inner;
          break;
        }
        case RawStatement::Kind::kIfElse: {
          sample_condition(s);
          const int both = inner_budget(budget - 2, 2);
          const int first = static_cast<int>(rng_.uniform_int(1, both - 1));
          if (!sample_block(first, depth + 1, loop_depth, s.body)) return false;
          if (!sample_block(both - first, depth + 1, loop_depth, s.orelse)) {
            return false;
          }
          budget -= 2 + both;
          // Both arms jumping away would orphan whatever follows.
          if (budget > 0 && statement_terminates(s)) return false;
          break;
        }
        case RawStatement::Kind::kRepeat: {
          s.operand = static_cast<int>(rng_.uniform_int(0, 9));
          const int inner = inner_budget(budget - kRepeatOverhead);
          if (!sample_block(inner, depth + 1, loop_depth + 1, s.body)) {
            return false;
          }
          budget -= kRepeatOverhead + inner;
          break;
        }
        default:
          budget -= 1;
          break;
      }
      out.push_back(std::move(s));
    }
    return true;
  }

 private:
  void sample_condition(RawStatement& s) {
    s.cmp = static_cast<Comparator>(rng_.uniform_int(0, 3));
    s.operand = static_cast<int>(rng_.uniform_int(0, 9));
  }

  // Lines given to a nested block, uniform in [minimum, min(available, cap)].
  int inner_budget(int available, int minimum = 1) {
    const int cap = std::max(minimum, std::min(available,
                                               limits_.max_block_lines));
    return static_cast<int>(rng_.uniform_int(minimum, cap));
  }

  Rng& rng_;
  const SamplerLimits& limits_;
};

}  // namespace detail

// Draws a grammar-conformant program whose desugared form has a line count
// in [limits.min_lines, limits.max_lines]. Consumes only `rng`.
inline RawProgram sample_program(Rng& rng, const SamplerLimits& limits) {
  if (limits.min_lines < 1 || limits.max_lines < limits.min_lines) {
    throw SamplingError("invalid line limits [" +
                        std::to_string(limits.min_lines) + ", " +
                        std::to_string(limits.max_lines) + "]");
  }
  const int lines =
      static_cast<int>(rng.uniform_int(limits.min_lines, limits.max_lines));
  for (int attempt = 0; attempt < limits.max_retries; ++attempt) {
    RawProgram p;
    p.init = static_cast<int>(rng.uniform_int(0, kMaxConstant));
    detail::BlockSampler sampler(rng, limits);
    if (sampler.sample_block(lines - 1, 0, 0, p.body)) return p;
  }
  throw SamplingError("line-count target " + std::to_string(lines) +
                      " unreachable after " +
                      std::to_string(limits.max_retries) +
                      " attempts with the configured weights");
}

namespace detail {

inline void desugar_block(const std::vector<RawStatement>& block, int indent,
                          std::array<bool, kNumVariables>& in_use, Rng& rng,
                          std::vector<Statement>& out) {
  for (const RawStatement& s : block) {
    switch (s.kind) {
      case RawStatement::Kind::kExpression:
        out.push_back(Statement::aug_assign(indent, 0, s.op, s.operand));
        break;
      case RawStatement::Kind::kIf:
        out.push_back(Statement::if_mod10(indent, s.cmp, s.operand));
        desugar_block(s.body, indent + 1, in_use, rng, out);
        break;
      case RawStatement::Kind::kIfElse:
        out.push_back(Statement::if_mod10(indent, s.cmp, s.operand));
        desugar_block(s.body, indent + 1, in_use, rng, out);
        out.push_back(Statement::bare(StatementKind::kElse, indent));
        desugar_block(s.orelse, indent + 1, in_use, rng, out);
        break;
      case RawStatement::Kind::kRepeat: {
        std::vector<int> free;
        for (int v = 1; v < kNumVariables; ++v) {
          if (!in_use[v]) free.push_back(v);
        }
        if (free.empty()) {
          throw SamplingError("more than 9 nested Repeat blocks need counters");
        }
        const int counter =
            free[rng.uniform_int(0, static_cast<int>(free.size()) - 1)];
        out.push_back(Statement::assign(indent, counter, s.operand));
        out.push_back(Statement::while_gt(indent, counter, 0));
        out.push_back(
            Statement::aug_assign(indent + 1, counter, ArithOp::kSub, 1));
        in_use[counter] = true;
        desugar_block(s.body, indent + 1, in_use, rng, out);
        in_use[counter] = false;
        break;
      }
      case RawStatement::Kind::kContinue:
        out.push_back(Statement::bare(StatementKind::kContinue, indent));
        break;
      case RawStatement::Kind::kBreak:
        out.push_back(Statement::bare(StatementKind::kBreak, indent));
        break;
      case RawStatement::Kind::kPass:
        out.push_back(Statement::bare(StatementKind::kPass, indent));
        break;
    }
  }
}

}  // namespace detail

// Lowers If/IfElse/Repeat to their Python forms and appends <exit>. Each
// Repeat counter is drawn uniformly from v1..v9 minus the counters of the
// enclosing Repeats.
inline Program desugar(const RawProgram& raw, Rng& rng) {
  Program p;
  p.statements.push_back(Statement::assign(0, 0, raw.init));
  std::array<bool, kNumVariables> in_use{};
  in_use[0] = true;
  detail::desugar_block(raw.body, 0, in_use, rng, p.statements);
  p.statements.push_back(Statement::bare(StatementKind::kExit, 0));
  return p;
}

// Desugared line count of a raw program, excluding <exit>.
inline int desugared_lines(const std::vector<RawStatement>& block) {
  int lines = 0;
  for (const auto& s : block) {
    switch (s.kind) {
      case RawStatement::Kind::kIf:
        lines += 1 + desugared_lines(s.body);
        break;
      case RawStatement::Kind::kIfElse:
        lines += 2 + desugared_lines(s.body) + desugared_lines(s.orelse);
        break;
      case RawStatement::Kind::kRepeat:
        lines += detail::kRepeatOverhead + desugared_lines(s.body);
        break;
      default:
        lines += 1;
    }
  }
  return lines;
}

}  // namespace ipagnn
