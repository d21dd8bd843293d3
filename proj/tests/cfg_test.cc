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

#include <queue>

#include <gtest/gtest.h>

#include "ipagnn/cfg.h"
#include "ipagnn/program.h"
#include "ipagnn/sampler.h"

namespace ipagnn {
namespace {

using Ints = std::vector<int>;

constexpr char kFigure1[] =
    "v0 = 23\nv1 = 6\nwhile v1 > 0:\n  v1 -= 1\n  if v0 % 10 <= 3:\n"
    "    v0 += 4\n    v0 *= 6\n  v0 -= 1\n";
constexpr char kFigure3[] =
    "v0 = 407\nif v0 % 10 < 3:\n  v0 += 4\nelse:\n  v0 -= 2\n";

// Independent T(x): walks the indentation tree recursively rather than
// scanning loop bodies.
std::int64_t recursive_budget(const Program& p, int begin, int end, int depth) {
  std::int64_t total = 0;
  int i = begin;
  while (i < end) {
    int j = i + 1;
    while (j < end && p[j].indent > p[i].indent) ++j;
    const bool loop = p[i].kind == StatementKind::kWhile;
    total += (std::int64_t{1} << depth) * (loop ? 2 : 1);
    total += recursive_budget(p, i + 1, j, depth + (loop ? 1 : 0));
    i = j;
  }
  return total;
}

TEST(CfgTest, Figure1Adjacency) {
  ControlFlowGraph g = build_cfg(parse(kFigure1));
  ASSERT_EQ(g.node_count(), 9);
  EXPECT_EQ(g.in[0], Ints{});
  EXPECT_EQ(g.out[0], Ints{1});
  EXPECT_EQ(g.in[2], (Ints{1, 7}));
  EXPECT_EQ(g.out[2], (Ints{3, 8}));
  EXPECT_EQ(g.out[3], Ints{4});
  // The if on line 4 has both successors; its false edge goes to line 7.
  EXPECT_EQ(g.out[4], (Ints{5, 7}));
  EXPECT_EQ(g.in[7], (Ints{4, 6}));
  EXPECT_EQ(g.out[7], Ints{2});
  EXPECT_EQ(g.in[8], (Ints{2, 8}));
  EXPECT_EQ(g.out[8], Ints{8});
}

TEST(CfgTest, StraightLineChain) {
  ControlFlowGraph g = build_cfg(parse("v0 = 1\nv0 += 2\nv0 *= 3\n"));
  EXPECT_EQ(g.out, (std::vector<Ints>{{1}, {2}, {3}, {3}}));
  EXPECT_EQ(g.in, (std::vector<Ints>{{}, {0}, {1}, {2, 3}}));
}

TEST(CfgTest, Figure3IfElse) {
  ControlFlowGraph g = build_cfg(parse(kFigure3));
  // `else:` is its own node: the false edge of the if lands on it.
  EXPECT_EQ(g.out[1], (Ints{2, 3}));
  EXPECT_EQ(g.out[2], Ints{5});
  EXPECT_EQ(g.out[3], Ints{4});
  EXPECT_EQ(g.out[4], Ints{5});
  EXPECT_EQ(g.in[5], (Ints{2, 4, 5}));
}

TEST(CfgTest, BreakAndContinueTargets) {
  Program p = parse(
      "v0 = 1\nv1 = 3\nwhile v1 > 0:\n  v1 -= 1\n  if v0 % 10 > 5:\n"
      "    break\n  if v0 % 10 < 2:\n    continue\n  v0 += 1\nv0 *= 2\n");
  ControlFlowGraph g = build_cfg(p);
  EXPECT_EQ(g.out[5], Ints{9});  // break -> after loop
  EXPECT_EQ(g.out[7], Ints{2});  // continue -> header
  EXPECT_EQ(g.out[6], (Ints{7, 8}));
  EXPECT_EQ(g.out[8], Ints{2});
  EXPECT_EQ(g.out[2], (Ints{3, 9}));
}

TEST(CfgTest, LoopAsLastBodyStatementReturnsToOuterHeader) {
  Program p = parse(
      "v0 = 1\nv1 = 2\nwhile v1 > 0:\n  v1 -= 1\n  v2 = 2\n  while v2 > 0:\n"
      "    v2 -= 1\n");
  ControlFlowGraph g = build_cfg(p);
  EXPECT_EQ(g.out[5], (Ints{6, 2}));
  EXPECT_EQ(g.out[6], Ints{5});
  EXPECT_EQ(g.out[2], (Ints{3, 7}));
}

TEST(CfgTest, JumpOutsideLoopIsMalformed) {
  Program p;
  p.statements = {Statement::assign(0, 0, 1),
                  Statement::bare(StatementKind::kBreak, 0),
                  Statement::bare(StatementKind::kExit, 0)};
  EXPECT_THROW(build_cfg(p), CfgError);
}

TEST(TypedEdgesTest, Figure1WhileEdges) {
  auto edges = typed_edges(build_cfg(parse(kFigure1)));
  auto has = [&](TypedEdge e) {
    return std::find(edges.begin(), edges.end(), e) != edges.end();
  };
  EXPECT_TRUE(has({2, 3, EdgeType::kTrueForward}));
  EXPECT_TRUE(has({2, 8, EdgeType::kFalseForward}));
  EXPECT_TRUE(has({3, 2, EdgeType::kTrueReverse}));
  EXPECT_TRUE(has({8, 2, EdgeType::kFalseReverse}));
  EXPECT_TRUE(has({8, 8, EdgeType::kTrueForward}));
  // 8 single-successor nodes + 2 branches = 11 forward edges.
  EXPECT_EQ(edges.size(), 22u);
}

TEST(TypedEdgesTest, StraightLineIsAllTrueForward) {
  auto edges = typed_edges(build_cfg(parse("v0 = 1\nv0 += 2\n")));
  ASSERT_EQ(edges.size(), 6u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(edges[i].type, EdgeType::kTrueForward);
  for (int i = 3; i < 6; ++i) EXPECT_EQ(edges[i].type, EdgeType::kTrueReverse);
}

TEST(StepBudgetTest, HandComputedValues) {
  Program straight = parse("v0 = 1\nv0 += 2\nv0 *= 3\n");
  EXPECT_EQ(step_budget(straight, build_cfg(straight)).steps, 4);

  Program loop = parse("v0 = 1\nwhile v0 > 0:\n  v0 -= 1\n");
  EXPECT_EQ(step_budget(loop, build_cfg(loop)).steps, 6);

  Program fig1 = parse(kFigure1);
  StepBudget b = step_budget(fig1, build_cfg(fig1));
  EXPECT_EQ(b.steps, 15);
  EXPECT_EQ(b.loop_nesting, (Ints{0, 0, 0, 1, 1, 1, 1, 1, 0}));
}

TEST(CfgPropertyTest, SampledGraphsAreWellFormed) {
  SamplerLimits limits;
  limits.max_lines = 60;
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    Program p = desugar(sample_program(rng, limits), rng);
    ControlFlowGraph g = build_cfg(p);
    ASSERT_EQ(g.node_count(), p.size());
    for (int n = 0; n < g.node_count(); ++n) {
      const size_t arity = g.out[n].size();
      ASSERT_TRUE(arity == 1 || arity == 2);
      ASSERT_EQ(arity == 2, p[n].is_branch());
      for (int m : g.out[n]) {
        ASSERT_TRUE(std::binary_search(g.in[m].begin(), g.in[m].end(), n));
      }
      for (int m : g.in[n]) {
        ASSERT_NE(std::find(g.out[m].begin(), g.out[m].end(), n),
                  g.out[m].end());
      }
    }
    ASSERT_EQ(g.out[g.exit_index], Ints{g.exit_index});
    std::vector<bool> seen(g.node_count());
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = true;
    while (!frontier.empty()) {
      int n = frontier.front();
      frontier.pop();
      for (int m : g.out[n]) {
        if (!seen[m]) {
          seen[m] = true;
          frontier.push(m);
        }
      }
    }
    for (int n = 0; n < g.node_count(); ++n) {
      ASSERT_TRUE(seen[n]) << "unreachable node " << n << "\n" << render(p);
    }

    auto edges = typed_edges(g);
    size_t forward = 0;
    for (const auto& o : g.out) forward += o.size();
    ASSERT_EQ(edges.size(), 2 * forward);

    StepBudget b = step_budget(p, g);
    ASSERT_EQ(b.steps, recursive_budget(p, 0, p.exit_index(), 0) + 1);
    ASSERT_GE(b.steps, g.node_count());
    bool has_loop = false;
    for (const auto& s : p.statements) has_loop |= s.kind == StatementKind::kWhile;
    if (!has_loop) {
      ASSERT_EQ(b.steps, p.exit_index() + 1);
    }
  }
}

TEST(CfgFormatTest, AdjacencyListing) {
  std::string text = format_adjacency(build_cfg(parse(kFigure1)));
  EXPECT_NE(text.find("2: out=[3,8] in=[1,7] type=[true,false]\n"),
            std::string::npos);
  EXPECT_NE(text.find("8: out=[8] in=[2,8] type=[true]\n"), std::string::npos);
}

}  // namespace
}  // namespace ipagnn
