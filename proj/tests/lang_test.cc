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

#include <set>
#include <string>

#include <gtest/gtest.h>

#include "ipagnn/program.h"
#include "ipagnn/sampler.h"

namespace ipagnn {
namespace {

constexpr char kFigure1[] =
    "v0 = 23\n"
    "v1 = 6\n"
    "while v1 > 0:\n"
    "  v1 -= 1\n"
    "  if v0 % 10 <= 3:\n"
    "    v0 += 4\n"
    "    v0 *= 6\n"
    "  v0 -= 1\n";

bool has_jump_outside_repeat(const std::vector<RawStatement>& block,
                             bool in_repeat) {
  for (const auto& s : block) {
    if ((s.kind == RawStatement::Kind::kBreak ||
         s.kind == RawStatement::Kind::kContinue) &&
        !in_repeat) {
      return true;
    }
    const bool inner = in_repeat || s.kind == RawStatement::Kind::kRepeat;
    if (has_jump_outside_repeat(s.body, inner) ||
        has_jump_outside_repeat(s.orelse, inner)) {
      return true;
    }
  }
  return false;
}

TEST(ParseTest, Figure1ProgramHasNineNodes) {
  Program p = parse(kFigure1);
  ASSERT_EQ(p.size(), 9);
  EXPECT_EQ(p.exit_index(), 8);
  EXPECT_EQ(p[2], Statement::while_gt(0, 1, 0));
  EXPECT_EQ(p[4], Statement::if_mod10(1, Comparator::kLe, 3));
  EXPECT_EQ(p[6], Statement::aug_assign(2, 0, ArithOp::kMul, 6));
  EXPECT_EQ(p[8].kind, StatementKind::kExit);
  EXPECT_EQ(render(p), kFigure1);
}

TEST(ParseTest, EmptyInputIsRejected) {
  try {
    parse("");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("program must begin with v0 = M"),
              std::string::npos);
  }
}

TEST(ParseTest, TabIndentIsIndentationError) {
  EXPECT_THROW(parse("v0 = 1\nwhile v0 > 0:\n\tv0 -= 1\n"), IndentationError);
}

TEST(ParseTest, OddIndentIsIndentationError) {
  EXPECT_THROW(parse("v0 = 1\nif v0 % 10 > 1:\n   v0 += 1\n"),
               IndentationError);
}

TEST(ParseTest, ErrorsCarryLineAndColumn) {
  try {
    parse("v0 = 1\nv0 ^= 2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.column(), 4);  // the caret
  }
}

TEST(ParseTest, StructuralErrors) {
  EXPECT_THROW(parse("v0 = 1\nbreak\n"), ParseError);
  EXPECT_THROW(parse("v0 = 1\nelse:\n  pass\n"), ParseError);
  EXPECT_THROW(parse("v0 = 1\nif v0 % 10 > 1:\n"), IndentationError);
  EXPECT_THROW(parse("v0 = 1\n  v0 += 1\n"), IndentationError);
  EXPECT_THROW(parse("v0 = 1000\n"), ParseError);
  EXPECT_THROW(parse("v1 = 3\n"), ParseError);
  EXPECT_THROW(
      parse("v0 = 1\nif v0 % 10 > 1:\n  pass\nelse:\n  pass\nelse:\n  pass\n"),
      ParseError);
  EXPECT_NO_THROW(parse("v0 = 1\nv2 = 2\nwhile v2 > 0:\n  v2 -= 1\n  if v0 "
                        "% 10 > 1:\n    break\n  else:\n    continue\n"));
}

TEST(TokenizeTest, Figure1Rows) {
  auto tuples = tokenize(parse(kFigure1));
  ASSERT_EQ(tuples.size(), 9u);
  EXPECT_EQ(tuples[0], (StatementTuple{0, vocab::kOpAssign, 0, 23}));
  EXPECT_EQ(tuples[2], (StatementTuple{0, vocab::kOpWhileGt, 1, 0}));
  EXPECT_EQ(tuples[4], (StatementTuple{1, vocab::kOpIfLeMod, 0, 3}));
  EXPECT_EQ(tuples[7], (StatementTuple{1, vocab::kOpSubAssign, 0, 1}));
  EXPECT_EQ(tuples[8], (StatementTuple{vocab::kIndentExit, vocab::kOpExit,
                                       vocab::kVarNone, vocab::kOperandNone}));
  EXPECT_EQ(vocab::kOpNames[tuples[4].op], "if <= %");
  EXPECT_EQ(vocab::kOpNames[tuples[2].op], "while >");
}

TEST(TokenizeTest, ElseAndJumpsUseNoneFields) {
  auto tuples = tokenize(parse(
      "v0 = 5\nv3 = 1\nwhile v3 > 0:\n  v3 -= 1\n  if v0 % 10 > 4:\n    "
      "break\n  else:\n    pass\n"));
  EXPECT_EQ(tuples[5], (StatementTuple{2, vocab::kOpBreak, vocab::kVarNone,
                                       vocab::kOperandNone}));
  EXPECT_EQ(tuples[6], (StatementTuple{1, vocab::kOpElse, vocab::kVarNone,
                                       vocab::kOperandNone}));
}

TEST(SamplerTest, ExpressionOnlyGrammar) {
  SamplerLimits limits;
  limits.min_lines = limits.max_lines = 3;
  limits.weights = {6.0, 0, 0, 0, 0, 0, 0};
  Rng rng(7);
  RawProgram raw = sample_program(rng, limits);
  ASSERT_EQ(raw.body.size(), 2u);
  for (const auto& s : raw.body) {
    EXPECT_EQ(s.kind, RawStatement::Kind::kExpression);
    EXPECT_LE(s.operand, 9);
  }
  Program p = desugar(raw, rng);
  EXPECT_EQ(p.complexity(), 3);
  EXPECT_EQ(p[0].kind, StatementKind::kAssign);
  EXPECT_EQ(p[1].kind, StatementKind::kAugAssign);
  EXPECT_EQ(p[2].kind, StatementKind::kAugAssign);
}

TEST(SamplerTest, UnreachableTargetRaises) {
  SamplerLimits limits;
  limits.min_lines = limits.max_lines = 5;
  limits.weights = {0, 0, 0, 0, 0, 0, 0};
  limits.max_retries = 10;
  Rng rng(1);
  EXPECT_THROW(sample_program(rng, limits), SamplingError);
}

TEST(SamplerTest, SameSeedSameProgram) {
  SamplerLimits limits;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng a(seed), b(seed);
    EXPECT_EQ(render(desugar(sample_program(a, limits), a)),
              render(desugar(sample_program(b, limits), b)));
  }
}

TEST(SamplerTest, TenThousandSamplesRoundTripAndStayInGrammar) {
  SamplerLimits limits;
  limits.min_lines = 2;
  limits.max_lines = 40;
  Rng rng(2024);
  for (int i = 0; i < 10000; ++i) {
    RawProgram raw = sample_program(rng, limits);
    ASSERT_FALSE(has_jump_outside_repeat(raw.body, false));
    ASSERT_GE(raw.init, 0);
    ASSERT_LE(raw.init, 999);
    Program p = desugar(raw, rng);
    ASSERT_EQ(p.complexity(), desugared_lines(raw.body) + 1);
    ASSERT_GE(p.complexity(), limits.min_lines);
    ASSERT_LE(p.complexity(), limits.max_lines);
    const std::string text = render(p);
    ASSERT_EQ(parse(text), p) << text;
    for (const auto& t : tokenize(p)) {
      ASSERT_GE(t.indent, 0);
      ASSERT_LT(t.indent, vocab::kIndentSize);
      ASSERT_GE(t.op, 0);
      ASSERT_LT(t.op, vocab::kOpSize);
      ASSERT_GE(t.var, 0);
      ASSERT_LT(t.var, vocab::kVarSize);
      ASSERT_GE(t.operand, 0);
      ASSERT_LT(t.operand, vocab::kOperandSize);
    }
    for (const auto& s : p.statements) {
      ASSERT_LE(s.indent, limits.max_depth);
      // Conditions only test v0; counters come from v1..v9.
      if (s.kind == StatementKind::kIf) {
        ASSERT_EQ(s.var, 0);
      }
      if (s.kind == StatementKind::kWhile) {
        ASSERT_GE(s.var, 1);
      }
    }
  }
}

TEST(DesugarTest, RepeatBecomesCounterLoop) {
  RawProgram raw;
  raw.init = 5;
  RawStatement body;
  body.kind = RawStatement::Kind::kExpression;
  body.op = ArithOp::kSub;
  body.operand = 9;
  RawStatement repeat;
  repeat.kind = RawStatement::Kind::kRepeat;
  repeat.operand = 7;
  repeat.body = {body};
  raw.body = {repeat};
  Rng rng(3);
  Program p = desugar(raw, rng);
  ASSERT_EQ(p.size(), 6);
  const int k = p[1].var;
  EXPECT_GE(k, 1);
  EXPECT_LE(k, 9);
  EXPECT_EQ(p[1], Statement::assign(0, k, 7));
  EXPECT_EQ(p[2], Statement::while_gt(0, k, 0));
  EXPECT_EQ(p[3], Statement::aug_assign(1, k, ArithOp::kSub, 1));
  EXPECT_EQ(p[4], Statement::aug_assign(1, 0, ArithOp::kSub, 9));
  EXPECT_EQ(p[5].kind, StatementKind::kExit);
}

TEST(DesugarTest, NoRepeatOnlyAppendsExit) {
  RawProgram raw;
  raw.init = 17;
  RawStatement s;
  s.kind = RawStatement::Kind::kPass;
  raw.body = {s};
  Rng rng(0);
  Program p = desugar(raw, rng);
  ASSERT_EQ(p.size(), 3);
  EXPECT_EQ(p[0], Statement::assign(0, 0, 17));
  EXPECT_EQ(p[1].kind, StatementKind::kPass);
  EXPECT_EQ(p[2].kind, StatementKind::kExit);
}

TEST(DesugarTest, NestedRepeatsUseDistinctCounters) {
  SamplerLimits limits;
  limits.min_lines = 20;
  limits.max_lines = 40;
  limits.weights.repeat = 8;
  Rng rng(99);
  int nested_seen = 0;
  for (int i = 0; i < 2000; ++i) {
    Program p = desugar(sample_program(rng, limits), rng);
    std::vector<std::pair<int, int>> open;  // (indent, counter)
    for (const auto& s : p.statements) {
      while (!open.empty() && open.back().first >= s.indent) open.pop_back();
      if (s.kind == StatementKind::kWhile) {
        for (const auto& [indent, var] : open) ASSERT_NE(var, s.var);
        if (!open.empty()) ++nested_seen;
        open.push_back({s.indent, s.var});
      }
    }
  }
  EXPECT_GT(nested_seen, 100);
}

TEST(DesugarTest, CounterChoiceIsSpreadOverAllNine) {
  RawProgram raw;
  RawStatement repeat;
  repeat.kind = RawStatement::Kind::kRepeat;
  repeat.operand = 1;
  repeat.body = {RawStatement{}};
  raw.body = {repeat};
  Rng rng(5);
  std::set<int> seen;
  for (int i = 0; i < 500; ++i) seen.insert(desugar(raw, rng)[1].var);
  EXPECT_EQ(seen.size(), 9u);
}

}  // namespace
}  // namespace ipagnn
