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

#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "ipagnn/errors.h"

namespace ipagnn {

// Deepest indentation level a Program may use. The default sampler stays at
// or below 4; hand-written programs may go deeper up to this cap.
inline constexpr int kMaxIndent = 8;
inline constexpr int kNumVariables = 10;
inline constexpr int kMaxConstant = 999;

enum class ArithOp { kAdd, kSub, kMul };
enum class Comparator { kGt, kLt, kGe, kLe };

enum class StatementKind {
  kAssign,     // vX = N
  kAugAssign,  // vX op= N
  kWhile,      // while vX > N:
  kIf,         // if vX % 10 O N:
  kElse,       // else:
  kBreak,
  kContinue,
  kPass,
  kExit,       // appended <exit> node, never rendered
};

struct Statement {
  StatementKind kind = StatementKind::kPass;
  int indent = 0;
  int var = 0;
  int operand = 0;
  ArithOp op = ArithOp::kAdd;
  Comparator cmp = Comparator::kGt;

  bool operator==(const Statement& other) const {
    if (kind != other.kind || indent != other.indent) return false;
    switch (kind) {
      case StatementKind::kAssign:
      case StatementKind::kWhile:
        return var == other.var && operand == other.operand;
      case StatementKind::kAugAssign:
        return var == other.var && operand == other.operand &&
               op == other.op;
      case StatementKind::kIf:
        return var == other.var && operand == other.operand &&
               cmp == other.cmp;
      default:
        return true;
    }
  }

  bool is_branch() const {
    return kind == StatementKind::kIf || kind == StatementKind::kWhile;
  }
  // Assignment or augmented assignment: the statements eligible for masking
  // when they write v0.
  bool is_expression() const {
    return kind == StatementKind::kAssign || kind == StatementKind::kAugAssign;
  }
  bool opens_block() const {
    return kind == StatementKind::kIf || kind == StatementKind::kWhile ||
           kind == StatementKind::kElse;
  }

  static Statement assign(int indent, int var, int value) {
    return {StatementKind::kAssign, indent, var, value};
  }
  static Statement aug_assign(int indent, int var, ArithOp op, int value) {
    Statement s{StatementKind::kAugAssign, indent, var, value};
    s.op = op;
    return s;
  }
  static Statement while_gt(int indent, int var, int value) {
    return {StatementKind::kWhile, indent, var, value};
  }
  static Statement if_mod10(int indent, Comparator cmp, int value) {
    Statement s{StatementKind::kIf, indent, 0, value};
    s.cmp = cmp;
    return s;
  }
  static Statement bare(StatementKind kind, int indent) {
    return {kind, indent};
  }
};

// A desugared program: dense line numbers 0..exit_index() with the <exit>
// node last.
struct Program {
  std::vector<Statement> statements;

  int size() const { return static_cast<int>(statements.size()); }
  int exit_index() const { return size() - 1; }
  // Number of source lines, excluding <exit>.
  int complexity() const { return size() - 1; }
  const Statement& operator[](int n) const { return statements[n]; }

  bool operator==(const Program& other) const = default;
};

// ---------------------------------------------------------------------------
// Token vocabularies for the per-line (indent, op, var, operand) encoding.

namespace vocab {

inline constexpr int kIndentExit = kMaxIndent + 1;
inline constexpr int kIndentSize = kMaxIndent + 2;

enum Op : int {
  kOpAssign,
  kOpAddAssign,
  kOpSubAssign,
  kOpMulAssign,
  kOpWhileGt,
  kOpIfGtMod,
  kOpIfLtMod,
  kOpIfGeMod,
  kOpIfLeMod,
  kOpElse,
  kOpBreak,
  kOpContinue,
  kOpPass,
  kOpExit,
  kOpMask,
  kOpSize,
};

inline constexpr int kVarNone = kNumVariables;
inline constexpr int kVarMask = kNumVariables + 1;
inline constexpr int kVarSize = kNumVariables + 2;

inline constexpr int kOperandNone = kMaxConstant + 1;
inline constexpr int kOperandMask = kMaxConstant + 2;
inline constexpr int kOperandSize = kMaxConstant + 3;

inline constexpr std::array<std::string_view, kOpSize> kOpNames = {
    "=",        "+=",       "-=",   "*=",    "while >",
    "if > %",   "if < %",   "if >= %", "if <= %", "else",
    "break",    "continue", "pass", "EXIT",  "MASK"};

inline std::string var_name(int token) {
  if (token == kVarNone) return "NONE";
  if (token == kVarMask) return "MASK";
  return "v" + std::to_string(token);
}

inline std::string operand_name(int token) {
  if (token == kOperandNone) return "NONE";
  if (token == kOperandMask) return "MASK";
  return std::to_string(token);
}

}  // namespace vocab

struct StatementTuple {
  int indent = 0;
  int op = 0;
  int var = 0;
  int operand = 0;

  bool operator==(const StatementTuple&) const = default;

  static StatementTuple masked(int indent) {
    return {indent, vocab::kOpMask, vocab::kVarMask, vocab::kOperandMask};
  }
  bool is_masked() const { return op == vocab::kOpMask; }
};

inline StatementTuple tokenize_statement(const Statement& s) {
  using namespace vocab;
  switch (s.kind) {
    case StatementKind::kAssign:
      return {s.indent, kOpAssign, s.var, s.operand};
    case StatementKind::kAugAssign: {
      constexpr int kByOp[] = {kOpAddAssign, kOpSubAssign, kOpMulAssign};
      return {s.indent, kByOp[static_cast<int>(s.op)], s.var, s.operand};
    }
    case StatementKind::kWhile:
      return {s.indent, kOpWhileGt, s.var, s.operand};
    case StatementKind::kIf: {
      constexpr int kByCmp[] = {kOpIfGtMod, kOpIfLtMod, kOpIfGeMod,
                                kOpIfLeMod};
      return {s.indent, kByCmp[static_cast<int>(s.cmp)], s.var, s.operand};
    }
    case StatementKind::kElse:
      return {s.indent, kOpElse, kVarNone, kOperandNone};
    case StatementKind::kBreak:
      return {s.indent, kOpBreak, kVarNone, kOperandNone};
    case StatementKind::kContinue:
      return {s.indent, kOpContinue, kVarNone, kOperandNone};
    case StatementKind::kPass:
      return {s.indent, kOpPass, kVarNone, kOperandNone};
    case StatementKind::kExit:
      break;
  }
  return {kIndentExit, kOpExit, kVarNone, kOperandNone};
}

inline std::vector<StatementTuple> tokenize(const Program& p) {
  std::vector<StatementTuple> out;
  out.reserve(p.statements.size());
  for (const auto& s : p.statements) out.push_back(tokenize_statement(s));
  return out;
}

// ---------------------------------------------------------------------------
// Surface syntax.

inline std::string_view arith_symbol(ArithOp op) {
  switch (op) {
    case ArithOp::kAdd: return "+=";
    case ArithOp::kSub: return "-=";
    case ArithOp::kMul: return "*=";
  }
  return "?";
}

inline std::string_view comparator_symbol(Comparator cmp) {
  switch (cmp) {
    case Comparator::kGt: return ">";
    case Comparator::kLt: return "<";
    case Comparator::kGe: return ">=";
    case Comparator::kLe: return "<=";
  }
  return "?";
}

// Statement text without indentation.
inline std::string statement_text(const Statement& s) {
  const std::string var = "v" + std::to_string(s.var);
  const std::string value = std::to_string(s.operand);
  switch (s.kind) {
    case StatementKind::kAssign:
      return var + " = " + value;
    case StatementKind::kAugAssign:
      return var + " " + std::string(arith_symbol(s.op)) + " " + value;
    case StatementKind::kWhile:
      return "while " + var + " > " + value + ":";
    case StatementKind::kIf:
      return "if " + var + " % 10 " + std::string(comparator_symbol(s.cmp)) +
             " " + value + ":";
    case StatementKind::kElse: return "else:";
    case StatementKind::kBreak: return "break";
    case StatementKind::kContinue: return "continue";
    case StatementKind::kPass: return "pass";
    case StatementKind::kExit: return "<exit>";
  }
  return "";
}

inline std::string render_line(const Statement& s) {
  return std::string(2 * s.indent, ' ') + statement_text(s);
}

// Renders every line except <exit>, LF-terminated.
inline std::string render(const Program& p) {
  std::string out;
  for (const auto& s : p.statements) {
    if (s.kind == StatementKind::kExit) continue;
    out += render_line(s);
    out += '\n';
  }
  return out;
}

namespace detail {

class LineScanner {
 public:
  LineScanner(std::string_view text, int line, int column)
      : text_(text), line_(line), column0_(column) {}

  void skip_spaces() {
    while (pos_ < text_.size() && text_[pos_] == ' ') ++pos_;
  }

  bool done() {
    skip_spaces();
    return pos_ >= text_.size();
  }

  bool try_literal(std::string_view lit) {
    skip_spaces();
    if (text_.substr(pos_, lit.size()) != lit) return false;
    // Keywords must not run into identifier characters.
    if (std::isalpha(static_cast<unsigned char>(lit.back())) &&
        pos_ + lit.size() < text_.size() &&
        std::isalnum(static_cast<unsigned char>(text_[pos_ + lit.size()]))) {
      return false;
    }
    pos_ += lit.size();
    return true;
  }

  void expect(std::string_view lit) {
    if (!try_literal(lit)) fail("expected '" + std::string(lit) + "'");
  }

  int expect_var() {
    skip_spaces();
    if (pos_ + 1 < text_.size() && text_[pos_] == 'v' &&
        std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) &&
        (pos_ + 2 >= text_.size() ||
         !std::isalnum(static_cast<unsigned char>(text_[pos_ + 2])))) {
      int var = text_[pos_ + 1] - '0';
      pos_ += 2;
      return var;
    }
    fail("expected variable v0..v9");
  }

  int expect_number(int max_value) {
    skip_spaces();
    size_t start = pos_;
    long long value = 0;
    while (pos_ < text_.size() &&
           std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      value = value * 10 + (text_[pos_] - '0');
      if (value > max_value) {
        pos_ = start;
        fail("constant out of range 0.." + std::to_string(max_value));
      }
      ++pos_;
    }
    if (pos_ == start) fail("expected integer constant");
    return static_cast<int>(value);
  }

  void expect_end() {
    if (!done()) fail("unexpected trailing text");
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(line_, column0_ + static_cast<int>(pos_), message);
  }

 private:
  std::string_view text_;
  size_t pos_ = 0;
  int line_;
  int column0_;
};

inline Statement parse_statement(std::string_view body, int indent, int line,
                                 int column) {
  LineScanner sc(body, line, column);
  if (sc.try_literal("while")) {
    int var = sc.expect_var();
    sc.expect(">");
    int value = sc.expect_number(kMaxConstant);
    sc.expect(":");
    sc.expect_end();
    return Statement::while_gt(indent, var, value);
  }
  if (sc.try_literal("if")) {
    int var = sc.expect_var();
    sc.expect("%");
    sc.expect("10");
    Comparator cmp;
    if (sc.try_literal(">=")) {
      cmp = Comparator::kGe;
    } else if (sc.try_literal("<=")) {
      cmp = Comparator::kLe;
    } else if (sc.try_literal(">")) {
      cmp = Comparator::kGt;
    } else if (sc.try_literal("<")) {
      cmp = Comparator::kLt;
    } else {
      sc.fail("expected comparator");
    }
    int value = sc.expect_number(kMaxConstant);
    sc.expect(":");
    sc.expect_end();
    Statement s = Statement::if_mod10(indent, cmp, value);
    s.var = var;
    return s;
  }
  if (sc.try_literal("else")) {
    sc.expect(":");
    sc.expect_end();
    return Statement::bare(StatementKind::kElse, indent);
  }
  if (sc.try_literal("break")) {
    sc.expect_end();
    return Statement::bare(StatementKind::kBreak, indent);
  }
  if (sc.try_literal("continue")) {
    sc.expect_end();
    return Statement::bare(StatementKind::kContinue, indent);
  }
  if (sc.try_literal("pass")) {
    sc.expect_end();
    return Statement::bare(StatementKind::kPass, indent);
  }
  int var = sc.expect_var();
  Statement s;
  if (sc.try_literal("+=")) {
    s = Statement::aug_assign(indent, var, ArithOp::kAdd, 0);
  } else if (sc.try_literal("-=")) {
    s = Statement::aug_assign(indent, var, ArithOp::kSub, 0);
  } else if (sc.try_literal("*=")) {
    s = Statement::aug_assign(indent, var, ArithOp::kMul, 0);
  } else if (sc.try_literal("=")) {
    s = Statement::assign(indent, var, 0);
  } else {
    sc.fail("expected assignment operator");
  }
  s.operand = sc.expect_number(kMaxConstant);
  sc.expect_end();
  return s;
}

}  // namespace detail

// Checks the block structure of a statement list (without <exit>):
// indentation steps, `else:` placement, and break/continue nesting.
inline void validate_structure(const std::vector<Statement>& stmts) {
  std::vector<const Statement*> open;  // enclosing compound statements
  std::array<int, kMaxIndent + 1> last_at_indent;
  last_at_indent.fill(-1);

  for (int i = 0; i < static_cast<int>(stmts.size()); ++i) {
    const Statement& s = stmts[i];
    const int line = i + 1;
    const int column = 2 * s.indent + 1;
    if (s.kind == StatementKind::kExit) {
      throw ParseError(line, 1, "<exit> may only appear as the final node");
    }
    if (s.indent < 0 || s.indent > kMaxIndent) {
      throw IndentationError(line, 1,
                             "indent exceeds " + std::to_string(kMaxIndent));
    }
    if (i == 0) {
      if (s.indent != 0) throw IndentationError(line, 1, "unexpected indent");
    } else {
      const Statement& prev = stmts[i - 1];
      if (prev.opens_block()) {
        if (s.indent != prev.indent + 1) {
          throw IndentationError(line, 1, "expected an indented block");
        }
      } else if (s.indent > prev.indent) {
        throw IndentationError(line, 1, "unexpected indent");
      }
    }
    while (!open.empty() && open.back()->indent >= s.indent) open.pop_back();
    for (int d = s.indent + 1; d <= kMaxIndent; ++d) last_at_indent[d] = -1;

    if (s.kind == StatementKind::kElse) {
      const int j = last_at_indent[s.indent];
      if (j < 0 || stmts[j].kind != StatementKind::kIf) {
        throw ParseError(line, column, "'else' without matching 'if'");
      }
    }
    if (s.kind == StatementKind::kBreak || s.kind == StatementKind::kContinue) {
      bool in_loop = false;
      for (const Statement* o : open) {
        in_loop |= o->kind == StatementKind::kWhile;
      }
      if (!in_loop) {
        throw ParseError(line, column,
                         std::string(s.kind == StatementKind::kBreak
                                         ? "'break'"
                                         : "'continue'") +
                             " outside loop");
      }
    }
    if (s.opens_block()) open.push_back(&s);
    last_at_indent[s.indent] = i;
  }
  if (!stmts.empty() && stmts.back().opens_block()) {
    throw IndentationError(static_cast<int>(stmts.size()) + 1, 1,
                           "expected an indented block");
  }
}

// Parses program text (2-space indents, LF endings) and appends <exit>.
inline Program parse(std::string_view text) {
  Program p;
  int line_no = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      throw ParseError(line_no, static_cast<int>(line.size()),
                       "CR line endings are not supported");
    }
    size_t spaces = 0;
    while (spaces < line.size() && line[spaces] == ' ') ++spaces;
    if (spaces < line.size() && line[spaces] == '\t') {
      throw IndentationError(line_no, static_cast<int>(spaces) + 1,
                             "tab characters are not allowed");
    }
    if (spaces == line.size()) {
      throw ParseError(line_no, 1, "blank line");
    }
    if (spaces % 2 != 0) {
      throw IndentationError(line_no, 1,
                             "indent must be a multiple of 2 spaces");
    }
    p.statements.push_back(detail::parse_statement(
        line.substr(spaces), static_cast<int>(spaces / 2), line_no,
        static_cast<int>(spaces) + 1));
  }
  if (p.statements.empty() ||
      p.statements[0].kind != StatementKind::kAssign ||
      p.statements[0].var != 0) {
    throw ParseError(1, 1, "program must begin with v0 = M");
  }
  validate_structure(p.statements);
  p.statements.push_back(Statement::bare(StatementKind::kExit, 0));
  return p;
}

}  // namespace ipagnn
