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
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ipagnn/cfg.h"
#include "ipagnn/errors.h"
#include "ipagnn/program.h"

namespace ipagnn {

using BigInt = boost::multiprecision::cpp_int;

inline constexpr int kNumClasses = 1000;
inline constexpr long long kDefaultStepLimit = 1'000'000;

// Mathematical modulus: always in [0, m).
inline BigInt floor_mod(const BigInt& value, int m) {
  BigInt r = value % m;
  if (r < 0) r += m;
  return r;
}

struct Environment {
  std::array<std::optional<BigInt>, kNumVariables> values;

  bool defined(int var) const { return values[var].has_value(); }
  bool operator==(const Environment&) const = default;
};

struct ExecutionResult {
  Environment final_env;
  std::vector<int> trace;  // n*_0 = 0, ..., exit
  int target = 0;
};

// Class label of a final environment: v0 reduced into 0..999.
inline int target_of(const Environment& env) {
  if (!env.defined(0)) throw UndefinedVariable(0, -1);
  return static_cast<int>(floor_mod(*env.values[0], kNumClasses));
}

inline ExecutionResult execute(
    const Program& p, const ControlFlowGraph& g,
    std::optional<long long> step_limit = kDefaultStepLimit) {
  ExecutionResult r;
  Environment& env = r.final_env;
  auto read = [&](int var, int node) -> const BigInt& {
    if (!env.defined(var)) throw UndefinedVariable(var, node);
    return *env.values[var];
  };

  int n = 0;
  r.trace.push_back(n);
  while (n != g.exit_index) {
    if (step_limit && static_cast<long long>(r.trace.size()) > *step_limit) {
      throw StepLimitExceeded(*step_limit);
    }
    const Statement& s = p[n];
    int branch = 0;
    switch (s.kind) {
      case StatementKind::kAssign:
        env.values[s.var] = BigInt(s.operand);
        break;
      case StatementKind::kAugAssign: {
        BigInt value = read(s.var, n);
        switch (s.op) {
          case ArithOp::kAdd: value += s.operand; break;
          case ArithOp::kSub: value -= s.operand; break;
          case ArithOp::kMul: value *= s.operand; break;
        }
        env.values[s.var] = std::move(value);
        break;
      }
      case StatementKind::kWhile:
        branch = read(s.var, n) > s.operand ? 0 : 1;
        break;
      case StatementKind::kIf: {
        const int digit =
            static_cast<int>(floor_mod(read(s.var, n), 10));
        bool taken = false;
        switch (s.cmp) {
          case Comparator::kGt: taken = digit > s.operand; break;
          case Comparator::kLt: taken = digit < s.operand; break;
          case Comparator::kGe: taken = digit >= s.operand; break;
          case Comparator::kLe: taken = digit <= s.operand; break;
        }
        branch = taken ? 0 : 1;
        break;
      }
      default:
        break;
    }
    if (branch >= static_cast<int>(g.out[n].size())) {
      throw ExecutionError("node " + std::to_string(n) +
                           " has no false successor");
    }
    n = g.out[n][branch];
    r.trace.push_back(n);
  }
  r.target = target_of(env);
  return r;
}

// `name=value` pairs for defined variables, space separated.
inline std::string format_environment(const Environment& env) {
  std::string out;
  for (int v = 0; v < kNumVariables; ++v) {
    if (!env.defined(v)) continue;
    if (!out.empty()) out += ' ';
    out += "v" + std::to_string(v) + "=" + env.values[v]->str();
  }
  return out;
}

}  // namespace ipagnn
