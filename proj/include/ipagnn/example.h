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

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ipagnn/cfg.h"
#include "ipagnn/errors.h"
#include "ipagnn/interp.h"
#include "ipagnn/program.h"

namespace ipagnn {

// One supervised example: everything a model may see, plus the oracle
// trace, which only the Trace RNN is allowed to read.
class Example {
 public:
  std::string id;
  std::string source;
  std::vector<StatementTuple> tokens;        // one per node, <exit> last
  std::vector<std::vector<int>> successors;  // CFG out-lists, true first
  int step_budget = 0;
  int complexity = 0;
  int target = 0;
  std::optional<int> mask_index;

  int node_count() const { return static_cast<int>(tokens.size()); }
  int exit_index() const { return node_count() - 1; }

  bool has_trace() const { return trace_.has_value(); }
  bool trace_sealed() const { return sealed_; }
  const std::vector<int>& trace() const {
    if (sealed_) {
      throw UsageError("example " + id +
                       ": trace read by a model without oracle access");
    }
    if (!trace_) throw SchemaError("trace", "example " + id + " has no trace");
    return *trace_;
  }
  // Raw access for serialization; bypasses the seal.
  const std::optional<std::vector<int>>& stored_trace() const { return trace_; }
  void set_trace(std::optional<std::vector<int>> trace) {
    trace_ = std::move(trace);
  }
  void seal_trace(bool sealed = true) { sealed_ = sealed; }

  bool operator==(const Example& o) const {
    return id == o.id && source == o.source && tokens == o.tokens &&
           successors == o.successors && step_budget == o.step_budget &&
           complexity == o.complexity && target == o.target &&
           mask_index == o.mask_index && trace_ == o.trace_;
  }

 private:
  std::optional<std::vector<int>> trace_;
  bool sealed_ = false;
};

// Builds the full record for a desugared program by running the CFG
// builder, the step budget and the interpreter.
inline Example make_example(const Program& p, std::string id,
                            bool with_trace = true) {
  const ControlFlowGraph g = build_cfg(p);
  const StepBudget budget = step_budget(p, g);
  ExecutionResult run = execute(p, g);
  Example e;
  e.id = std::move(id);
  e.source = render(p);
  e.tokens = tokenize(p);
  e.successors = g.out;
  e.step_budget = static_cast<int>(budget.steps);
  e.complexity = p.complexity();
  e.target = run.target;
  if (with_trace) e.set_trace(std::move(run.trace));
  return e;
}

}  // namespace ipagnn
