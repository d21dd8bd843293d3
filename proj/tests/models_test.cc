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
#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ipagnn/datagen.h"
#include "ipagnn/gradcheck.h"
#include "ipagnn/models.h"

namespace ipagnn {
namespace {

constexpr int kH = 8;

std::vector<Example> sampled(int count, int min_lines, int max_lines,
                             std::uint64_t seed) {
  std::vector<Example> out;
  Rng rng(seed);
  SamplerLimits limits;
  limits.min_lines = min_lines;
  limits.max_lines = max_lines;
  for (int i = 0; i < count; ++i) {
    const RawProgram raw = sample_program(rng, limits);
    out.push_back(
        make_example(desugar(raw, rng), "p" + std::to_string(i)));
  }
  return out;
}

// Programs made of assignments only, so every trace is 0, 1, ..., exit.
std::vector<Example> straight_line(int count, std::uint64_t seed) {
  static const char* kOps[] = {"=", "+=", "-=", "*="};
  std::vector<Example> out;
  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    const int lines = 1 + static_cast<int>(rng.uniform_int(0, 7));
    std::string text = "v0 = " + std::to_string(rng.uniform_int(0, 9)) + "\n";
    for (int k = 1; k < lines; ++k) {
      text += "v0 " + std::string(kOps[rng.uniform_int(0, 3)]) + " " +
              std::to_string(rng.uniform_int(0, 9)) + "\n";
    }
    out.push_back(make_example(parse(text), "s" + std::to_string(i)));
  }
  return out;
}

GraphBatch single(const Example& e, bool traces = false) {
  const Example* p = &e;
  return make_batch(std::span<const Example* const>(&p, 1), traces);
}

template <typename T>
void set_branch_bias(ParameterStore<T>& s, T true_logit, T false_logit) {
  auto& w = s.get("branch.W").value;
  std::fill(w.begin(), w.end(), T(0));
  s.get("branch.b").value = {true_logit, false_logit};
}

// Rows [begin, end) of a recorded [rows, cols] matrix.
std::vector<double> row(const std::vector<double>& m, int cols, int r) {
  return {m.begin() + static_cast<std::ptrdiff_t>(r) * cols,
          m.begin() + static_cast<std::ptrdiff_t>(r + 1) * cols};
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  EXPECT_EQ(a.size(), b.size());
  double worst = 0;
  for (size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

std::vector<double> logits_of(ModelKind kind, ParameterStore<double>& s,
                              const GraphBatch& b, ForwardOptions o = {}) {
  ad::Tape<double> tape;
  auto r = forward(kind, tape, s, b, o);
  return {r.logits.value().begin(), r.logits.value().end()};
}

// ---------------------------------------------------------------------------
// Construction.

TEST(ModelParameters, CountsMatchClosedForm) {
  for (ModelKind k : kAllModels) {
    for (int h : {8, 16, 128}) {
      const auto s = make_parameters<float>(k, h, 1);
      EXPECT_EQ(s.count(), expected_parameter_count(k, h))
          << model_name(k) << " H=" << h;
    }
  }
}

TEST(ModelParameters, SharedGroupsStartEqualAcrossModels) {
  const auto ipa = make_parameters<double>(ModelKind::kIpagnn, kH, 42);
  for (ModelKind k : kAllModels) {
    const auto other = make_parameters<double>(k, kH, 42);
    for (const auto& p : other.all()) {
      if (!ipa.contains(p.name)) continue;
      EXPECT_EQ(p.value, ipa.get(p.name).value)
          << model_name(k) << " " << p.name;
    }
  }
}

std::set<std::string> groups(ModelKind k) {
  const auto g = parameter_groups(k);
  return {g.begin(), g.end()};
}

std::set<std::string> minus(const std::set<std::string>& a,
                            const std::set<std::string>& b) {
  std::set<std::string> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::inserter(out, out.end()));
  return out;
}

TEST(ModelParameters, AblationCensus) {
  const auto ipa = groups(ModelKind::kIpagnn);
  const auto nocontrol = groups(ModelKind::kNoControl);
  const auto noexecute = groups(ModelKind::kNoExecute);
  EXPECT_EQ(minus(ipa, nocontrol), std::set<std::string>({"branch"}));
  EXPECT_EQ(minus(ipa, noexecute), std::set<std::string>({"lstm"}));

  std::set<std::string> ggnn =
      minus(ipa, std::set<std::string>({"lstm", "branch"}));
  for (const auto& g : minus(nocontrol, ipa)) ggnn.insert(g);
  for (const auto& g : minus(noexecute, ipa)) ggnn.insert(g);
  EXPECT_EQ(ggnn, groups(ModelKind::kGgnn));
}

TEST(ModelParameters, NamesRoundTrip) {
  for (ModelKind k : kAllModels) EXPECT_EQ(parse_model_kind(model_name(k)), k);
  EXPECT_THROW(parse_model_kind("transformer"), UsageError);
}

// ---------------------------------------------------------------------------
// Batching.

TEST(GraphBatch, SortedByBudgetWithPrefixActivity) {
  const auto ex = sampled(40, 2, 12, 3);
  const GraphBatch b = make_batch(ex);
  ASSERT_EQ(b.size(), 40);
  EXPECT_TRUE(std::is_sorted(b.steps.rbegin(), b.steps.rend()));
  std::set<int> seen(b.order.begin(), b.order.end());
  EXPECT_EQ(seen.size(), 40u);
  for (int t = 0; t <= b.max_steps() + 1; ++t) {
    int expect = 0;
    for (int s : b.steps) expect += s >= t;
    EXPECT_EQ(b.active(t), expect);
  }
  for (int pos = 0; pos < b.size(); ++pos) {
    EXPECT_EQ(b.examples[pos], &ex[b.order[pos]]);
    for (int k = b.edge_offset[pos]; k < b.edge_offset[pos + 1]; ++k) {
      EXPECT_GE(b.src[k], b.node_offset[pos]);
      EXPECT_LT(b.dst[k], b.node_offset[pos + 1]);
    }
  }
}

TEST(GraphBatch, TypedEdgesMatchCfg) {
  for (const Example& e : sampled(30, 2, 12, 5)) {
    const GraphBatch b = single(e);
    const auto expect = typed_edges(build_cfg(parse(e.source)));
    ASSERT_EQ(static_cast<size_t>(b.typed_offset[1]), expect.size());
    ASSERT_EQ(expect.size(), 2 * b.src.size());
    for (size_t k = 0; k < expect.size(); ++k) {
      EXPECT_EQ(b.typed_src[k], expect[k].source);
      EXPECT_EQ(b.typed_dst[k], expect[k].dest);
      EXPECT_EQ(b.typed_type[k], static_cast<int>(expect[k].type));
    }
  }
}

// ---------------------------------------------------------------------------
// Soft instruction pointer.

void expect_pointer_is_distribution(ModelKind kind, std::uint64_t seed) {
  auto s = make_parameters<double>(kind, kH, seed);
  for (const Example& e : sampled(25, 2, 15, seed)) {
    const GraphBatch b = single(e);
    ad::Tape<double> tape;
    ForwardOptions o;
    o.record = true;
    const auto r = forward(kind, tape, s, b, o);
    const int n = e.node_count();
    ASSERT_EQ(static_cast<int>(r.pointer.size()), e.step_budget + 1);
    // Nodes reachable in exactly t steps.
    std::vector<char> reach(n, 0);
    reach[0] = 1;
    for (int t = 0; t <= e.step_budget; ++t) {
      const auto& p = r.pointer[t];
      ASSERT_EQ(static_cast<int>(p.size()), n);
      double mass = 0;
      for (int v = 0; v < n; ++v) {
        EXPECT_GE(p[v], 0.0);
        if (!reach[v]) EXPECT_EQ(p[v], 0.0) << "t=" << t << " node " << v;
        mass += p[v];
      }
      EXPECT_NEAR(mass, 1.0, 1e-12) << e.id << " t=" << t;
      std::vector<char> next(n, 0);
      for (int v = 0; v < n; ++v) {
        if (!reach[v]) continue;
        for (int w : e.successors[v]) next[w] = 1;
      }
      reach = next;
    }
  }
}

TEST(SoftPointer, IpagnnConservesMassOnReachableNodes) {
  expect_pointer_is_distribution(ModelKind::kIpagnn, 11);
}

TEST(SoftPointer, NoExecuteConservesMassOnReachableNodes) {
  expect_pointer_is_distribution(ModelKind::kNoExecute, 12);
}

TEST(SoftPointer, SaturatedBranchesGiveOneHotPointer) {
  auto s = make_parameters<double>(ModelKind::kIpagnn, kH, 4);
  set_branch_bias(s, -40.0, 40.0);
  const Example e = make_example(parse(
      "v0 = 3\nif v0 % 10 < 5:\n  v0 += 1\nelse:\n  v0 -= 1\nv0 *= 2\n"), "b");
  ad::Tape<double> tape;
  ForwardOptions o;
  o.record = true;
  const auto r = forward(ModelKind::kIpagnn, tape, s, single(e), o);
  // Always-false: 0 -> 1 -> else(3) -> 4 -> 5 -> exit.
  const std::vector<int> path = {0, 1, 3, 4, 5, 6, 6, 6, 6, 6, 6, 6, 6};
  for (size_t t = 0; t < r.pointer.size(); ++t) {
    for (int v = 0; v < e.node_count(); ++v) {
      EXPECT_NEAR(r.pointer[t][v], v == path[t] ? 1.0 : 0.0, 1e-15)
          << "t=" << t << " node " << v;
    }
  }
}

TEST(SoftPointer, AttentionHasOneRowPerStep) {
  auto s = make_parameters<float>(ModelKind::kIpagnn, 16, 9);
  for (const Example& e : sampled(10, 3, 20, 9)) {
    ad::Tape<float> tape;
    ForwardOptions o;
    o.record = true;
    const auto r = forward(ModelKind::kIpagnn, tape, s, single(e), o);
    ASSERT_EQ(static_cast<int>(r.pointer.size()), e.step_budget + 1);
    for (const auto& p : r.pointer) {
      EXPECT_EQ(static_cast<int>(p.size()), e.node_count());
    }
  }
}

// ---------------------------------------------------------------------------
// Equivalences between models that share weights.

TEST(Equivalence, SaturatedIpagnnMatchesHardIpRnn) {
  const auto ex = sampled(100, 2, 12, 21);
  for (const double sign : {1.0, -1.0}) {
    auto s = make_parameters<double>(ModelKind::kIpagnn, kH, 21);
    set_branch_bias(s, 40.0 * sign, -40.0 * sign);
    int compared_logits = 0;
    for (const Example& e : ex) {
      const GraphBatch b = single(e);
      ForwardOptions o;
      o.record = true;
      ad::Tape<double> t1, t2;
      const auto soft = forward(ModelKind::kIpagnn, t1, s, b, o);
      const auto hard = forward(ModelKind::kHardIp, t2, s, b, o);
      const auto& path = hard.path[0];
      ASSERT_EQ(static_cast<int>(path.size()), e.step_budget + 1);
      for (int t = 0; t <= e.step_budget; ++t) {
        const auto node_state = row(soft.states[t], 4 * kH, path[t]);
        EXPECT_LT(max_abs_diff(node_state, hard.states[t]), 1e-6)
            << e.id << " t=" << t;
      }
      if (path.back() == e.exit_index()) {
        ++compared_logits;
        EXPECT_LT(max_abs_diff({soft.logits.value().begin(),
                                soft.logits.value().end()},
                               {hard.logits.value().begin(),
                                hard.logits.value().end()}),
                  1e-6)
            << e.id;
      }
    }
    EXPECT_GT(compared_logits, 10);
  }
}

TEST(Equivalence, OracleHardIpRnnMatchesTraceStepwise) {
  auto s = make_parameters<double>(ModelKind::kHardIp, kH, 22);
  for (const Example& e : sampled(100, 2, 12, 22)) {
    const GraphBatch b = single(e, true);
    ForwardOptions o;
    o.record = true;
    o.oracle_branches = true;
    ad::Tape<double> t1, t2;
    const auto hard = forward(ModelKind::kHardIp, t1, s, b, o);
    const auto trace = forward(ModelKind::kTrace, t2, s, b, o);
    const auto& tr = e.trace();
    const int steps = std::min<int>(e.step_budget, tr.size());
    for (int t = 0; t <= steps; ++t) {
      EXPECT_LT(max_abs_diff(hard.states[t], trace.states[t]), 1e-6)
          << e.id << " t=" << t;
    }
    for (int t = 0; t <= e.step_budget && t < static_cast<int>(tr.size());
         ++t) {
      EXPECT_EQ(hard.path[0][t], tr[t]);
    }
  }
}

TEST(Equivalence, StraightLineTraceMatchesLine) {
  auto s = make_parameters<double>(ModelKind::kLine, kH, 23);
  for (const Example& e : straight_line(100, 23)) {
    const GraphBatch b = single(e, true);
    EXPECT_EQ(logits_of(ModelKind::kTrace, s, b),
              logits_of(ModelKind::kLine, s, b))
        << e.source;
  }
}

TEST(Equivalence, StraightLineIpagnnDiagonalMatchesLine) {
  auto s = make_parameters<double>(ModelKind::kIpagnn, kH, 24);
  for (const Example& e : straight_line(100, 24)) {
    const GraphBatch b = single(e);
    ForwardOptions o;
    o.record = true;
    ad::Tape<double> t1, t2;
    const auto ipa = forward(ModelKind::kIpagnn, t1, s, b, o);
    const auto line = forward(ModelKind::kLine, t2, s, b, o);
    const int steps = std::min<int>(e.step_budget, e.node_count());
    for (int t = 0; t <= steps; ++t) {
      const int node = std::min(t, e.exit_index());
      EXPECT_LT(max_abs_diff(row(ipa.states[t], 4 * kH, node),
                             line.states[t]),
                1e-9)
          << e.id << " t=" << t;
    }
  }
}

// ---------------------------------------------------------------------------

TEST(Forward, PackedBatchMatchesSingletons) {
  const auto ex = sampled(12, 2, 14, 31);
  for (ModelKind k : kAllModels) {
    auto s = make_parameters<double>(k, kH, 31);
    const GraphBatch packed = make_batch(ex, true);
    const auto all = logits_of(k, s, packed);
    for (int pos = 0; pos < packed.size(); ++pos) {
      const auto one = logits_of(k, s, single(*packed.examples[pos], true));
      EXPECT_LT(max_abs_diff(row(all, kNumClasses, pos), one), 1e-6)
          << model_name(k) << " " << packed.examples[pos]->id;
    }
  }
}

TEST(Forward, PredictionsFollowCallerOrder) {
  const auto ex = sampled(9, 2, 14, 32);
  auto s = make_parameters<double>(ModelKind::kIpagnn, kH, 32);
  ad::Tape<double> tape;
  const GraphBatch b = make_batch(ex);
  const auto preds = predictions(forward(ModelKind::kIpagnn, tape, s, b), b);
  for (size_t i = 0; i < ex.size(); ++i) {
    const auto one = logits_of(ModelKind::kIpagnn, s, single(ex[i]));
    EXPECT_EQ(preds[i], std::max_element(one.begin(), one.end()) - one.begin());
  }
}

TEST(Forward, FiniteLogitsOnThousandPrograms) {
  const auto ex = sampled(1000, 2, 30, 33);
  for (ModelKind k : kAllModels) {
    auto s = make_parameters<float>(k, 16, 33);
    for (size_t i = 0; i < ex.size(); i += 50) {
      std::vector<const Example*> chunk;
      for (size_t j = i; j < std::min(ex.size(), i + 50); ++j) {
        chunk.push_back(&ex[j]);
      }
      const GraphBatch b =
          make_batch(std::span<const Example* const>(chunk), reads_trace(k));
      ad::Tape<float> tape;
      const auto r = forward(k, tape, s, b);
      for (float v : r.logits.value()) ASSERT_TRUE(std::isfinite(v));
    }
  }
}

TEST(Forward, TraceMustEndAtExit) {
  Example e = make_example(parse("v0 = 1\nv0 += 2\n"), "cut");
  auto s = make_parameters<double>(ModelKind::kTrace, kH, 1);
  std::vector<int> tr = e.trace();
  tr.pop_back();
  e.set_trace(tr);
  try {
    logits_of(ModelKind::kTrace, s, single(e, true));
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& err) {
    EXPECT_NE(std::string(err.what()).find("cut"), std::string::npos);
  }
}

TEST(Forward, TraceModelNeedsTrace) {
  const Example e = make_example(parse("v0 = 1\n"), "bare", false);
  EXPECT_THROW(single(e, true), SchemaError);
  auto s = make_parameters<double>(ModelKind::kTrace, kH, 1);
  EXPECT_THROW(logits_of(ModelKind::kTrace, s, single(e)), UsageError);
}

TEST(Forward, NonFiniteStateNamesStepAndExample) {
  const Example e = make_example(parse("v0 = 1\nv0 += 2\n"), "nan-here");
  for (ModelKind k : kAllModels) {
    auto s = make_parameters<double>(k, kH, 2);
    s.get("embed.proj.b").value[0] = std::nan("");
    try {
      logits_of(k, s, single(e, true));
      ADD_FAILURE() << model_name(k) << ": expected NumericError";
    } catch (const NumericError& err) {
      const std::string what = err.what();
      EXPECT_NE(what.find("step 1"), std::string::npos) << what;
      EXPECT_NE(what.find("nan-here"), std::string::npos) << what;
    }
  }
}

// ---------------------------------------------------------------------------
// Gradients.

class ModelGradient : public ::testing::TestWithParam<ModelKind> {};

TEST_P(ModelGradient, MatchesCentralDifferences) {
  const ModelKind kind = GetParam();
  // Covers a branch, a loop back edge, break and the exit self-loop.
  const std::vector<Example> examples = {
      make_example(parse("v0 = 4\nwhile v0 > 0:\n  v0 -= 1\n"
                         "  if v0 % 10 < 2:\n    break\n"),
                   "loop"),
      make_example(parse("v0 = 7\nif v0 % 10 >= 3:\n  v0 *= 2\nelse:\n"
                         "  v0 += 5\n"),
                   "branch")};
  const GraphBatch batch = make_batch(examples, true);
  auto store = make_parameters<double>(kind, kH, 41);
  auto loss = [&](auto& tape, auto& params) {
    return batch_loss(tape, forward(kind, tape, params, batch), batch);
  };
  const GradCheckReport r = grad_check(loss, store);
  EXPECT_EQ(r.coordinates, store.count());
  EXPECT_LT(r.max_rel_error, 1e-4)
      << r.worst_parameter << "[" << r.worst_index << "] analytic "
      << r.analytic << " numeric " << r.numeric;
}

INSTANTIATE_TEST_SUITE_P(AllModels, ModelGradient,
                         ::testing::ValuesIn(kAllModels),
                         [](const auto& info) {
                           return std::string(model_name(info.param));
                         });

}  // namespace
}  // namespace ipagnn
