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
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"

#include "ipagnn/errors.h"
#include "ipagnn/example.h"
#include "ipagnn/rng.h"
#include "ipagnn/sampler.h"

namespace ipagnn {

inline constexpr std::string_view kToolVersion = "ipagnn 1.0.0";

// ---------------------------------------------------------------------------
// Masking

// Node ids whose statement may be masked: v0 assignments and augmented
// assignments, line 0 included.
inline std::vector<int> maskable_lines(const Example& e) {
  std::vector<int> lines;
  for (int n = 0; n < e.exit_index(); ++n) {
    const StatementTuple& t = e.tokens[n];
    const bool expression = t.op == vocab::kOpAssign ||
                            t.op == vocab::kOpAddAssign ||
                            t.op == vocab::kOpSubAssign ||
                            t.op == vocab::kOpMulAssign;
    if (expression && t.var == 0) lines.push_back(n);
  }
  return lines;
}

// Replaces one uniformly chosen maskable statement by MASK tokens. Target,
// CFG and trace are those of the unmasked program.
inline Example mask_example(const Example& e, Rng& rng) {
  if (e.mask_index) {
    throw SchemaError("mask_index", "record " + e.id + " is already masked");
  }
  const std::vector<int> lines = maskable_lines(e);
  if (lines.empty()) {
    throw SchemaError("tokens", "record " + e.id + " has no maskable line");
  }
  const int n = lines[rng.uniform_int(0, static_cast<int>(lines.size()) - 1)];
  Example out = e;
  out.tokens[n] = StatementTuple::masked(e.tokens[n].indent);
  out.mask_index = n;
  return out;
}

// ---------------------------------------------------------------------------
// Record format: one JSON object per line.
//
//   {"id", "source", "tokens": [[indent, op, var, operand], ...],
//    "edges": [[src, dst, branch], ...]   branch 0 = true/fallthrough, 1 = false
//    "step_budget", "complexity", "target", "trace"?: [...], "mask_index"?}

inline std::string encode_record(const Example& e) {
  nlohmann::json j;
  j["id"] = e.id;
  j["source"] = e.source;
  nlohmann::json tokens = nlohmann::json::array();
  for (const auto& t : e.tokens) {
    tokens.push_back({t.indent, t.op, t.var, t.operand});
  }
  j["tokens"] = std::move(tokens);
  nlohmann::json edges = nlohmann::json::array();
  for (int n = 0; n < static_cast<int>(e.successors.size()); ++n) {
    for (size_t k = 0; k < e.successors[n].size(); ++k) {
      edges.push_back({n, e.successors[n][k], static_cast<int>(k)});
    }
  }
  j["edges"] = std::move(edges);
  j["step_budget"] = e.step_budget;
  j["complexity"] = e.complexity;
  j["target"] = e.target;
  if (e.stored_trace()) j["trace"] = *e.stored_trace();
  if (e.mask_index) j["mask_index"] = *e.mask_index;
  return j.dump();
}

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& j,
                                     const char* field) {
  auto it = j.find(field);
  if (it == j.end()) throw SchemaError(field, "missing");
  return *it;
}

inline int require_int(const nlohmann::json& j, const char* field, int lo,
                       int hi) {
  const nlohmann::json& v = require(j, field);
  if (!v.is_number_integer()) throw SchemaError(field, "not an integer");
  const auto x = v.get<std::int64_t>();
  if (x < lo || x > hi) {
    throw SchemaError(field, "value " + std::to_string(x) + " outside [" +
                                 std::to_string(lo) + ", " +
                                 std::to_string(hi) + "]");
  }
  return static_cast<int>(x);
}

inline int element_int(const nlohmann::json& v, const char* field, int lo,
                       int hi) {
  if (!v.is_number_integer()) throw SchemaError(field, "non-integer element");
  const auto x = v.get<std::int64_t>();
  if (x < lo || x > hi) {
    throw SchemaError(field, "element " + std::to_string(x) + " outside [" +
                                 std::to_string(lo) + ", " +
                                 std::to_string(hi) + "]");
  }
  return static_cast<int>(x);
}

}  // namespace detail

// Unknown keys are ignored; missing or malformed fields raise SchemaError
// naming the field.
inline Example decode_record(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("<record>", std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("<record>", "not a JSON object");
  Example e;
  const auto& id = detail::require(j, "id");
  if (!id.is_string()) throw SchemaError("id", "not a string");
  e.id = id.get<std::string>();
  const auto& source = detail::require(j, "source");
  if (!source.is_string()) throw SchemaError("source", "not a string");
  e.source = source.get<std::string>();

  const auto& tokens = detail::require(j, "tokens");
  if (!tokens.is_array() || tokens.size() < 2) {
    throw SchemaError("tokens", "expected an array of at least two tuples");
  }
  for (const auto& t : tokens) {
    if (!t.is_array() || t.size() != 4) {
      throw SchemaError("tokens", "every token must be a 4-element array");
    }
    e.tokens.push_back(
        {detail::element_int(t[0], "tokens", 0, vocab::kIndentSize - 1),
         detail::element_int(t[1], "tokens", 0, vocab::kOpSize - 1),
         detail::element_int(t[2], "tokens", 0, vocab::kVarSize - 1),
         detail::element_int(t[3], "tokens", 0, vocab::kOperandSize - 1)});
  }
  const int nodes = e.node_count();

  const auto& edges = detail::require(j, "edges");
  if (!edges.is_array()) throw SchemaError("edges", "not an array");
  e.successors.assign(nodes, {});
  std::vector<std::vector<std::pair<int, int>>> labelled(nodes);
  for (const auto& x : edges) {
    if (!x.is_array() || x.size() != 3) {
      throw SchemaError("edges", "every edge must be [src, dst, branch]");
    }
    const int src = detail::element_int(x[0], "edges", 0, nodes - 1);
    const int dst = detail::element_int(x[1], "edges", 0, nodes - 1);
    const int branch = detail::element_int(x[2], "edges", 0, 1);
    labelled[src].push_back({branch, dst});
  }
  for (int n = 0; n < nodes; ++n) {
    std::sort(labelled[n].begin(), labelled[n].end());
    const size_t k = labelled[n].size();
    if (k == 0 || k > 2 || labelled[n][0].first != 0 ||
        (k == 2 && labelled[n][1].first != 1)) {
      throw SchemaError("edges", "node " + std::to_string(n) +
                                     " needs one true edge and at most one "
                                     "false edge");
    }
    for (const auto& [branch, dst] : labelled[n]) e.successors[n].push_back(dst);
  }

  e.step_budget = detail::require_int(j, "step_budget", 1, 1 << 30);
  e.complexity = detail::require_int(j, "complexity", 1, nodes - 1);
  e.target = detail::require_int(j, "target", 0, kNumClasses - 1);
  if (j.contains("trace")) {
    const auto& tr = j["trace"];
    if (!tr.is_array() || tr.empty()) {
      throw SchemaError("trace", "expected a non-empty array");
    }
    std::vector<int> trace;
    trace.reserve(tr.size());
    for (const auto& v : tr) {
      trace.push_back(detail::element_int(v, "trace", 0, nodes - 1));
    }
    e.set_trace(std::move(trace));
  }
  if (j.contains("mask_index")) {
    e.mask_index = detail::require_int(j, "mask_index", 0, nodes - 2);
  }
  return e;
}

// Whether loaded records may expose their oracle trace.
enum class TraceAccess { kSealed, kOpen };

// Streams records from a JSONL file one line at a time.
class RecordReader {
 public:
  explicit RecordReader(const std::filesystem::path& path,
                        TraceAccess access = TraceAccess::kSealed)
      : in_(path), path_(path), access_(access) {
    if (!in_) throw Error("cannot open " + path.string());
  }

  bool next(Example& out) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.empty()) continue;
      try {
        out = decode_record(line);
      } catch (const SchemaError& e) {
        throw SchemaError(e.field(), path_.string() + ":" +
                                         std::to_string(line_no_) + ": " +
                                         e.what());
      }
      out.seal_trace(access_ == TraceAccess::kSealed);
      return true;
    }
    return false;
  }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
  TraceAccess access_;
  std::int64_t line_no_ = 0;
};

inline std::vector<Example> read_records(
    const std::filesystem::path& path,
    TraceAccess access = TraceAccess::kSealed) {
  RecordReader reader(path, access);
  std::vector<Example> out;
  Example e;
  while (reader.next(e)) out.push_back(std::move(e));
  return out;
}

inline void write_records(const std::filesystem::path& path,
                          const std::vector<Example>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& r : records) out << encode_record(r) << '\n';
}

// ---------------------------------------------------------------------------
// Split generation

struct SplitSpec {
  std::int64_t train_count = 100000;
  int threshold = 10;  // C: train has c(x) <= C, test has c(x) > C
  std::vector<int> test_lengths = {20, 30, 40, 50, 60, 70, 80, 90, 100};
  int per_bucket = 100;
  int valid_count = 5000;  // all at complexity exactly C
  std::uint64_t seed = 0;
  bool masked = false;
  int workers = 1;
  SamplerLimits limits;  // line bounds are overridden per split

  static SplitSpec paper() {
    SplitSpec s;
    s.train_count = 5000000;
    s.per_bucket = 500;
    return s;
  }
  static SplitSpec desk() { return SplitSpec{}; }
};

namespace detail {

enum class SplitStream : std::uint64_t { kTrain = 1, kValid = 2, kTest = 3 };

inline std::string padded(std::int64_t value, int width) {
  std::string s = std::to_string(value);
  return std::string(std::max(0, width - static_cast<int>(s.size())), '0') + s;
}

// Example `index` of a stream depends only on (seed, stream, index), so any
// partition of the index range into shards yields the same records.
inline Example generate_one(const SplitSpec& spec, SplitStream stream,
                            std::uint64_t stream_key, std::int64_t index,
                            int min_lines, int max_lines, std::string id) {
  Rng rng = Rng::derive(
      spec.seed, (static_cast<std::uint64_t>(stream) << 56) ^
                     (stream_key << 40) ^ static_cast<std::uint64_t>(index));
  SamplerLimits limits = spec.limits;
  limits.min_lines = min_lines;
  limits.max_lines = max_lines;
  const RawProgram raw = sample_program(rng, limits);
  Example e = make_example(desugar(raw, rng), std::move(id));
  if (spec.masked) e = mask_example(e, rng);
  return e;
}

template <typename Make>
std::vector<Example> generate_sharded(std::int64_t count, int workers,
                                      const Make& make) {
  std::vector<Example> out(count);
  workers = std::max(1, std::min<int>(workers, static_cast<int>(
                                                   std::max<std::int64_t>(count, 1))));
  if (workers == 1) {
    for (std::int64_t i = 0; i < count; ++i) out[i] = make(i);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::int64_t i = w; i < count; i += workers) out[i] = make(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace detail

struct GeneratedSplit {
  std::vector<Example> train, valid, test;
};

inline GeneratedSplit generate_examples(const SplitSpec& spec) {
  using detail::SplitStream;
  if (spec.threshold < 2) throw UsageError("threshold C must be at least 2");
  for (int len : spec.test_lengths) {
    if (len <= spec.threshold) {
      throw UsageError("test length " + std::to_string(len) +
                       " is not above the threshold " +
                       std::to_string(spec.threshold));
    }
  }
  GeneratedSplit out;
  out.train = detail::generate_sharded(
      spec.train_count, spec.workers, [&](std::int64_t i) {
        return detail::generate_one(spec, SplitStream::kTrain, 0, i, 1,
                                    spec.threshold,
                                    "train-" + detail::padded(i, 7));
      });
  out.valid = detail::generate_sharded(
      spec.valid_count, spec.workers, [&](std::int64_t i) {
        return detail::generate_one(spec, SplitStream::kValid, 0, i,
                                    spec.threshold, spec.threshold,
                                    "valid-" + detail::padded(i, 6));
      });
  for (int len : spec.test_lengths) {
    auto bucket = detail::generate_sharded(
        spec.per_bucket, spec.workers, [&](std::int64_t i) {
          return detail::generate_one(
              spec, SplitStream::kTest, static_cast<std::uint64_t>(len), i,
              len, len,
              "test-L" + detail::padded(len, 3) + "-" + detail::padded(i, 5));
        });
    for (auto& e : bucket) out.test.push_back(std::move(e));
  }
  return out;
}

inline nlohmann::json manifest_json(const SplitSpec& spec,
                                    const GeneratedSplit& split) {
  const ProductionWeights& w = spec.limits.weights;
  nlohmann::json m;
  m["tool_version"] = std::string(kToolVersion);
  m["seed"] = spec.seed;
  m["spec"] = {{"train_count", spec.train_count},
               {"threshold", spec.threshold},
               {"test_lengths", spec.test_lengths},
               {"per_bucket", spec.per_bucket},
               {"valid_count", spec.valid_count},
               {"masked", spec.masked}};
  m["grammar"] = {{"max_depth", spec.limits.max_depth},
                  {"max_block_lines", spec.limits.max_block_lines},
                  {"weights",
                   {{"expression", w.expression},
                    {"if", w.if_then},
                    {"if_else", w.if_else},
                    {"repeat", w.repeat},
                    {"continue", w.continue_},
                    {"break", w.break_},
                    {"pass", w.pass}}}};
  m["files"] = {{"train", {{"path", "train.jsonl"}, {"count", split.train.size()}}},
                {"valid", {{"path", "valid.jsonl"}, {"count", split.valid.size()}}},
                {"test", {{"path", "test.jsonl"}, {"count", split.test.size()}}}};
  return m;
}

// Writes train.jsonl, valid.jsonl, test.jsonl and manifest.json into `dir`.
inline GeneratedSplit generate_split(const SplitSpec& spec,
                                     const std::filesystem::path& dir) {
  GeneratedSplit split = generate_examples(spec);
  std::filesystem::create_directories(dir);
  write_records(dir / "train.jsonl", split.train);
  write_records(dir / "valid.jsonl", split.valid);
  write_records(dir / "test.jsonl", split.test);
  std::ofstream(dir / "manifest.json") << manifest_json(spec, split).dump(2)
                                       << '\n';
  return split;
}

}  // namespace ipagnn
