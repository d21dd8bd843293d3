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

#include <sys/resource.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "ipagnn/datagen.h"

namespace ipagnn {
namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Example example_from(const std::string& text, const std::string& id = "x") {
  return make_example(parse(text), id);
}

fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("ipagnn_datagen_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

double chi_square_p(const std::vector<int>& counts) {
  double total = 0;
  for (int c : counts) total += c;
  const double expected = total / counts.size();
  double stat = 0;
  for (int c : counts) stat += (c - expected) * (c - expected) / expected;
  boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

const char* kFigure3 =
    "v0 = 407\n"
    "if v0 % 10 >= 8:\n"
    "  v0 += 2\n"
    "else:\n"
    "  v0 -= 2\n";

// ---- records ----------------------------------------------------------------

TEST(ExampleTest, Figure1Fields) {
  const Example e = example_from(
      read_file(fs::path(IPAGNN_FIXTURES) / "curated" / "01_figure1.py"),
      "fig1");
  EXPECT_EQ(e.node_count(), 9);
  EXPECT_EQ(e.complexity, 8);
  EXPECT_EQ(e.step_budget, 15);
  EXPECT_EQ(e.target, 985);
  EXPECT_EQ(e.successors[2], (std::vector<int>{3, 8}));
  EXPECT_EQ(e.trace().size(), 32u);
}

TEST(RecordTest, RoundTripsWithAndWithoutOptionalFields) {
  Example e = example_from(kFigure3, "r1");
  EXPECT_EQ(decode_record(encode_record(e)), e);
  Rng rng(1);
  Example m = mask_example(e, rng);
  m.set_trace(std::nullopt);
  const Example back = decode_record(encode_record(m));
  EXPECT_EQ(back, m);
  EXPECT_FALSE(back.has_trace());
  EXPECT_EQ(back.mask_index, m.mask_index);
}

TEST(RecordTest, MissingTargetNamesTheField) {
  nlohmann::json j =
      nlohmann::json::parse(encode_record(example_from(kFigure3)));
  j.erase("target");
  try {
    decode_record(j.dump());
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.field(), "target");
  }
}

TEST(RecordTest, UnknownKeysAreIgnored) {
  const Example e = example_from(kFigure3);
  nlohmann::json j = nlohmann::json::parse(encode_record(e));
  j["future_field"] = {1, 2, 3};
  EXPECT_EQ(decode_record(j.dump()), e);
}

TEST(RecordTest, MalformedFieldsAreRejected) {
  const std::string good = encode_record(example_from(kFigure3));
  auto broken = [&](auto mutate) {
    nlohmann::json j = nlohmann::json::parse(good);
    mutate(j);
    return j.dump();
  };
  EXPECT_THROW(decode_record("{not json"), SchemaError);
  EXPECT_THROW(decode_record(broken([](auto& j) { j["target"] = 1000; })),
               SchemaError);
  EXPECT_THROW(decode_record(broken([](auto& j) { j["tokens"][0] = {0, 99, 0, 0}; })),
               SchemaError);
  EXPECT_THROW(decode_record(broken([](auto& j) { j["edges"].erase(0); })),
               SchemaError);
  EXPECT_THROW(decode_record(broken([](auto& j) { j["id"] = 5; })),
               SchemaError);
}

TEST(RecordTest, SealedTraceThrowsOnRead) {
  const fs::path dir = scratch_dir("seal");
  write_records(dir / "r.jsonl", {example_from(kFigure3)});
  const auto sealed = read_records(dir / "r.jsonl");
  ASSERT_EQ(sealed.size(), 1u);
  EXPECT_TRUE(sealed[0].has_trace());
  EXPECT_THROW(sealed[0].trace(), UsageError);
  const auto open = read_records(dir / "r.jsonl", TraceAccess::kOpen);
  EXPECT_EQ(open[0].trace(), (std::vector<int>{0, 1, 3, 4, 5}));
}

TEST(RecordTest, StreamingReadUsesBoundedMemory) {
  const fs::path dir = scratch_dir("stream");
  SplitSpec spec;
  spec.train_count = 1000;
  spec.valid_count = 0;
  spec.test_lengths = {};
  const auto split = generate_examples(spec);
  {
    std::ofstream out(dir / "big.jsonl");
    for (int rep = 0; rep < 40; ++rep) {
      for (const auto& e : split.train) out << encode_record(e) << '\n';
    }
  }
  ASSERT_GT(fs::file_size(dir / "big.jsonl"), 10u << 20);
  rusage before{};
  getrusage(RUSAGE_SELF, &before);
  RecordReader reader(dir / "big.jsonl");
  Example e;
  std::int64_t n = 0;
  while (reader.next(e)) ++n;
  rusage after{};
  getrusage(RUSAGE_SELF, &after);
  EXPECT_EQ(n, 40000);
  // ru_maxrss is in KiB; the file is over 10 MiB.
  EXPECT_LT(after.ru_maxrss - before.ru_maxrss, 4 * 1024);
}

// ---- masking ----------------------------------------------------------------

TEST(MaskTest, OnlyLineZeroIsForced) {
  const Example e = example_from("v0 = 5\nif v0 % 10 > 2:\n  pass\n");
  Rng rng(2);
  const Example m = mask_example(e, rng);
  EXPECT_EQ(m.mask_index, 0);
  EXPECT_TRUE(m.tokens[0].is_masked());
  EXPECT_EQ(m.target, e.target);
  EXPECT_EQ(m.successors, e.successors);
}

TEST(MaskTest, CounterLinesAreNotEligible) {
  const Example e = example_from(
      "v0 = 1\nv3 = 2\nwhile v3 > 0:\n  v3 -= 1\n  v0 += 4\n");
  EXPECT_EQ(maskable_lines(e), (std::vector<int>{0, 4}));
}

TEST(MaskTest, MaskPreservesIndentAndReplacesOtherFields) {
  const Example e = example_from(kFigure3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Example m = mask_example(e, rng);
    const int n = *m.mask_index;
    EXPECT_EQ(m.tokens[n].indent, e.tokens[n].indent);
    EXPECT_EQ(m.tokens[n].op, vocab::kOpMask);
    EXPECT_EQ(m.tokens[n].var, vocab::kVarMask);
    EXPECT_EQ(m.tokens[n].operand, vocab::kOperandMask);
    for (int k = 0; k < e.node_count(); ++k) {
      if (k != n) {
        EXPECT_EQ(m.tokens[k], e.tokens[k]);
      }
    }
  }
}

TEST(MaskTest, DoubleMaskIsRejected) {
  Rng rng(3);
  const Example m = mask_example(example_from(kFigure3), rng);
  EXPECT_THROW(mask_example(m, rng), SchemaError);
}

TEST(MaskTest, FiveExpressionProgramIsUniform) {
  const Example e = example_from(
      "v0 = 1\nv0 += 2\nif v0 % 10 < 5:\n  v0 *= 3\nv0 -= 4\nv0 += 5\n");
  ASSERT_EQ(maskable_lines(e).size(), 5u);
  std::map<int, int> where;
  Rng rng(4);
  for (int i = 0; i < 10000; ++i) ++where[*mask_example(e, rng).mask_index];
  std::vector<int> counts;
  for (auto [line, c] : where) {
    counts.push_back(c);
    EXPECT_NEAR(c, 2000, 150) << "line " << line;
  }
  ASSERT_EQ(counts.size(), 5u);
  EXPECT_GT(chi_square_p(counts), 0.01);
}

// ---- splits -----------------------------------------------------------------

SplitSpec small_spec(std::uint64_t seed) {
  SplitSpec s;
  s.train_count = 400;
  s.valid_count = 50;
  s.test_lengths = {20, 40};
  s.per_bucket = 30;
  s.seed = seed;
  return s;
}

TEST(SplitTest, PurityCountsAndIds) {
  const auto split = generate_examples(small_spec(5));
  ASSERT_EQ(split.train.size(), 400u);
  ASSERT_EQ(split.valid.size(), 50u);
  ASSERT_EQ(split.test.size(), 60u);
  int max_train = 0, min_test = 1 << 30;
  for (const auto& e : split.train) max_train = std::max(max_train, e.complexity);
  for (const auto& e : split.valid) EXPECT_EQ(e.complexity, 10);
  std::map<int, int> buckets;
  for (const auto& e : split.test) {
    min_test = std::min(min_test, e.complexity);
    ++buckets[e.complexity];
  }
  EXPECT_LE(max_train, 10);
  EXPECT_GT(min_test, 10);
  EXPECT_EQ(buckets, (std::map<int, int>{{20, 30}, {40, 30}}));
  std::set<std::string> ids;
  for (const auto* part : {&split.train, &split.valid, &split.test}) {
    for (const auto& e : *part) EXPECT_TRUE(ids.insert(e.id).second) << e.id;
  }
}

TEST(SplitTest, FilesAreByteIdenticalAcrossRunsAndWorkerCounts) {
  SplitSpec spec = small_spec(6);
  spec.masked = true;
  const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
  generate_split(spec, a);
  spec.workers = 3;
  generate_split(spec, b);
  for (const char* f : {"train.jsonl", "valid.jsonl", "test.jsonl"}) {
    EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
  }
  const auto manifest = nlohmann::json::parse(read_file(a / "manifest.json"));
  EXPECT_EQ(manifest["seed"], 6);
  EXPECT_EQ(manifest["files"]["train"]["count"], 400);
  EXPECT_EQ(manifest["tool_version"], std::string(kToolVersion));
  const auto other = generate_examples(small_spec(7));
  EXPECT_NE(encode_record(other.train[0]),
            read_file(a / "train.jsonl").substr(0, encode_record(other.train[0]).size()));
}

TEST(SplitTest, MaskedSplitNeverMasksControlFlow) {
  SplitSpec spec = small_spec(8);
  spec.masked = true;
  const auto split = generate_examples(spec);
  for (const auto* part : {&split.train, &split.valid, &split.test}) {
    for (const auto& e : *part) {
      ASSERT_TRUE(e.mask_index.has_value());
      const Example full = make_example(parse(e.source), e.id);
      const auto eligible = maskable_lines(full);
      EXPECT_TRUE(std::find(eligible.begin(), eligible.end(), *e.mask_index) !=
                  eligible.end());
      EXPECT_EQ(e.target, full.target);
    }
  }
}

TEST(SplitTest, InvalidThresholdsAreUsageErrors) {
  SplitSpec spec = small_spec(9);
  spec.test_lengths = {10};
  EXPECT_THROW(generate_examples(spec), UsageError);
}

TEST(SplitTest, TrainLabelsCoverMoreThanOneHundredClasses) {
  SplitSpec spec;
  spec.train_count = 100000;
  spec.valid_count = 0;
  spec.test_lengths = {};
  spec.seed = 10;
  const auto split = generate_examples(spec);
  std::set<int> labels;
  std::set<int> lengths;
  for (const auto& e : split.train) {
    labels.insert(e.target);
    lengths.insert(e.complexity);
  }
  EXPECT_GT(labels.size(), 100u);
  EXPECT_EQ(lengths, (std::set<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}));
}

}  // namespace
}  // namespace ipagnn
