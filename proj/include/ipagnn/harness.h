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
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ipagnn/datagen.h"
#include "ipagnn/layers.h"
#include "ipagnn/models.h"
#include "ipagnn/params.h"

namespace ipagnn {

enum class Precision { kF32, kF64 };

inline std::string_view precision_name(Precision p) {
  return p == Precision::kF32 ? "f32" : "f64";
}

inline Precision parse_precision(std::string_view s) {
  if (s == "f32") return Precision::kF32;
  if (s == "f64") return Precision::kF64;
  throw UsageError("unknown precision '" + std::string(s) +
                   "' (expected f32 or f64)");
}

struct TrainConfig {
  ModelKind model = ModelKind::kIpagnn;
  int hidden = 64;
  double lr = 1e-3;
  int batch_size = 32;
  int epochs = 3;
  std::uint64_t seed = 0;
  Precision precision = Precision::kF32;
  std::int64_t max_steps = 0;        // 0: no cap beyond `epochs`
  std::int64_t log_every = 100;      // optimizer steps per train record
  std::int64_t eval_every = 0;       // 0: validate after every epoch
  std::int64_t checkpoint_every = 0; // 0: only at the end

  static TrainConfig paper() {
    TrainConfig c;
    c.hidden = 200;
    return c;
  }
  static TrainConfig desk() { return TrainConfig{}; }
  // Memorization smoke run on a small fixed set.
  static TrainConfig overfit() {
    TrainConfig c;
    c.lr = 0.003;
    c.batch_size = 8;
    c.epochs = 50;
    return c;
  }
};

struct SweepGrid {
  std::vector<int> hidden;
  std::vector<double> lr;

  static SweepGrid paper() {
    return {{200, 300}, {0.003, 0.001, 0.0003, 0.0001}};
  }
  static SweepGrid desk() { return {{64}, {0.003, 0.001, 0.0003, 0.0001}}; }
  int size() const { return static_cast<int>(hidden.size() * lr.size()); }
};

// ---------------------------------------------------------------------------
// Datasets

// Only the Trace RNN may look at oracle traces; every other model gets
// records whose trace access throws.
inline std::vector<Example> load_split(const std::filesystem::path& path,
                                       ModelKind model) {
  return read_records(path,
                      reads_trace(model) ? TraceAccess::kOpen
                                         : TraceAccess::kSealed);
}

inline GraphBatch batch_of(ModelKind model,
                           std::span<const Example* const> examples) {
  return make_batch(examples, reads_trace(model));
}

// ---------------------------------------------------------------------------
// Training state and checkpoints

template <typename T>
struct TrainState {
  TrainConfig config;
  ParameterStore<T> params;
  Adam<T> adam;
  std::int64_t step = 0;
  std::int64_t examples_seen = 0;
};

template <typename T>
TrainState<T> initial_state(const TrainConfig& c) {
  TrainState<T> s;
  s.config = c;
  s.params = make_parameters<T>(c.model, c.hidden, c.seed);
  s.adam = Adam<T>(AdamConfig{.lr = c.lr});
  return s;
}

namespace detail {

inline std::string exact(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline const std::string& meta(const Checkpoint& ckpt, const std::string& key) {
  auto it = ckpt.metadata.find(key);
  if (it == ckpt.metadata.end()) {
    throw SchemaError(key, "checkpoint metadata lacks '" + key + "'");
  }
  return it->second;
}

}  // namespace detail

template <typename T>
Checkpoint to_checkpoint(const TrainState<T>& s) {
  const TrainConfig& c = s.config;
  Checkpoint ckpt;
  ckpt.metadata = {{"tool", std::string(kToolVersion)},
                   {"model", std::string(model_name(c.model))},
                   {"hidden", std::to_string(c.hidden)},
                   {"lr", detail::exact(c.lr)},
                   {"batch_size", std::to_string(c.batch_size)},
                   {"epochs", std::to_string(c.epochs)},
                   {"seed", std::to_string(c.seed)},
                   {"precision", std::string(precision_name(c.precision))},
                   {"step", std::to_string(s.step)},
                   {"examples_seen", std::to_string(s.examples_seen)}};
  append_parameters(ckpt, s.params);
  s.adam.append_to(ckpt, s.params);
  return ckpt;
}

// Model settings stored in a checkpoint.
inline TrainConfig checkpoint_config(const Checkpoint& ckpt) {
  TrainConfig c;
  try {
    c.model = parse_model_kind(detail::meta(ckpt, "model"));
    c.hidden = std::stoi(detail::meta(ckpt, "hidden"));
    c.lr = std::stod(detail::meta(ckpt, "lr"));
    c.batch_size = std::stoi(detail::meta(ckpt, "batch_size"));
    c.epochs = std::stoi(detail::meta(ckpt, "epochs"));
    c.seed = std::stoull(detail::meta(ckpt, "seed"));
    c.precision = parse_precision(detail::meta(ckpt, "precision"));
  } catch (const UsageError& e) {
    throw SchemaError("metadata", e.what());
  } catch (const std::logic_error& e) {
    throw SchemaError("metadata", "malformed checkpoint metadata");
  }
  return c;
}

// Restores parameters and optimizer state. Schedule fields of `config`
// (epochs, max_steps, logging) may differ from the checkpoint; the model,
// width and seed must match.
template <typename T>
TrainState<T> restore_state(const Checkpoint& ckpt, const TrainConfig& config) {
  const TrainConfig stored = checkpoint_config(ckpt);
  if (stored.model != config.model || stored.hidden != config.hidden ||
      stored.seed != config.seed || stored.batch_size != config.batch_size) {
    throw UsageError("checkpoint was trained as " +
                     std::string(model_name(stored.model)) + " H=" +
                     std::to_string(stored.hidden) +
                     " batch=" + std::to_string(stored.batch_size) +
                     " seed=" + std::to_string(stored.seed) +
                     "; resume settings differ");
  }
  TrainState<T> s = initial_state<T>(config);
  load_parameters(ckpt, s.params);
  s.adam.load_from(ckpt, s.params);
  s.step = std::stoll(detail::meta(ckpt, "step"));
  s.examples_seen = std::stoll(detail::meta(ckpt, "examples_seen"));
  return s;
}

inline void save_checkpoint(const std::filesystem::path& path,
                            const Checkpoint& ckpt) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  write_checkpoint(tmp.string(), ckpt);
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Metrics

class MetricsLog {
 public:
  MetricsLog() = default;
  explicit MetricsLog(const std::filesystem::path& path, bool append = false)
      : out_(path, append ? std::ios::app : std::ios::trunc) {
    if (!out_) throw Error("cannot write " + path.string());
  }

  void write(const nlohmann::json& record) {
    records_.push_back(record);
    if (out_.is_open()) {
      out_ << record.dump() << '\n';
      out_.flush();
    }
  }
  const std::vector<nlohmann::json>& records() const { return records_; }

 private:
  std::ofstream out_;
  std::vector<nlohmann::json> records_;
};

// ---------------------------------------------------------------------------
// Inference

// Predicted class per example, computed in batches.
template <typename T>
std::vector<int> predict(ModelKind model, ParameterStore<T>& params,
                         const std::vector<Example>& examples,
                         int batch_size = 64) {
  std::vector<int> out;
  out.reserve(examples.size());
  std::vector<const Example*> chunk;
  for (size_t i = 0; i < examples.size(); i += batch_size) {
    chunk.clear();
    for (size_t j = i; j < std::min(examples.size(), i + batch_size); ++j) {
      chunk.push_back(&examples[j]);
    }
    const GraphBatch b = batch_of(model, chunk);
    ad::Tape<T> tape;
    const auto p = predictions(forward(model, tape, params, b), b);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

inline double accuracy_of(const std::vector<int>& predicted,
                          const std::vector<Example>& examples) {
  if (examples.empty()) return 0;
  std::int64_t hit = 0;
  for (size_t i = 0; i < examples.size(); ++i) {
    hit += predicted[i] == examples[i].target;
  }
  return static_cast<double>(hit) / static_cast<double>(examples.size());
}

// ---------------------------------------------------------------------------
// Training

struct TrainSummary {
  std::int64_t steps = 0;
  std::int64_t examples_seen = 0;
  double last_loss = 0;
  std::optional<double> val_accuracy;
};

// Batch schedule: epoch e visits the training set in a permutation drawn
// from (seed, e); step s is batch s mod B of epoch s div B.
class Schedule {
 public:
  Schedule(std::int64_t train_size, const TrainConfig& c)
      : n_(train_size), batch_(c.batch_size), seed_(c.seed) {
    if (batch_ < 1) throw UsageError("batch size must be positive");
    if (c.epochs < 0) throw UsageError("epochs must be non-negative");
    per_epoch_ = (n_ + batch_ - 1) / batch_;
    total_ = per_epoch_ * c.epochs;
    if (c.max_steps > 0) total_ = std::min(total_, c.max_steps);
  }

  std::int64_t total_steps() const { return total_; }
  std::int64_t steps_per_epoch() const { return per_epoch_; }
  std::int64_t epoch_of(std::int64_t step) const { return step / per_epoch_; }

  std::vector<int> batch(std::int64_t step) {
    const std::int64_t epoch = epoch_of(step);
    if (epoch != cached_epoch_) {
      order_.resize(n_);
      std::iota(order_.begin(), order_.end(), 0);
      Rng rng = Rng::derive(seed_, 0x5eed0000ULL + epoch);
      rng.shuffle(order_);
      cached_epoch_ = epoch;
    }
    const std::int64_t b = step % per_epoch_;
    const auto first = order_.begin() + b * batch_;
    const auto last = order_.begin() + std::min(n_, (b + 1) * batch_);
    return {first, last};
  }

 private:
  std::int64_t n_, batch_;
  std::uint64_t seed_;
  std::int64_t per_epoch_ = 0, total_ = 0;
  std::int64_t cached_epoch_ = -1;
  std::vector<int> order_;
};

struct TrainHooks {
  MetricsLog* log = nullptr;
  std::optional<std::filesystem::path> checkpoint_path;
};

// Runs the optimizer from `state.step` to the end of the schedule.
template <typename T>
TrainSummary train(TrainState<T>& state, const std::vector<Example>& train_set,
                   const std::vector<Example>* valid_set,
                   const TrainHooks& hooks = {}) {
  const TrainConfig& c = state.config;
  if (train_set.empty()) throw UsageError("training set is empty");
  Schedule schedule(static_cast<std::int64_t>(train_set.size()), c);
  TrainSummary summary;
  double window_loss = 0;
  std::int64_t window = 0;
  std::vector<const Example*> chunk;

  auto validate = [&] {
    if (!valid_set || valid_set->empty()) return;
    const double acc =
        accuracy_of(predict(c.model, state.params, *valid_set), *valid_set);
    summary.val_accuracy = acc;
    if (hooks.log) {
      hooks.log->write({{"kind", "eval"},
                        {"step", state.step},
                        {"loss", window > 0 ? window_loss / window
                                            : summary.last_loss},
                        {"val_accuracy", acc}});
    }
  };
  auto checkpoint = [&] {
    if (hooks.checkpoint_path) {
      save_checkpoint(*hooks.checkpoint_path, to_checkpoint(state));
    }
  };

  while (state.step < schedule.total_steps()) {
    const std::int64_t step = state.step;
    chunk.clear();
    for (int i : schedule.batch(step)) chunk.push_back(&train_set[i]);
    const GraphBatch b = batch_of(c.model, chunk);
    state.params.zero_grad();
    double loss = 0;
    try {
      ad::Tape<T> tape;
      const auto l = batch_loss(tape, forward(c.model, tape, state.params, b), b);
      loss = static_cast<double>(l.item());
      if (!std::isfinite(loss)) {
        std::string ids;
        for (const Example* e : chunk) ids += (ids.empty() ? "" : ", ") + e->id;
        throw NumericError("non-finite loss on examples " + ids);
      }
      tape.backward(l);
      state.adam.step(state.params);
    } catch (const NumericError& e) {
      throw NumericError("training step " + std::to_string(step) + ": " +
                         e.what());
    }
    ++state.step;
    state.examples_seen += static_cast<std::int64_t>(chunk.size());
    summary.last_loss = loss;
    window_loss += loss;
    ++window;

    if (hooks.log && c.log_every > 0 && state.step % c.log_every == 0) {
      hooks.log->write({{"kind", "train"},
                        {"step", state.step},
                        {"epoch", schedule.epoch_of(step)},
                        {"loss", window_loss / window},
                        {"examples_seen", state.examples_seen}});
      window_loss = 0;
      window = 0;
    }
    const bool epoch_end = state.step % schedule.steps_per_epoch() == 0;
    if (c.eval_every > 0 ? state.step % c.eval_every == 0 : epoch_end) {
      validate();
    }
    if (c.checkpoint_every > 0 && state.step % c.checkpoint_every == 0) {
      checkpoint();
    }
  }
  if (!summary.val_accuracy) validate();
  checkpoint();
  summary.steps = state.step;
  summary.examples_seen = state.examples_seen;
  return summary;
}

// Trains from scratch, or resumes from `resume` when given, writing
// `model.ckpt` and `metrics.jsonl` to `out_dir`.
struct TrainRun {
  TrainSummary summary;
  std::filesystem::path checkpoint;
};

namespace detail {

template <typename T>
TrainRun train_in_dir(const TrainConfig& c, const std::vector<Example>& train_set,
                      const std::vector<Example>* valid_set,
                      const std::filesystem::path& out_dir,
                      const std::optional<Checkpoint>& resume) {
  std::filesystem::create_directories(out_dir);
  TrainState<T> state =
      resume ? restore_state<T>(*resume, c) : initial_state<T>(c);
  MetricsLog log(out_dir / "metrics.jsonl", resume.has_value());
  TrainHooks hooks{&log, out_dir / "model.ckpt"};
  TrainRun run;
  run.summary = train(state, train_set, valid_set, hooks);
  run.checkpoint = out_dir / "model.ckpt";
  return run;
}

}  // namespace detail

inline TrainRun train_to_dir(const TrainConfig& c,
                             const std::vector<Example>& train_set,
                             const std::vector<Example>* valid_set,
                             const std::filesystem::path& out_dir,
                             const std::optional<Checkpoint>& resume = {}) {
  if (resume && checkpoint_config(*resume).precision != c.precision) {
    throw UsageError("checkpoint precision differs from --precision");
  }
  return c.precision == Precision::kF32
             ? detail::train_in_dir<float>(c, train_set, valid_set, out_dir,
                                           resume)
             : detail::train_in_dir<double>(c, train_set, valid_set, out_dir,
                                            resume);
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepCell {
  int hidden = 0;
  double lr = 0;
  double val_accuracy = 0;
  std::filesystem::path checkpoint;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  int best = -1;
  std::filesystem::path best_checkpoint;
};

// Index of the winning cell: highest validation accuracy, then lower lr,
// then grid order.
inline int select_best(const std::vector<SweepCell>& cells) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(cells.size()); ++i) {
    if (best < 0 || cells[i].val_accuracy > cells[best].val_accuracy ||
        (cells[i].val_accuracy == cells[best].val_accuracy &&
         cells[i].lr < cells[best].lr)) {
      best = i;
    }
  }
  return best;
}

inline std::string cell_name(int hidden, double lr) {
  std::ostringstream os;
  os << "H" << hidden << "-lr" << lr;
  return os.str();
}

inline SweepResult sweep(const TrainConfig& base, const SweepGrid& grid,
                         const std::vector<Example>& train_set,
                         const std::vector<Example>& valid_set,
                         const std::filesystem::path& out_dir) {
  if (grid.size() == 0) throw UsageError("sweep grid is empty");
  if (valid_set.empty()) throw UsageError("sweep needs a validation set");
  SweepResult result;
  for (int h : grid.hidden) {
    for (double lr : grid.lr) {
      TrainConfig c = base;
      c.hidden = h;
      c.lr = lr;
      const auto run = train_to_dir(c, train_set, &valid_set,
                                    out_dir / cell_name(h, lr));
      result.cells.push_back(
          {h, lr, run.summary.val_accuracy.value_or(0), run.checkpoint});
    }
  }
  result.best = select_best(result.cells);
  result.best_checkpoint = out_dir / "best.ckpt";
  std::filesystem::copy_file(result.cells[result.best].checkpoint,
                             result.best_checkpoint,
                             std::filesystem::copy_options::overwrite_existing);
  nlohmann::json report = {{"model", std::string(model_name(base.model))},
                           {"cells", nlohmann::json::array()}};
  for (const auto& cell : result.cells) {
    report["cells"].push_back({{"hidden", cell.hidden},
                               {"lr", cell.lr},
                               {"val_accuracy", cell.val_accuracy},
                               {"checkpoint", cell.checkpoint.string()}});
  }
  const SweepCell& b = result.cells[result.best];
  report["best"] = {{"cell", cell_name(b.hidden, b.lr)},
                    {"hidden", b.hidden},
                    {"lr", b.lr},
                    {"val_accuracy", b.val_accuracy}};
  std::ofstream(out_dir / "sweep.json") << report.dump(2) << '\n';
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation

struct BucketAccuracy {
  int length = 0;
  std::int64_t count = 0;
  std::int64_t correct = 0;
  double accuracy = 0;
  double standard_error = 0;
};

struct Prediction {
  std::string id;
  int length = 0;
  int target = 0;
  int predicted = 0;
};

struct EvalReport {
  std::string model;
  std::string task;  // "full" or "partial"
  std::int64_t count = 0;
  std::int64_t correct = 0;
  double accuracy = 0;
  double standard_error = 0;
  std::vector<BucketAccuracy> buckets;  // ascending length
  std::vector<Prediction> predictions;
};

inline double binomial_se(double acc, std::int64_t n) {
  return n > 0 ? std::sqrt(acc * (1 - acc) / static_cast<double>(n)) : 0;
}

// Scores `predicted` against the examples' targets, bucketed by complexity.
inline EvalReport score(std::string model, const std::vector<Example>& test,
                        const std::vector<int>& predicted) {
  if (predicted.size() != test.size()) {
    throw ShapeError("prediction count differs from test set size");
  }
  EvalReport r;
  r.model = std::move(model);
  r.task = std::any_of(test.begin(), test.end(),
                       [](const Example& e) { return e.mask_index.has_value(); })
               ? "partial"
               : "full";
  std::map<int, BucketAccuracy> buckets;
  for (size_t i = 0; i < test.size(); ++i) {
    const Example& e = test[i];
    const bool hit = predicted[i] == e.target;
    r.predictions.push_back({e.id, e.complexity, e.target, predicted[i]});
    BucketAccuracy& b = buckets[e.complexity];
    b.length = e.complexity;
    ++b.count;
    b.correct += hit;
    ++r.count;
    r.correct += hit;
  }
  for (auto& [len, b] : buckets) {
    b.accuracy = static_cast<double>(b.correct) / static_cast<double>(b.count);
    b.standard_error = binomial_se(b.accuracy, b.count);
    r.buckets.push_back(b);
  }
  r.accuracy = r.count ? static_cast<double>(r.correct) /
                             static_cast<double>(r.count)
                       : 0;
  r.standard_error = binomial_se(r.accuracy, r.count);
  return r;
}

struct LoadedModel {
  TrainConfig config;
  Checkpoint checkpoint;
};

inline LoadedModel load_model(const std::filesystem::path& path,
                              std::optional<ModelKind> expected = {}) {
  LoadedModel m{{}, read_checkpoint(path.string())};
  m.config = checkpoint_config(m.checkpoint);
  if (expected && *expected != m.config.model) {
    throw UsageError("checkpoint " + path.string() + " holds model '" +
                     std::string(model_name(m.config.model)) + "', not '" +
                     std::string(model_name(*expected)) + "'");
  }
  return m;
}

namespace detail {

template <typename T>
ParameterStore<T> loaded_params(const LoadedModel& m) {
  auto params = make_parameters<T>(m.config.model, m.config.hidden, 0);
  load_parameters(m.checkpoint, params);
  return params;
}

}  // namespace detail

inline std::vector<int> predict(const LoadedModel& m,
                                const std::vector<Example>& test) {
  if (m.config.precision == Precision::kF32) {
    auto p = detail::loaded_params<float>(m);
    return predict(m.config.model, p, test);
  }
  auto p = detail::loaded_params<double>(m);
  return predict(m.config.model, p, test);
}

inline EvalReport evaluate(const LoadedModel& m,
                           const std::vector<Example>& test) {
  return score(std::string(model_name(m.config.model)), test,
               predict(m, test));
}

inline nlohmann::json report_json(const EvalReport& r) {
  nlohmann::json j = {{"model", r.model},
                      {"task", r.task},
                      {"count", r.count},
                      {"correct", r.correct},
                      {"accuracy", r.accuracy},
                      {"standard_error", r.standard_error},
                      {"buckets", nlohmann::json::array()},
                      {"predictions", nlohmann::json::array()}};
  for (const auto& b : r.buckets) {
    j["buckets"].push_back({{"length", b.length},
                            {"count", b.count},
                            {"correct", b.correct},
                            {"accuracy", b.accuracy},
                            {"standard_error", b.standard_error}});
  }
  for (const auto& p : r.predictions) {
    j["predictions"].push_back({{"id", p.id},
                                {"length", p.length},
                                {"target", p.target},
                                {"predicted", p.predicted}});
  }
  return j;
}

namespace detail {

inline std::string percent(double acc, double se) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << 100 * acc << " ± "
     << std::setprecision(1) << 100 * se;
  return os.str();
}

}  // namespace detail

// Accuracy table (in percent) with one row per model and a Full and a
// Partial column, followed by per-length rows for each report.
inline std::string render_table(const std::vector<EvalReport>& reports) {
  std::vector<std::string> models;
  std::map<std::pair<std::string, std::string>, const EvalReport*> cell;
  for (const auto& r : reports) {
    if (std::find(models.begin(), models.end(), r.model) == models.end()) {
      models.push_back(r.model);
    }
    cell[{r.model, r.task}] = &r;
  }
  std::ostringstream os;
  auto row = [&os](const std::string& a, const std::string& b,
                   const std::string& c) {
    os << std::left << std::setw(12) << a << std::right << std::setw(16) << b
       << std::setw(16) << c << '\n';
  };
  auto entry = [&](const std::string& model, const char* task) {
    auto it = cell.find({model, task});
    return it == cell.end()
               ? std::string("---")
               : detail::percent(it->second->accuracy,
                                 it->second->standard_error);
  };
  row("Model", "Full", "Partial");
  for (const auto& m : models) row(m, entry(m, "full"), entry(m, "partial"));
  for (const auto& r : reports) {
    os << '\n' << r.model << " (" << r.task << ") by length\n";
    os << std::left << std::setw(8) << "Length" << std::right << std::setw(16)
       << "Accuracy" << std::setw(8) << "n" << '\n';
    for (const auto& b : r.buckets) {
      os << std::left << std::setw(8) << b.length << std::right
         << std::setw(16) << detail::percent(b.accuracy, b.standard_error)
         << std::setw(8) << b.count << '\n';
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Attention export

// The program of `e` with line 0's constant replaced by `v0`; the mask, if
// any, stays on the same line.
inline Example with_initial_value(const Example& e, int v0) {
  Program p = parse(e.source);
  if (p.size() < 2 || p[0].kind != StatementKind::kAssign || p[0].var != 0) {
    throw UsageError("line 0 of " + e.id + " is not an assignment to v0");
  }
  if (v0 < 0 || v0 > kMaxConstant) {
    throw UsageError("initial value must be in 0.." +
                     std::to_string(kMaxConstant));
  }
  p.statements[0].operand = v0;
  Example out = make_example(p, e.id + "-v0=" + std::to_string(v0), false);
  if (e.mask_index) {
    out.tokens[*e.mask_index] =
        StatementTuple::masked(out.tokens[*e.mask_index].indent);
    out.mask_index = e.mask_index;
  }
  return out;
}

// p[t, n] for t = 0..T(x).
using AttentionMatrix = std::vector<std::vector<double>>;

inline AttentionMatrix attention(const LoadedModel& m, const Example& e) {
  if (!has_pointer(m.config.model)) {
    throw UsageError(std::string(model_name(m.config.model)) +
                     " has no instruction pointer to export");
  }
  auto run = [&]<typename T>(T) {
    auto params = detail::loaded_params<T>(m);
    const Example* p = &e;
    const GraphBatch b = make_batch(std::span<const Example* const>(&p, 1));
    ad::Tape<T> tape;
    ForwardOptions o;
    o.record = true;
    const auto r = forward(m.config.model, tape, params, b, o);
    AttentionMatrix out;
    for (const auto& row : r.pointer) out.emplace_back(row.begin(), row.end());
    return out;
  };
  return m.config.precision == Precision::kF32 ? run(0.0f) : run(0.0);
}

// Header row of node ids, then one tab-separated row per step.
inline void write_attention(std::ostream& os, const AttentionMatrix& p) {
  const size_t n = p.empty() ? 0 : p.front().size();
  for (size_t j = 0; j < n; ++j) os << (j ? "\t" : "") << j;
  os << '\n';
  os << std::setprecision(9);
  for (const auto& row : p) {
    for (size_t j = 0; j < row.size(); ++j) os << (j ? "\t" : "") << row[j];
    os << '\n';
  }
}

}  // namespace ipagnn
