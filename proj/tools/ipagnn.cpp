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
// Command-line entry point: dataset generation, interpreter and CFG
// inspection, masking, training, sweeps, evaluation and attention export.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ipagnn/cfg.h"
#include "ipagnn/datagen.h"
#include "ipagnn/harness.h"
#include "ipagnn/interp.h"

namespace fs = std::filesystem;

namespace ipagnn {
namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Flags shared by train and sweep. Unset options fall back to the profile.
struct TrainFlags {
  std::string profile = "desk";
  std::string model = "ipagnn";
  std::string train_path, valid_path, out_dir;
  std::optional<int> hidden, batch_size, epochs;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> precision;
  std::optional<std::int64_t> max_steps, log_every, eval_every,
      checkpoint_every;

  void add_to(CLI::App* cmd, bool sweep) {
    cmd->add_option("--profile", profile, "Default settings: desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}))
        ->capture_default_str();
    cmd->add_option("--model", model,
                    "ipagnn, line, trace, hardip, ggnn, nocontrol or "
                    "noexecute")
        ->capture_default_str();
    cmd->add_option("--train", train_path, "Training records (JSONL)")
        ->required();
    cmd->add_option("--valid", valid_path, "Validation records (JSONL)");
    cmd->add_option("--out", out_dir, "Output directory")->required();
    if (!sweep) {
      cmd->add_option("--hidden", hidden, "Hidden size H");
      cmd->add_option("--lr", lr, "Adam learning rate");
    }
    cmd->add_option("--batch-size", batch_size, "Examples per step");
    cmd->add_option("--epochs", epochs, "Passes over the training set");
    cmd->add_option("--seed", seed, "Initialization and shuffle seed");
    cmd->add_option("--precision", precision, "f32 or f64");
    cmd->add_option("--max-steps", max_steps, "Cap on optimizer steps");
    cmd->add_option("--log-every", log_every, "Steps per training record");
    cmd->add_option("--eval-every", eval_every,
                    "Steps per validation (0: each epoch)");
    cmd->add_option("--checkpoint-every", checkpoint_every,
                    "Steps per checkpoint (0: at the end)");
  }

  TrainConfig config() const {
    TrainConfig c =
        profile == "paper" ? TrainConfig::paper() : TrainConfig::desk();
    c.model = parse_model_kind(model);
    if (hidden) c.hidden = *hidden;
    if (lr) c.lr = *lr;
    if (batch_size) c.batch_size = *batch_size;
    if (epochs) c.epochs = *epochs;
    if (seed) c.seed = *seed;
    if (precision) c.precision = parse_precision(*precision);
    if (max_steps) c.max_steps = *max_steps;
    if (log_every) c.log_every = *log_every;
    if (eval_every) c.eval_every = *eval_every;
    if (checkpoint_every) c.checkpoint_every = *checkpoint_every;
    return c;
  }
};

void print_summary(const TrainSummary& s, const fs::path& ckpt) {
  std::cout << "steps: " << s.steps << "\nexamples: " << s.examples_seen
            << "\nloss: " << s.last_loss << '\n';
  if (s.val_accuracy) std::cout << "val_accuracy: " << *s.val_accuracy << '\n';
  std::cout << "checkpoint: " << ckpt.string() << '\n';
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Instruction pointer attention graph networks: data, "
               "training and evaluation"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.set_config("--config", "", "INI file; [section] names a subcommand");
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate train/valid/test splits");
  std::string gen_profile = "desk", gen_out;
  std::optional<std::int64_t> train_count;
  std::optional<int> threshold, per_bucket, valid_count, workers;
  std::optional<std::vector<int>> test_lengths;
  std::uint64_t gen_seed = 0;
  bool masked = false;
  gen->add_option("--profile", gen_profile, "desk or paper")
      ->check(CLI::IsMember({"desk", "paper"}))
      ->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Dataset seed")->capture_default_str();
  gen->add_option("--train-count", train_count, "Training examples");
  gen->add_option("--threshold", threshold,
                  "Complexity C: train has length <= C");
  gen->add_option("--test-lengths", test_lengths, "Test bucket lengths")
      ->delimiter(',');
  gen->add_option("--per-bucket", per_bucket, "Test examples per length");
  gen->add_option("--valid-count", valid_count, "Validation examples");
  gen->add_option("--workers", workers, "Generator threads");
  gen->add_flag("--masked", masked, "Mask one expression per record");

  // run / cfg
  auto* run = app.add_subcommand("run", "Interpret a program file");
  std::string run_file;
  run->add_option("program", run_file, "Program source")->required();
  auto* cfg = app.add_subcommand("cfg", "Print a program's control flow graph");
  std::string cfg_file;
  cfg->add_option("program", cfg_file, "Program source")->required();

  // mask
  auto* mask = app.add_subcommand("mask", "Mask one expression per record");
  std::string mask_in, mask_out;
  std::uint64_t mask_seed = 0;
  mask->add_option("--in", mask_in, "Input records (JSONL)")->required();
  mask->add_option("--out", mask_out, "Output records (JSONL)")->required();
  mask->add_option("--seed", mask_seed, "Mask choice seed")
      ->capture_default_str();

  // train / sweep
  auto* train_cmd = app.add_subcommand("train", "Train one model");
  TrainFlags train_flags;
  train_flags.add_to(train_cmd, false);
  std::string resume_path;
  train_cmd->add_option("--resume", resume_path, "Checkpoint to continue");

  auto* sweep_cmd =
      app.add_subcommand("sweep", "Train a hidden-size x learning-rate grid");
  TrainFlags sweep_flags;
  sweep_flags.add_to(sweep_cmd, true);
  std::optional<std::vector<int>> grid_hidden;
  std::optional<std::vector<double>> grid_lr;
  sweep_cmd->add_option("--hidden", grid_hidden, "Hidden sizes")
      ->delimiter(',');
  sweep_cmd->add_option("--lr", grid_lr, "Learning rates")->delimiter(',');

  // eval
  auto* eval = app.add_subcommand("eval", "Accuracy by program length");
  std::string eval_ckpt, eval_test, eval_report;
  std::optional<std::string> eval_model;
  eval->add_option("--checkpoint", eval_ckpt, "Model checkpoint")->required();
  eval->add_option("--test", eval_test, "Test records (JSONL)")->required();
  eval->add_option("--model", eval_model, "Expected model kind");
  eval->add_option("--report", eval_report, "Write the JSON report here");

  // attn
  auto* attn = app.add_subcommand("attn", "Export instruction pointer values");
  std::string attn_ckpt, attn_program, attn_record, attn_id, attn_out;
  std::optional<int> attn_v0;
  attn->add_option("--checkpoint", attn_ckpt, "ipagnn or noexecute checkpoint")
      ->required();
  auto* src_opt =
      attn->add_option("--program", attn_program, "Program source file");
  auto* rec_opt =
      attn->add_option("--record", attn_record, "Records file (JSONL)");
  src_opt->excludes(rec_opt);
  attn->add_option("--id", attn_id, "Record id (default: first record)")
      ->needs(rec_opt);
  attn->add_option("--v0", attn_v0, "Replace line 0's constant");
  attn->add_option("--out", attn_out, "TSV output (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  if (gen->parsed()) {
    SplitSpec spec = gen_profile == "paper" ? SplitSpec::paper()
                                            : SplitSpec::desk();
    spec.seed = gen_seed;
    spec.masked = masked;
    if (train_count) spec.train_count = *train_count;
    if (threshold) spec.threshold = *threshold;
    if (test_lengths) spec.test_lengths = *test_lengths;
    if (per_bucket) spec.per_bucket = *per_bucket;
    if (valid_count) spec.valid_count = *valid_count;
    if (workers) spec.workers = *workers;
    const GeneratedSplit s = generate_split(spec, gen_out);
    std::cout << "train: " << s.train.size() << "\nvalid: " << s.valid.size()
              << "\ntest: " << s.test.size() << "\nout: " << gen_out << '\n';
  } else if (run->parsed()) {
    const Program p = parse(slurp(run_file));
    const ExecutionResult r = execute(p, build_cfg(p));
    std::cout << "env: " << format_environment(r.final_env) << '\n'
              << "target: " << r.target << '\n'
              << "trace:";
    for (int n : r.trace) std::cout << ' ' << n;
    std::cout << '\n';
  } else if (cfg->parsed()) {
    std::cout << format_adjacency(build_cfg(parse(slurp(cfg_file))));
  } else if (mask->parsed()) {
    RecordReader reader(mask_in, TraceAccess::kOpen);
    std::ofstream out(mask_out, std::ios::binary);
    if (!out) throw Error("cannot write " + mask_out);
    Example e;
    std::int64_t count = 0;
    while (reader.next(e)) {
      Rng rng = Rng::derive(mask_seed, static_cast<std::uint64_t>(count));
      out << encode_record(mask_example(e, rng)) << '\n';
      ++count;
    }
    std::cout << "masked: " << count << '\n';
  } else if (train_cmd->parsed()) {
    const TrainConfig c = train_flags.config();
    const auto train_set = load_split(train_flags.train_path, c.model);
    std::vector<Example> valid_set;
    if (!train_flags.valid_path.empty()) {
      valid_set = load_split(train_flags.valid_path, c.model);
    }
    std::optional<Checkpoint> resume;
    if (!resume_path.empty()) resume = read_checkpoint(resume_path);
    const TrainRun r =
        train_to_dir(c, train_set, valid_set.empty() ? nullptr : &valid_set,
                     train_flags.out_dir, resume);
    print_summary(r.summary, r.checkpoint);
  } else if (sweep_cmd->parsed()) {
    const TrainConfig c = sweep_flags.config();
    SweepGrid grid = sweep_flags.profile == "paper" ? SweepGrid::paper()
                                                    : SweepGrid::desk();
    if (grid_hidden) grid.hidden = *grid_hidden;
    if (grid_lr) grid.lr = *grid_lr;
    if (sweep_flags.valid_path.empty()) {
      throw UsageError("sweep needs --valid");
    }
    const auto train_set = load_split(sweep_flags.train_path, c.model);
    const auto valid_set = load_split(sweep_flags.valid_path, c.model);
    const SweepResult r =
        sweep(c, grid, train_set, valid_set, sweep_flags.out_dir);
    for (const auto& cell : r.cells) {
      std::cout << cell_name(cell.hidden, cell.lr)
                << " val_accuracy: " << cell.val_accuracy << '\n';
    }
    const auto& b = r.cells[r.best];
    std::cout << "best: " << cell_name(b.hidden, b.lr)
              << "\ncheckpoint: " << r.best_checkpoint.string() << '\n';
  } else if (eval->parsed()) {
    std::optional<ModelKind> expected;
    if (eval_model) expected = parse_model_kind(*eval_model);
    const LoadedModel m = load_model(eval_ckpt, expected);
    const EvalReport r = evaluate(m, load_split(eval_test, m.config.model));
    if (!eval_report.empty()) {
      std::ofstream(eval_report) << report_json(r).dump(2) << '\n';
    }
    std::cout << render_table({r});
  } else if (attn->parsed()) {
    const LoadedModel m = load_model(attn_ckpt);
    Example e;
    if (!attn_record.empty()) {
      RecordReader reader(attn_record, TraceAccess::kSealed);
      bool found = false;
      while (reader.next(e)) {
        if (attn_id.empty() || e.id == attn_id) {
          found = true;
          break;
        }
      }
      if (!found) throw UsageError("no record '" + attn_id + "' in " + attn_record);
    } else if (!attn_program.empty()) {
      e = make_example(parse(slurp(attn_program)),
                       fs::path(attn_program).stem().string(), false);
    } else {
      throw UsageError("attn needs --program or --record");
    }
    if (attn_v0) e = with_initial_value(e, *attn_v0);
    const AttentionMatrix p = attention(m, e);
    if (attn_out.empty()) {
      write_attention(std::cout, p);
    } else {
      std::ofstream out(attn_out);
      if (!out) throw Error("cannot write " + attn_out);
      write_attention(out, p);
    }
  }
  return kOk;
}

}  // namespace
}  // namespace ipagnn

int main(int argc, char** argv) {
  try {
    return ipagnn::run_cli(argc, argv);
  } catch (const ipagnn::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.category()) {
      case ipagnn::Error::Category::kUsage: return ipagnn::kUsage;
      case ipagnn::Error::Category::kNumeric: return ipagnn::kNumeric;
      case ipagnn::Error::Category::kData: return ipagnn::kData;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return ipagnn::kData;
}
