// Copyright 2026 The lordo Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

// lordo: run, sweep, cost and analyze distributed low-rank optimizer
// simulations. Exit codes: 0 success, 1 usage or config error, 2 diverged.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lordo/config.hpp"
#include "lordo/costs.hpp"
#include "lordo/metric_log.hpp"

namespace fs = std::filesystem;
using namespace lordo;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitDiverged = 2;

struct RunArgs {
  std::string config;
  std::string out;
  std::size_t threads = 0;
  std::optional<std::uint64_t> seed;
  bool timing = false;
};

struct SweepArgs {
  RunArgs run;
  std::string axis;
  std::vector<std::string> values;
  std::size_t parallel = 1;
};

struct CostArgs {
  std::uint64_t p = 0, q = 0, r = 0;
  std::uint64_t k = 32;
  std::optional<std::uint64_t> kx, ku, kv;
  std::uint64_t workers = 1;
};

RunConfig load_with_overrides(const RunArgs& a) {
  RunConfig c = load_config(a.config);
  if (a.seed) c.seed = *a.seed;
  c.validate();
  return c;
}

int cmd_run(const RunArgs& a) {
  RunConfig config = load_with_overrides(a);
  std::ofstream out(a.out);
  if (!out) {
    std::cerr << "error: cannot write " << a.out << "\n";
    return kExitError;
  }
  const RunSummary s = run_to_log(config, out, {.threads = a.threads, .timing = a.timing});
  if (s.divergence) {
    std::cerr << "diverged at step " << s.divergence->step << ": " << s.divergence->reason << "\n";
    return kExitDiverged;
  }
  std::printf("completed %lld steps, final loss %.6g\n",
              static_cast<long long>(s.steps_completed), s.final_loss.value_or(0.0));
  return kExitOk;
}

template <typename T>
T parse_value(const std::string& axis, const std::string& text) {
  std::istringstream ss(text);
  T v{};
  ss >> v;
  if (!ss || !ss.eof()) throw ConfigError("sweep " + axis + ": bad value \"" + text + "\"");
  return v;
}

RunConfig sweep_point(const RunConfig& base, const std::string& axis, const std::string& value) {
  RunConfig c = base;
  if (axis == "rank") {
    c.rank = parse_value<std::size_t>(axis, value);
  } else if (axis == "K") {
    const auto k = parse_value<std::int64_t>(axis, value);
    c.sync = {k, k, k};
  } else if (axis == "batch_and_workers") {
    // Holds the global batch (workers x batch_size of the base config) fixed.
    const auto m = parse_value<std::size_t>(axis, value);
    const std::size_t global = base.workers * base.batch_size;
    if (m == 0 || global % m != 0)
      throw ConfigError("sweep batch_and_workers: " + value + " workers do not divide global batch " +
                        std::to_string(global));
    c.workers = m;
    c.batch_size = global / m;
  } else if (axis == "omega") {
    if (base.qhm == QhmMode::kNone)
      throw ConfigError("sweep omega: base config has qhm.mode none");
    c.hp.omega = parse_value<double>(axis, value);
  } else if (axis == "sparsity") {
    c.flags.sparsify_keep = parse_value<double>(axis, value);
  } else {
    throw ConfigError("sweep: unknown axis \"" + axis +
                      "\" (expected rank, K, batch_and_workers, omega, sparsity)");
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError("sweep " + axis + "=" + value + ": " + e.what());
  }
  return c;
}

int cmd_sweep(const SweepArgs& a) {
  const RunConfig base = load_with_overrides(a.run);
  std::vector<RunConfig> points;
  for (const auto& v : a.values) points.push_back(sweep_point(base, a.axis, v));

  fs::create_directories(a.run.out);
  std::vector<RunSummary> results(points.size());
  std::vector<fs::path> paths;
  for (const auto& v : a.values) paths.push_back(fs::path(a.run.out) / ("point_" + a.axis + "_" + v + ".jsonl"));

  auto run_point = [&](std::size_t i) {
    std::ofstream out(paths[i]);
    if (!out) throw std::runtime_error("cannot write " + paths[i].string());
    results[i] = run_to_log(points[i], out, {.threads = a.run.threads, .timing = a.run.timing});
  };
  const std::size_t parallel = std::max<std::size_t>(1, std::min(a.parallel, points.size()));
  if (parallel == 1) {
    for (std::size_t i = 0; i < points.size(); ++i) run_point(i);
  } else {
    std::vector<std::exception_ptr> errors(parallel);
    {
      std::vector<std::jthread> pool;
      for (std::size_t k = 0; k < parallel; ++k)
        pool.emplace_back([&, k] {
          try {
            for (std::size_t i = k; i < points.size(); i += parallel) run_point(i);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        });
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  const fs::path summary = fs::path(a.run.out) / "summary.csv";
  std::ofstream csv(summary);
  csv << "axis,value,workers,batch_size,rank,K_x,final_loss,diverged,diverged_at,"
         "uplink_bytes,downlink_bytes,log\n";
  bool any_diverged = false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const RunConfig& c = points[i];
    const RunSummary& s = results[i];
    char loss[64] = "";
    if (s.final_loss) std::snprintf(loss, sizeof loss, "%.17g", *s.final_loss);
    csv << a.axis << ',' << a.values[i] << ',' << c.workers << ',' << c.batch_size << ','
        << c.rank << ',' << c.sync.kx << ',' << loss << ',' << (s.divergence ? 1 : 0) << ','
        << (s.divergence ? std::to_string(s.divergence->step) : "") << ','
        << s.total_uplink_bytes << ',' << s.total_downlink_bytes << ','
        << paths[i].filename().string() << '\n';
    any_diverged = any_diverged || s.divergence.has_value();
  }
  std::printf("%zu points written to %s\n", points.size(), summary.string().c_str());
  return any_diverged ? kExitDiverged : kExitOk;
}

int cmd_costs(const CostArgs& a) {
  costs::CostInputs in{.p = a.p,
                       .q = a.q,
                       .r = a.r,
                       .kx = a.kx.value_or(a.k),
                       .ku = a.ku.value_or(a.k),
                       .kv = a.kv.value_or(a.k),
                       .workers = a.workers};
  in.validate();

  std::printf("p=%llu q=%llu r=%llu K_x=%llu K_u=%llu K_v=%llu (element counts per link)\n\n",
              static_cast<unsigned long long>(in.p), static_cast<unsigned long long>(in.q),
              static_cast<unsigned long long>(in.r), static_cast<unsigned long long>(in.kx),
              static_cast<unsigned long long>(in.ku), static_cast<unsigned long long>(in.kv));
  std::printf("%-22s %14s %14s %14s %16s\n", "variant", "uplink", "downlink", "memory",
              "memory+buffer");
  const ProjectionStrategy strategies[] = {ProjectionStrategy::kGlobal, ProjectionStrategy::kLocal,
                                           ProjectionStrategy::kFixed};
  const QhmMode modes[] = {QhmMode::kNone, QhmMode::kLowRank, QhmMode::kFullRank};
  for (auto s : strategies) {
    for (auto m : modes) {
      const auto pc = costs::per_payload(s, m, in);
      const auto mem = costs::memory_overhead(s, m, costs::ErrorFeedbackLayout::kSeparateBuffer,
                                              false, in);
      std::string buffered = "n/a";
      if (m != QhmMode::kFullRank)
        buffered = std::to_string(
            costs::memory_overhead(s, m, costs::ErrorFeedbackLayout::kSeparateBuffer, true, in)
                .elements);
      const std::string name = std::string(to_string(s)) + "/" + std::string(to_string(m));
      std::printf("%-22s %14llu %14llu %14llu %16s\n", name.c_str(),
                  static_cast<unsigned long long>(pc.uplink_total()),
                  static_cast<unsigned long long>(pc.downlink_total()),
                  static_cast<unsigned long long>(mem.elements), buffered.c_str());
    }
  }
  const auto adam = costs::baseline_payload(costs::Baseline::kLocalAdam, in);
  const auto ddp = costs::baseline_payload(costs::Baseline::kDdp, in);
  std::printf("%-22s %14llu %14llu %14llu %16s\n", "baseline/local_adam",
              static_cast<unsigned long long>(adam.uplink_total()),
              static_cast<unsigned long long>(adam.downlink_total()),
              static_cast<unsigned long long>(costs::adam_memory_overhead(in)), "n/a");
  std::printf("%-22s %14llu %14llu %14s %16s\n", "baseline/ddp",
              static_cast<unsigned long long>(ddp.uplink_total()),
              static_cast<unsigned long long>(ddp.downlink_total()), "-", "n/a");

  std::printf("\nreduction ratios\n");
  bool flagged = false;
  auto ratio = [&](const char* name, double value) {
    const bool bad = !(value > 1.0);
    flagged = flagged || bad;
    std::printf("  %-38s %10.2f%s\n", name, value, bad ? "  [no reduction]" : "");
  };
  ratio("vs low-rank DDP", costs::reduction_vs_lowrank_ddp(in));
  ratio("vs full-rank DDP", costs::reduction_vs_fullrank_ddp(in));
  ratio("vs full-rank local Adam (global)",
        costs::reduction_vs_fullrank_local(in, ProjectionStrategy::kGlobal));
  ratio("vs full-rank local Adam (local)",
        costs::reduction_vs_fullrank_local(in, ProjectionStrategy::kLocal));
  if (in.r > 0) ratio("optimizer state p/r", costs::optimizer_state_ratio(in));
  if (flagged) std::printf("\nwarning: some ratios are <= 1; this configuration does not save traffic\n");
  return kExitOk;
}

int cmd_analyze(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open " << path << "\n";
    return kExitError;
  }
  const LogAnalysis a = analyze_log(in);
  std::printf("steps: %lld\n", static_cast<long long>(a.steps));
  if (a.diverged)
    std::printf("status: diverged at step %lld\n", static_cast<long long>(*a.diverged_at));
  else
    std::printf("status: completed\n");
  if (a.final_loss)
    std::printf("final loss: %.10g\n", *a.final_loss);
  else
    std::printf("final loss: n/a\n");
  for (const auto& [layer, la] : a.layers)
    std::printf("layer %zu: projection updates %zu, mean MSSV %.9f, stable rank min %.6g max %.6g\n",
                layer, la.projection_updates, la.mean_mssv, la.min_stable_rank,
                la.max_stable_rank);
  if (a.layers.empty()) std::printf("no projection updates logged\n");
  return kExitOk;
}

void add_run_flags(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("--config", a.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out, "Output path")->required();
  cmd->add_option("--threads", a.threads, "Worker threads (default: one per worker)");
  cmd->add_option("--seed", a.seed, "Override the master seed");
  cmd->add_flag("--timing", a.timing, "Record wall-clock seconds per step");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lordo: distributed low-rank optimizer simulator"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run one experiment and write a JSONL metric log");
  add_run_flags(run, run_args);

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Run a configuration across one axis");
  add_run_flags(sweep, sweep_args.run);
  sweep->get_option("--out")->description("Output directory");
  sweep->add_option("--axis", sweep_args.axis, "rank | K | batch_and_workers | omega | sparsity")
      ->required();
  sweep->add_option("--values", sweep_args.values, "Axis values")->required()->delimiter(',');
  sweep->add_option("--parallel", sweep_args.parallel, "Points to run concurrently");

  CostArgs cost_args;
  auto* cost = app.add_subcommand("costs", "Print communication and memory cost tables");
  cost->add_option("--p", cost_args.p, "Rows of the parameter matrix")->required();
  cost->add_option("--q", cost_args.q, "Columns of the parameter matrix")->required();
  cost->add_option("--r", cost_args.r, "Projection rank")->required();
  cost->add_option("--k", cost_args.k, "Shared sync period");
  cost->add_option("--kx", cost_args.kx, "Parameter sync period");
  cost->add_option("--ku", cost_args.ku, "First-moment sync period");
  cost->add_option("--kv", cost_args.kv, "Second-moment sync period");
  cost->add_option("--workers", cost_args.workers, "Worker count");

  std::string log_path;
  auto* analyze = app.add_subcommand("analyze", "Summarize a metric log");
  analyze->add_option("log", log_path, "JSONL log")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*sweep) return cmd_sweep(sweep_args);
    if (*cost) return cmd_costs(cost_args);
    if (*analyze) return cmd_analyze(log_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
