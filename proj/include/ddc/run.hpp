#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ddc/wake_sleep.hpp"

namespace ddc {

struct RunConfig {
  std::string domain = "list";
  int cycles = 10;
  int n_train = 30;
  int n_test = 20;
  std::uint64_t task_seed = 1;  // shared across run seeds: one task population
  LoopConfig loop;
  std::vector<std::uint64_t> seeds = {1};
  std::string out_dir;  // empty: keep everything in memory, write nothing
};

// Throws std::invalid_argument with a readable message on nonsensical
// settings (non-positive counts, no seeds, unknown domain name).
void validate_config(const RunConfig& cfg);

// One scored-candidate line of the per-cycle chunk report.
struct ChunkRow {
  int cycle;
  int rank;
  std::string name;  // installed chunk name, empty for rejected candidates
  std::string rendering;
  int size;
  double score;
  long uses;
  bool installed;
};

struct SeedResult {
  std::uint64_t seed;
  std::vector<CycleMetrics> metrics;          // one row per cycle
  std::vector<ChunkRow> chunks;               // ranked rows, all cycles
  std::vector<std::string> beam_digests;      // post-cycle beam dump per cycle
  std::string final_library_json;
  // Hidden concept -> the installed chunk that inlines to the same program
  // (empty string when never recovered).
  std::map<std::string, std::string> recovered;
  // Installed chunk name -> percentage of the final cycle's solved test
  // tasks whose solution mentions it.
  std::vector<std::pair<std::string, double>> usefulness;
};

struct RunResult {
  RunConfig config;
  GeneratedTasks tasks;
  std::vector<SeedResult> seeds;
};

// Runs cycles x seeds, collecting per-cycle metrics and chunk reports. When
// cfg.out_dir is set, writes: tasks, metrics.csv, summary.json, per-seed
// chunk reports and per-cycle library/model/beam checkpoints. Identical
// configs produce byte-identical artifacts. `log` (optional) receives
// one progress line per cycle.
RunResult run_experiment(const RunConfig& cfg, std::ostream* log = nullptr);

struct CompareReport {
  std::vector<RunResult> runs;
  // Per seed: first cycle whose post-cycle beam state differs between any
  // two runs, -1 when they never diverge.
  std::map<std::uint64_t, int> divergence_cycle;
  std::string text;  // rendered side-by-side table
};

// Side-by-side comparison of configs that must agree on everything except
// the criterion (same domain, seeds, counts, budgets); otherwise throws
// std::invalid_argument. Identical criteria are allowed and produce a
// zero-difference report. When out_dir is non-empty, writes compare.txt
// there.
CompareReport compare_runs(std::vector<RunConfig> configs, const std::string& out_dir = "",
                           std::ostream* log = nullptr);

// Rendered artifact helpers (also used by the CLI and tests).
std::string metrics_csv(const RunResult& r);
std::string summary_json(const RunResult& r);
std::string chunks_csv(const SeedResult& s);

}  // namespace ddc
