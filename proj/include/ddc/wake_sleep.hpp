#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ddc/chunking.hpp"
#include "ddc/domains.hpp"
#include "ddc/search.hpp"

namespace ddc {

struct LoopConfig {
  Criterion criterion = Criterion::DdcPc;
  int batch_size = 10;
  int beam_cap = 5;
  int top_k = 2;  // 0 disables chunking entirely (the ablation)
  SelectMode select_mode = SelectMode::TopK;
  ExtractCaps caps{};
  long wake_budget = 20000;
  long test_budget = 50000;
  int n_fantasies = 200;
};

// Everything that persists across cycles: the growing library, the current
// recognition model, and per-task solution beams (accumulated, re-scored and
// re-trimmed every cycle).
struct LoopState {
  Library lib;
  RecognitionModel model;
  std::map<std::string, std::vector<BeamEntry>> beams;  // train task id -> beam
  std::set<std::string> train_solved;                   // cumulative

  LoopState(Library l, FeatureFn features) : lib(std::move(l)), model(std::move(features)) {}
};

LoopState make_loop_state(const DomainSpec& spec);

struct CycleMetrics {
  int cycle = -1;
  int train_solved = 0;  // cumulative distinct train tasks ever solved
  int test_solved = 0;
  double test_pct = 0.0;
  double mean_expansions_all = 0.0;     // unsolved tasks count the full budget
  double mean_expansions_solved = 0.0;  // 0 when nothing was solved
  int chunks_installed = 0;             // this cycle
  double mean_chunk_size = 0.0;         // over every chunk in the library
  double mean_solution_size = 0.0;      // over this cycle's solved test tasks
  int fantasies_used = 0;
  long refactor_checks = 0;    // soundness probes run after rewriting beams
  long refactor_failures = 0;  // probes that failed (a rewrite bug if ever nonzero)
};

struct CycleResult {
  CycleMetrics metrics;
  std::vector<InstalledChunk> installed;  // this cycle, in install order
  std::vector<ScoredCandidate> ranked;    // every scored candidate, best first
  // First solution found for each solved test task during evaluation.
  std::vector<std::pair<std::string, ExprRef>> test_solutions;
};

// One wake/sleep/sleep cycle:
//   1. wake: best-first search on a seeded train batch under the current
//      recognition model; solutions land in the per-task beams.
//   2. abstraction sleep: extract fragments from every beam program, score
//      them with cfg.criterion, install the selected ones, rewrite all beams
//      to use the new chunks, refit generation weights.
//   3. dream sleep: sample fantasy tasks from the generative model and train
//      the recognition model on replays + fantasies.
//   4. evaluate every test task under a fixed budget.
// Deterministic given (seed, cycle). Empty batches, candidate sets, or
// fantasy sets degrade gracefully (phases are skipped, never crash).
CycleResult run_cycle(const DomainSpec& spec, const LoopConfig& cfg,
                      const std::vector<Task>& train, const std::vector<Task>& test,
                      LoopState& state, std::uint64_t seed, int cycle);

}  // namespace ddc
