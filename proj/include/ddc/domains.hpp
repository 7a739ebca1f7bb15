#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ddc/library.hpp"
#include "ddc/prob.hpp"
#include "ddc/task.hpp"

namespace ddc {

// A task domain bundles the learner-facing starting library with everything
// needed to manufacture benchmark tasks: a richer hidden library whose extra
// chunks encode the concepts tasks are built from, the requested types tasks
// may have, and a feature extractor for the recognition model.
struct DomainSpec {
  std::string name;
  std::uint64_t seed = 0;
  Library lib;      // what the learner starts from (builtins only)
  Library gt_lib;   // lib + hidden chunks, weights tilted toward the chunks
  std::vector<TypeRef> requests;
  std::vector<std::string> hidden_chunks;  // chunk prim names inside gt_lib
  FeatureFn features;
};

// Known domains: "list" (map/fold/cons/... over int lists) and "arith"
// (+, *, small constants; polynomial-style int -> int targets).
// Unknown names throw std::invalid_argument.
DomainSpec make_domain(const std::string& name, std::uint64_t seed);

struct GeneratedTasks {
  std::vector<Task> train;
  std::vector<Task> test;
  // Task id -> the hidden program the examples were produced from. Kept out
  // of Task itself so the learner never sees it; reports may.
  std::map<std::string, TypedProgram> ground_truth;
  long rejected = 0;  // sampling attempts discarded (degenerate, dup, error)
};

// Deterministic given (spec, seed). Train and test ids are disjoint; every
// task's examples come from evaluating a sampled ground-truth program of
// size <= 12, so every task is solvable within the budgeted program space.
// Tasks whose outputs ignore the input, duplicate an already accepted
// behavior, or fail to evaluate are rejected and resampled; exhausting the
// retry budget throws std::runtime_error.
GeneratedTasks generate_tasks(const DomainSpec& spec, int n_train, int n_test,
                              std::uint64_t seed);

// One task's worth of example inputs (one row per example) for a program of
// the given requested type. The same generator backs task generation and
// fantasy tasks dreamed during sleep.
std::vector<std::vector<Value>> domain_inputs(const DomainSpec& spec, const TypeRef& request,
                                              std::mt19937_64& rng);

}  // namespace ddc
