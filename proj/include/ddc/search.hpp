#pragma once

#include <functional>
#include <vector>

#include "ddc/eval.hpp"
#include "ddc/library.hpp"
#include "ddc/prob.hpp"
#include "ddc/task.hpp"

namespace ddc {

struct SearchBudget {
  long expansions = 20000;  // frontier pops, counting emissions
};

// Emitted program, its log-probability under the search model, and the pops
// consumed so far. Return false to stop the enumeration early.
using EmitFn = std::function<bool(const ExprRef& program, double logprob, long pops)>;

// Best-first enumeration of complete eta-long programs at `requested`,
// ordered by an upper bound on their log-probability (exact, and therefore
// emitted in non-increasing probability order, when no type variables couple
// the holes; ties break on the rendered text). Returns expansions used.
long enumerate_programs(const Library& lib, const ProgramModel& model, const Task* task,
                        const TypeRef& requested, const SearchBudget& budget,
                        const EmitFn& emit);

// Does `program` reproduce every example of `task`? Evaluation errors and
// step-budget exhaustion count as a miss, not a failure.
bool check_solution(const Library& lib, const ExprRef& program, const Task& task,
                    long eval_steps = kDefaultEvalSteps);

struct BeamEntry {
  ExprRef program;
  double logprob;  // under the model the beam was last scored with
};

struct WakeTaskResult {
  std::vector<BeamEntry> solutions;  // emission order, at most `capacity`
  long expansions_to_first = -1;     // pops consumed when the first hit was emitted
  long expansions_used = 0;
};

// Enumerate under the recognition model until `capacity` solutions are found
// or the budget runs out.
WakeTaskResult wake_task(const Library& lib, const ProgramModel& model, const Task& task,
                         const SearchBudget& budget, int capacity);

}  // namespace ddc
