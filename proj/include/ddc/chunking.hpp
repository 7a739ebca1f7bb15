#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddc/library.hpp"
#include "ddc/prob.hpp"
#include "ddc/search.hpp"
#include "ddc/task.hpp"

namespace ddc {

// A chunk candidate: a connected fragment of a program, closed into a
// standalone typed program by binding each cut-off argument position (and
// each variable level escaping the fragment) to a fresh wrapper lambda.
struct Candidate {
  ExprRef fragment;     // closed.expr with the wrapper lambdas stripped
  TypedProgram closed;  // arity nested lambdas around the fragment
  int arity = 0;        // wrapper lambdas introduced by closing
  int size = 0;         // component occurrences; wrapper references are free
};

struct ExtractCaps {
  int min_size = 2;
  int max_size = 8;
};

// All connected subtrees of `programs` within the size caps, closed and
// alpha-deduplicated (keeping the smallest fragment size per closed form).
// Cuts happen only at argument positions: spine heads stay, and a fragment
// whose head escapes the fragment is not closable and is dropped, as are
// fragments alpha-equal (after inlining) to an installed chunk's definition.
// Result is sorted by closed rendering.
std::vector<Candidate> extract_candidates(const Library& lib,
                                          const std::vector<ExprRef>& programs,
                                          const ExtractCaps& caps = {});

// Number of non-overlapping occurrences of the fragment in `p` under greedy
// top-down leftmost matching; equals the number of applications of the
// chunk's primitive after refactor.
int count_uses(const ExprRef& p, const Candidate& f);

struct RefactorResult {
  TypedProgram program;
  int uses = 0;
};

// Replace every greedy top-down leftmost non-overlapping match of the
// fragment with an application of `chunk_name` (first wrapper = first
// argument), recursing into the bound arguments, then restore eta-long form.
// `lib` must already contain `chunk_name`. Unmatched programs come back
// unchanged (modulo eta-long form).
RefactorResult refactor(const Library& lib, const TypedProgram& p, const Candidate& f,
                        const std::string& chunk_name);

// Fraction of a program's description length removed if a fragment used n
// times came for free: n * q_f / q_p on log-probabilities, clamped to [0,1].
// Sets *clamped when the raw ratio exceeded 1. Throws DegenerateInputError
// when q_p == 0 (a probability-1 program) with n > 0.
double caching_benefit(double q_f, double q_p, int n, bool* clamped = nullptr);

// 0 unless `p` solves the task; otherwise caching_benefit with q_f the
// candidate's probability-as-part and q_p the program's own probability,
// both under `model`.
double chunk_benefit(const Library& lib, const ProgramModel& model, const Task& task,
                     const Candidate& f, const ExprRef& p, const ContextPrior& prior,
                     bool* clamped = nullptr);

enum class Criterion { DdcPc, DdcAvg, Compression };

std::optional<Criterion> parse_criterion(const std::string& text);
std::string render_criterion(Criterion c);

struct TaskDiag {
  double q_f = 0.0;          // candidate's probability-as-part for this task
  double contribution = 0.0; // sum over the task's beam of benefit * q(program)
};

struct ScoredCandidate {
  Candidate candidate;
  Criterion criterion = Criterion::DdcPc;
  double score = 0.0;
  bool never_generated = false;  // the ddc-pc normalizer was zero everywhere
  long clamp_events = 0;
  long uses_total = 0;  // count_uses summed over every beam entry
  std::map<std::string, TaskDiag> per_task;  // task id -> diagnostics
};

// One observed task with its beam of solving programs (possibly empty).
struct TaskBeam {
  const Task* task = nullptr;
  std::vector<BeamEntry> entries;
};

// Mean over tasks of q(f|x) * sum over the beam of chunk_benefit * q(rho|x),
// divided by the mean of q(f|x); 0 with the never-generated flag when the
// normalizer vanishes. Scores lie in [0,1].
ScoredCandidate score_ddc_pc(const Library& lib, const ProgramModel& model,
                             const std::vector<TaskBeam>& beams, const Candidate& f,
                             const ContextPrior& prior);

// Mean over observed tasks of q(f|x).
ScoredCandidate score_ddc_avg(const Library& lib, const ProgramModel& model,
                              const std::vector<TaskBeam>& beams, const Candidate& f,
                              const ContextPrior& prior);

// size(f) * sum over beam entries of n / (size(rho) * D^size(rho)) where D is
// the primitive count plus one for the variable pseudo-component whenever any
// beam program binds a variable.
ScoredCandidate score_compression(const Library& lib, const std::vector<TaskBeam>& beams,
                                  const Candidate& f);

ScoredCandidate score_candidate(Criterion c, const Library& lib, const ProgramModel& model,
                                const std::vector<TaskBeam>& beams, const Candidate& f,
                                const ContextPrior& prior);

enum class SelectMode { TopK, Threshold };

struct InstalledChunk {
  std::string name;
  ScoredCandidate scored;
};

struct SelectionResult {
  Library lib;  // library after the sequential installs
  std::vector<InstalledChunk> installed;
  std::vector<ScoredCandidate> ranked;  // full selection order
};

// Order by score desc, then fragment size desc, then closed rendering asc;
// install the top k sequentially, skipping any candidate whose installation
// collides (alpha-equivalent after inlining) with a primitive already
// present. Threshold mode ignores k and installs every candidate scoring at
// least 0.5.
SelectionResult select_top_k(const Library& lib, std::vector<ScoredCandidate> scored, int k,
                             SelectMode mode = SelectMode::TopK, int cycle = -1);

}  // namespace ddc
