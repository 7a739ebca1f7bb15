#include "ddc/wake_sleep.hpp"

#include <algorithm>
#include <random>
#include <utility>

#include "ddc/eval.hpp"
#include "ddc/util.hpp"

namespace ddc {
namespace {

constexpr int kFantasyDepth = 6;

std::map<std::string, const Task*> index_tasks(const std::vector<Task>& ts) {
  std::map<std::string, const Task*> by_id;
  for (const Task& t : ts) by_id.emplace(t.id, &t);
  return by_id;
}

// Dedupe by rendering, score under the current model, keep the `cap` most
// probable (ties on rendered text). Entries the model cannot generate at all
// are dropped.
void rescore_and_trim(const Library& lib, const RecognitionModel& model, const Task& task,
                      std::vector<BeamEntry>& beam, int cap) {
  std::map<std::string, ExprRef> uniq;
  for (const BeamEntry& e : beam) uniq.emplace(render_expr(e.program), e.program);
  std::vector<std::pair<std::string, BeamEntry>> rows;
  for (const auto& [text, program] : uniq) {
    auto lp = program_logprob(lib, model, &task, program, task.requested);
    if (lp) rows.push_back({text, {program, *lp}});
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second.logprob != b.second.logprob) return a.second.logprob > b.second.logprob;
    return a.first < b.first;
  });
  if (static_cast<int>(rows.size()) > cap) rows.resize(cap);
  beam.clear();
  for (auto& r : rows) beam.push_back(std::move(r.second));
}

}  // namespace

LoopState make_loop_state(const DomainSpec& spec) {
  LoopState st(spec.lib, spec.features);
  st.lib.set_uniform_theta();
  return st;
}

CycleResult run_cycle(const DomainSpec& spec, const LoopConfig& cfg,
                      const std::vector<Task>& train, const std::vector<Task>& test,
                      LoopState& state, std::uint64_t seed, int cycle) {
  CycleResult res;
  CycleMetrics& m = res.metrics;
  m.cycle = cycle;
  const auto train_by_id = index_tasks(train);

  // --- wake: search a seeded batch of train tasks under the recognition model.
  {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(cycle), 1));
    std::vector<size_t> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    size_t batch = std::min<size_t>(order.size(), static_cast<size_t>(std::max(cfg.batch_size, 0)));
    for (size_t i = 0; i < batch; ++i) {
      const Task& t = train[order[i]];
      WakeTaskResult r = wake_task(state.lib, state.model, t, {cfg.wake_budget}, cfg.beam_cap);
      if (!r.solutions.empty()) state.train_solved.insert(t.id);
      auto& beam = state.beams[t.id];
      beam.insert(beam.end(), r.solutions.begin(), r.solutions.end());
      rescore_and_trim(state.lib, state.model, t, beam, cfg.beam_cap);
    }
    m.train_solved = static_cast<int>(state.train_solved.size());
  }

  // --- abstraction sleep: mine the beams for chunks, rewrite, refit weights.
  std::vector<TaskBeam> task_beams;
  std::vector<ExprRef> beam_programs;
  std::vector<std::pair<ExprRef, TypeRef>> beam_typed;
  for (const auto& [id, beam] : state.beams) {
    if (beam.empty()) continue;
    const Task* t = train_by_id.at(id);
    task_beams.push_back({t, beam});
    for (const BeamEntry& e : beam) {
      beam_programs.push_back(e.program);
      beam_typed.push_back({e.program, t->requested});
    }
  }

  bool chunking = cfg.select_mode == SelectMode::Threshold || cfg.top_k > 0;
  if (chunking && !beam_programs.empty()) {
    std::vector<Candidate> cands = extract_candidates(state.lib, beam_programs, cfg.caps);
    if (!cands.empty()) {
      ContextPrior prior = estimate_context_prior(state.lib, beam_typed);
      std::vector<ScoredCandidate> scored;
      scored.reserve(cands.size());
      for (const Candidate& c : cands)
        scored.push_back(score_candidate(cfg.criterion, state.lib, state.model, task_beams, c, prior));
      SelectionResult sel = select_top_k(state.lib, std::move(scored), cfg.top_k,
                                         cfg.select_mode, cycle);
      res.installed = sel.installed;
      res.ranked = std::move(sel.ranked);
      if (!sel.installed.empty()) {
        state.lib = std::move(sel.lib);
        for (auto& [id, beam] : state.beams) {
          const Task& t = *train_by_id.at(id);
          for (BeamEntry& entry : beam) {
            TypedProgram cur{entry.program, t.requested};
            for (const InstalledChunk& ic : res.installed)
              cur = refactor(state.lib, cur, ic.scored.candidate, ic.name).program;
            // Soundness probes: the rewrite must preserve behavior on the
            // task and inline back to the same beta-eta normal form.
            ++m.refactor_checks;
            bool solves = check_solution(state.lib, cur.expr, t);
            ExprRef now = eta_long(state.lib, beta_normalize(state.lib.inline_expr(cur.expr)),
                                   t.requested);
            ExprRef was = eta_long(
                state.lib, beta_normalize(state.lib.inline_expr(entry.program)), t.requested);
            if (!solves || !expr_equal(now, was)) ++m.refactor_failures;
            entry.program = cur.expr;
          }
        }
        beam_programs.clear();
        for (const auto& [id, beam] : state.beams)
          for (const BeamEntry& e : beam) beam_programs.push_back(e.program);
      }
    }
  }
  m.chunks_installed = static_cast<int>(res.installed.size());
  // No solutions yet means nothing to fit; keep the current weights.
  if (!beam_programs.empty()) state.lib = state.lib.fit_theta(beam_programs);
  {
    int n = 0;
    long total = 0;
    for (const Primitive& p : state.lib.prims())
      if (p.origin == Primitive::Origin::Chunk) {
        ++n;
        total += expr_size(p.definition);
      }
    m.mean_chunk_size = n > 0 ? static_cast<double>(total) / n : 0.0;
  }

  // --- dream sleep: train the recognition model on replays and fantasies.
  {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(cycle), 2));
    GenerativeModel gen(state.lib);
    std::vector<std::pair<ExprRef, Task>> dreamt;
    const long attempt_cap = 20l * cfg.n_fantasies + 100;
    for (long attempt = 0; attempt < attempt_cap &&
                           static_cast<int>(dreamt.size()) < cfg.n_fantasies;
         ++attempt) {
      const TypeRef& request = spec.requests[rng() % spec.requests.size()];
      auto prog = sample_program(state.lib, gen, request, rng, kFantasyDepth);
      if (!prog) continue;
      Task ft;
      ft.id = "dream_" + std::to_string(cycle) + "_" + std::to_string(dreamt.size());
      ft.domain = spec.name;
      ft.requested = request;
      bool ok = true;
      for (auto& row : domain_inputs(spec, request, rng)) {
        try {
          Value out = run_program(state.lib, prog->expr, row);
          ft.examples.push_back({std::move(row), std::move(out)});
        } catch (const EvalError&) {
          ok = false;
          break;
        }
      }
      if (ok) dreamt.push_back({prog->expr, std::move(ft)});
    }
    m.fantasies_used = static_cast<int>(dreamt.size());

    std::vector<std::pair<ExprRef, const Task*>> replays;
    for (const auto& [id, beam] : state.beams) {
      const Task* t = train_by_id.at(id);
      for (const BeamEntry& e : beam) replays.push_back({e.program, t});
    }
    std::vector<std::pair<ExprRef, const Task*>> fantasies;
    fantasies.reserve(dreamt.size());
    for (const auto& [p, t] : dreamt) fantasies.push_back({p, &t});
    state.model = fit_recognition(state.lib, replays, fantasies, spec.features);
  }

  // Beams carry scores under whatever model last touched them; re-score under
  // the fresh model so checkpoints and the next wake agree, and re-apply the
  // capacity bound.
  for (auto& [id, beam] : state.beams)
    rescore_and_trim(state.lib, state.model, *train_by_id.at(id), beam, cfg.beam_cap);

  // --- evaluation on the held-out tasks, fixed budget, first hit wins.
  {
    long exp_all = 0, exp_solved = 0, size_solved = 0;
    for (const Task& t : test) {
      WakeTaskResult r = wake_task(state.lib, state.model, t, {cfg.test_budget}, 1);
      if (r.solutions.empty()) {
        exp_all += r.expansions_used;
        continue;
      }
      ++m.test_solved;
      exp_all += r.expansions_to_first;
      exp_solved += r.expansions_to_first;
      size_solved += expr_size(r.solutions.front().program);
      res.test_solutions.push_back({t.id, r.solutions.front().program});
    }
    if (!test.empty()) {
      m.test_pct = 100.0 * m.test_solved / static_cast<double>(test.size());
      m.mean_expansions_all = static_cast<double>(exp_all) / static_cast<double>(test.size());
    }
    if (m.test_solved > 0) {
      m.mean_expansions_solved = static_cast<double>(exp_solved) / m.test_solved;
      m.mean_solution_size = static_cast<double>(size_solved) / m.test_solved;
    }
  }
  return res;
}

}  // namespace ddc
