#include "ddc/chunking.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

#include "ddc/util.hpp"

namespace ddc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Slot markers inside fragment shapes: a cut argument position gets its own
// slot per occurrence, while occurrences of one escaping variable level all
// share a slot.
constexpr int kCutHole = -1;

struct Shape {
  ExprRef proto;  // hole(kCutHole) = cut, hole(level >= 0) = escaping variable
  int size = 0;   // component occurrences; holes are free
};

// Every fragment shape rooted at `e`, which sits `depth` binders below the
// fragment root. Cuts happen only at argument positions; a shape whose spine
// head escapes the fragment cannot be closed and is omitted.
void shapes_at(const ExprRef& e, int depth, int max_size, std::vector<Shape>& out) {
  switch (e->tag) {
    case Expr::Tag::Prim:
      out.push_back({e, 1});
      return;
    case Expr::Tag::Index:
      if (e->index < depth) out.push_back({e, 1});
      else out.push_back({Expr::hole(e->index - depth), 0});
      return;
    case Expr::Tag::Lambda: {
      std::vector<Shape> body;
      shapes_at(e->body, depth + 1, max_size, body);
      for (auto& s : body) out.push_back({Expr::lambda(s.proto), s.size});
      return;
    }
    case Expr::Tag::Apply: {
      ExprRef head;
      std::vector<ExprRef> args;
      spine(e, head, args);
      if (head->is(Expr::Tag::Index) && head->index >= depth) return;
      if (!head->is(Expr::Tag::Prim) && !head->is(Expr::Tag::Index)) return;
      std::vector<Shape> acc{{head, 1}};
      for (const auto& a : args) {
        std::vector<Shape> opts{{Expr::hole(kCutHole), 0}};
        shapes_at(a, depth, max_size, opts);
        std::vector<Shape> next;
        for (const auto& sofar : acc)
          for (const auto& opt : opts) {
            if (sofar.size + opt.size > max_size) continue;
            next.push_back({Expr::apply(sofar.proto, opt.proto), sofar.size + opt.size});
          }
        acc = std::move(next);
      }
      for (auto& s : acc) out.push_back(std::move(s));
      return;
    }
    case Expr::Tag::Hole:
      return;
  }
}

// First pass: number the slots in left-to-right first-occurrence order
// (cut holes one each, escaping levels shared).
ExprRef assign_slots(const ExprRef& e, int& arity, std::map<int, int>& level_slot) {
  switch (e->tag) {
    case Expr::Tag::Hole: {
      int slot;
      if (e->hole_id == kCutHole) {
        slot = arity++;
      } else {
        auto it = level_slot.find(e->hole_id);
        if (it == level_slot.end()) it = level_slot.emplace(e->hole_id, arity++).first;
        slot = it->second;
      }
      return Expr::hole(slot);
    }
    case Expr::Tag::Apply: {
      ExprRef fn = assign_slots(e->fn, arity, level_slot);
      ExprRef arg = assign_slots(e->arg, arity, level_slot);
      return Expr::apply(std::move(fn), std::move(arg));
    }
    case Expr::Tag::Lambda:
      return Expr::lambda(assign_slots(e->body, arity, level_slot));
    default:
      return e;
  }
}

// Second pass: slot j becomes a reference to the j-th wrapper lambda
// (outermost = first), so slot j at depth k reads Index(k + arity - 1 - j).
ExprRef bind_slots(const ExprRef& e, int depth, int arity) {
  switch (e->tag) {
    case Expr::Tag::Hole:
      return Expr::ix(depth + arity - 1 - e->hole_id);
    case Expr::Tag::Apply:
      return Expr::apply(bind_slots(e->fn, depth, arity), bind_slots(e->arg, depth, arity));
    case Expr::Tag::Lambda:
      return Expr::lambda(bind_slots(e->body, depth + 1, arity));
    default:
      return e;
  }
}

void close_shape(const Library& lib, const Shape& s, const ExtractCaps& caps,
                 std::map<std::string, Candidate>& dedup) {
  if (s.size < caps.min_size || s.size > caps.max_size) return;
  int arity = 0;
  std::map<int, int> level_slot;
  ExprRef numbered = assign_slots(s.proto, arity, level_slot);
  ExprRef fragment = bind_slots(numbered, 0, arity);
  ExprRef closed = fragment;
  for (int i = 0; i < arity; ++i) closed = Expr::lambda(closed);
  TypeRef ty;
  try {
    ty = infer_type(lib, closed);
  } catch (const TypeError&) {
    return;
  }
  Candidate c{fragment, {closed, ty}, arity, s.size};
  std::string key = render_expr(closed);
  auto it = dedup.find(key);
  if (it == dedup.end()) dedup.emplace(std::move(key), std::move(c));
  else if (c.size < it->second.size) it->second = std::move(c);
}

void collect_roots(const Library& lib, const ExprRef& e, bool fn_child, const ExtractCaps& caps,
                   std::map<std::string, Candidate>& dedup) {
  // An Apply in function position is a sub-spine; its shapes are exactly the
  // parent spine's shapes with the trailing arguments cut, so skip the root.
  if (!(e->is(Expr::Tag::Apply) && fn_child)) {
    std::vector<Shape> shapes;
    shapes_at(e, 0, caps.max_size, shapes);
    for (const auto& s : shapes) close_shape(lib, s, caps, dedup);
  }
  switch (e->tag) {
    case Expr::Tag::Apply:
      collect_roots(lib, e->fn, true, caps, dedup);
      collect_roots(lib, e->arg, false, caps, dedup);
      return;
    case Expr::Tag::Lambda:
      collect_roots(lib, e->body, false, caps, dedup);
      return;
    default:
      return;
  }
}

bool contains_lambda(const ExprRef& e) {
  bool found = false;
  visit(e, [&](const ExprRef& n) { found = found || n->is(Expr::Tag::Lambda); });
  return found;
}

// Does `e` contain a free variable bound fewer than `below` binders above it?
bool has_free_below(const ExprRef& e, int below, int cutoff = 0) {
  switch (e->tag) {
    case Expr::Tag::Index:
      return e->index >= cutoff && e->index - cutoff < below;
    case Expr::Tag::Apply:
      return has_free_below(e->fn, below, cutoff) || has_free_below(e->arg, below, cutoff);
    case Expr::Tag::Lambda:
      return has_free_below(e->body, below, cutoff + 1);
    default:
      return false;
  }
}

// Match the fragment `P` (slot j rendered as Index(k + arity - 1 - j) at
// depth k) against `T`, collecting per-slot bindings shifted to the match
// site's level. A slot refuses targets that reach binders inside the pattern.
bool match_at(const ExprRef& P, const ExprRef& T, int k, int arity, std::vector<ExprRef>& b) {
  if (P->is(Expr::Tag::Index) && P->index >= k) {
    int slot = arity - 1 - (P->index - k);
    if (has_free_below(T, k)) return false;
    ExprRef bound = shift(T, -k);
    if (b[slot]) return expr_equal(b[slot], bound);
    b[slot] = bound;
    return true;
  }
  if (P->tag != T->tag) return false;
  switch (P->tag) {
    case Expr::Tag::Prim:
      return P->prim_name == T->prim_name;
    case Expr::Tag::Index:
      return P->index == T->index;
    case Expr::Tag::Apply:
      return match_at(P->fn, T->fn, k, arity, b) && match_at(P->arg, T->arg, k, arity, b);
    case Expr::Tag::Lambda:
      return match_at(P->body, T->body, k + 1, arity, b);
    default:
      return false;
  }
}

// Greedy top-down leftmost non-overlapping replacement; matched slots are
// rewritten recursively so uses nested inside arguments still count.
ExprRef rewrite_uses(const ExprRef& e, const Candidate& f, const ExprRef& g, int& count) {
  std::vector<ExprRef> b(f.arity);
  if (match_at(f.fragment, e, 0, f.arity, b) &&
      std::all_of(b.begin(), b.end(), [](const ExprRef& x) { return x != nullptr; })) {
    ++count;
    std::vector<ExprRef> args;
    args.reserve(b.size());
    for (const auto& bound : b) args.push_back(rewrite_uses(bound, f, g, count));
    return app(g, args);
  }
  switch (e->tag) {
    case Expr::Tag::Apply: {
      ExprRef fn = rewrite_uses(e->fn, f, g, count);
      ExprRef arg = rewrite_uses(e->arg, f, g, count);
      return Expr::apply(std::move(fn), std::move(arg));
    }
    case Expr::Tag::Lambda:
      return Expr::lambda(rewrite_uses(e->body, f, g, count));
    default:
      return e;
  }
}

ScoredCandidate scored_shell(const Candidate& f, Criterion c) {
  ScoredCandidate out;
  out.candidate = f;
  out.criterion = c;
  return out;
}

}  // namespace

std::vector<Candidate> extract_candidates(const Library& lib,
                                          const std::vector<ExprRef>& programs,
                                          const ExtractCaps& caps) {
  std::map<std::string, Candidate> dedup;
  for (const auto& p : programs) collect_roots(lib, p, false, caps, dedup);

  std::set<std::string> definitions;
  for (const auto& prim : lib.prims())
    if (prim.definition)
      definitions.insert(render_expr(beta_normalize(lib.inline_expr(prim.definition))));

  std::vector<Candidate> out;
  out.reserve(dedup.size());
  for (auto& [key, cand] : dedup) {
    (void)key;
    if (!definitions.empty() &&
        definitions.count(render_expr(beta_normalize(lib.inline_expr(cand.closed.expr)))))
      continue;
    out.push_back(std::move(cand));
  }
  return out;
}

int count_uses(const ExprRef& p, const Candidate& f) {
  int n = 0;
  rewrite_uses(p, f, Expr::prim("#use"), n);
  return n;
}

RefactorResult refactor(const Library& lib, const TypedProgram& p, const Candidate& f,
                        const std::string& chunk_name) {
  int n = 0;
  ExprRef rewritten = rewrite_uses(p.expr, f, Expr::prim(chunk_name), n);
  rewritten = eta_long(lib, rewritten, p.type);
  infer_type(lib, rewritten);  // a failure here is a rewrite bug, not bad input
  return {{rewritten, p.type}, n};
}

double caching_benefit(double q_f, double q_p, int n, bool* clamped) {
  if (n == 0) return 0.0;
  if (q_p == 0.0) throw DegenerateInputError("caching_benefit: probability-1 program with uses");
  double c = static_cast<double>(n) * q_f / q_p;
  if (std::isnan(c)) return 0.0;  // both log-probabilities at -inf
  if (c > 1.0) {
    if (clamped) *clamped = true;
    return 1.0;
  }
  return c < 0.0 ? 0.0 : c;
}

double chunk_benefit(const Library& lib, const ProgramModel& model, const Task& task,
                     const Candidate& f, const ExprRef& p, const ContextPrior& prior,
                     bool* clamped) {
  if (!check_solution(lib, p, task)) return 0.0;
  int n = count_uses(p, f);
  if (n == 0) return 0.0;
  auto q_p = program_logprob(lib, model, &task, p, task.requested);
  double q_f = function_logprob_as_part(lib, model, &task, f.closed.expr, f.arity, prior);
  return caching_benefit(q_f, q_p ? *q_p : kNegInf, n, clamped);
}

std::optional<Criterion> parse_criterion(const std::string& text) {
  if (text == "ddc-pc") return Criterion::DdcPc;
  if (text == "ddc-avg") return Criterion::DdcAvg;
  if (text == "compression") return Criterion::Compression;
  return std::nullopt;
}

std::string render_criterion(Criterion c) {
  switch (c) {
    case Criterion::DdcPc: return "ddc-pc";
    case Criterion::DdcAvg: return "ddc-avg";
    default: return "compression";
  }
}

ScoredCandidate score_ddc_pc(const Library& lib, const ProgramModel& model,
                             const std::vector<TaskBeam>& beams, const Candidate& f,
                             const ContextPrior& prior) {
  ScoredCandidate out = scored_shell(f, Criterion::DdcPc);
  double num = 0.0, den = 0.0;
  for (const auto& tb : beams) {
    double q_f_log =
        function_logprob_as_part(lib, model, tb.task, f.closed.expr, f.arity, prior);
    double q_f = std::exp(q_f_log);
    double contrib = 0.0;
    for (const auto& entry : tb.entries) {
      int n = count_uses(entry.program, f);
      out.uses_total += n;
      if (q_f <= 0.0 || n == 0) continue;
      if (!check_solution(lib, entry.program, *tb.task)) continue;
      auto q_p = program_logprob(lib, model, tb.task, entry.program, tb.task->requested);
      bool clamp = false;
      double benefit = caching_benefit(q_f_log, q_p ? *q_p : kNegInf, n, &clamp);
      if (clamp) ++out.clamp_events;
      contrib += benefit * (q_p ? std::exp(*q_p) : 0.0);
    }
    num += q_f * contrib;
    den += q_f;
    out.per_task.emplace(tb.task->id, TaskDiag{q_f, contrib});
  }
  if (den <= 0.0) {
    out.never_generated = true;
    out.score = 0.0;
  } else {
    out.score = num / den;
  }
  return out;
}

ScoredCandidate score_ddc_avg(const Library& lib, const ProgramModel& model,
                              const std::vector<TaskBeam>& beams, const Candidate& f,
                              const ContextPrior& prior) {
  ScoredCandidate out = scored_shell(f, Criterion::DdcAvg);
  double sum = 0.0;
  for (const auto& tb : beams) {
    double q_f =
        std::exp(function_logprob_as_part(lib, model, tb.task, f.closed.expr, f.arity, prior));
    for (const auto& entry : tb.entries) out.uses_total += count_uses(entry.program, f);
    sum += q_f;
    out.per_task.emplace(tb.task->id, TaskDiag{q_f, 0.0});
  }
  out.score = beams.empty() ? 0.0 : sum / static_cast<double>(beams.size());
  return out;
}

ScoredCandidate score_compression(const Library& lib, const std::vector<TaskBeam>& beams,
                                  const Candidate& f) {
  ScoredCandidate out = scored_shell(f, Criterion::Compression);
  bool any_lambda = false;
  for (const auto& tb : beams)
    for (const auto& entry : tb.entries) any_lambda = any_lambda || contains_lambda(entry.program);
  double d = static_cast<double>(lib.prim_count()) + (any_lambda ? 1.0 : 0.0);
  double total = 0.0;
  for (const auto& tb : beams) {
    double contrib = 0.0;
    for (const auto& entry : tb.entries) {
      int n = count_uses(entry.program, f);
      out.uses_total += n;
      if (n == 0) continue;
      int sz = expr_size(entry.program);
      contrib += static_cast<double>(n) / (static_cast<double>(sz) * std::pow(d, sz));
    }
    total += contrib;
    out.per_task.emplace(tb.task->id, TaskDiag{0.0, contrib});
  }
  out.score = static_cast<double>(f.size) * total;
  return out;
}

ScoredCandidate score_candidate(Criterion c, const Library& lib, const ProgramModel& model,
                                const std::vector<TaskBeam>& beams, const Candidate& f,
                                const ContextPrior& prior) {
  switch (c) {
    case Criterion::DdcPc: return score_ddc_pc(lib, model, beams, f, prior);
    case Criterion::DdcAvg: return score_ddc_avg(lib, model, beams, f, prior);
    default: return score_compression(lib, beams, f);
  }
}

SelectionResult select_top_k(const Library& lib, std::vector<ScoredCandidate> scored, int k,
                             SelectMode mode, int cycle) {
  std::sort(scored.begin(), scored.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.candidate.size != b.candidate.size) return a.candidate.size > b.candidate.size;
    return render_expr(a.candidate.closed.expr) < render_expr(b.candidate.closed.expr);
  });
  SelectionResult out{lib, {}, scored};
  for (const auto& s : scored) {
    if (mode == SelectMode::TopK) {
      if (static_cast<int>(out.installed.size()) >= k) break;
    } else if (s.score < 0.5) {
      break;  // sorted descending, nothing below passes either
    }
    try {
      auto [next, name] = out.lib.install_chunk(s.candidate.closed.expr, cycle);
      out.lib = std::move(next);
      out.installed.push_back({name, s});
    } catch (const DuplicateChunkError&) {
      // equivalent already present; take the next candidate instead
    }
  }
  return out;
}

}  // namespace ddc
