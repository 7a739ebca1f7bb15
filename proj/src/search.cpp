#include "ddc/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <unordered_map>

#include "ddc/eval.hpp"
#include "ddc/util.hpp"

namespace ddc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// An unfilled choice point in a partial program. Requests are always ground:
// arrows are consumed by eagerly inserted lambdas when the hole is created.
struct OpenHole {
  std::vector<EnvEntry> env;
  TypeRef request;
  std::string parent;
  int arg_index;
  double best;  // highest choice log-mass available here, frozen at creation
};

// A frontier node. The program text doubles as the structure: '?' marks the
// open holes in the same left-to-right order as `holes`, and a finished
// program is recovered by parsing the text, which avoids rebuilding an
// expression tree on every expansion.
struct PartialProgram {
  TypeContext ctx;
  std::vector<OpenHole> holes;
  double chosen_sum = 0.0;
  double bound = 0.0;
  std::string text;
};

struct WorsePartial {
  bool operator()(const PartialProgram& a, const PartialProgram& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.text > b.text;
  }
};

struct Enumerator {
  const Library& lib;
  const ProgramModel& model;
  const Task* task;
  std::unordered_map<std::string, double> best_cache;

  std::string site_signature(const OpenHole& h, const TypeContext& K) const {
    std::string sig = h.parent + '|' + std::to_string(h.arg_index) + '|' +
                      render_type(K.resolve(h.request));
    for (const EnvEntry& e : h.env) sig += '|' + render_type(K.resolve(e.type));
    return sig;
  }

  double best_mass(const OpenHole& h, const TypeContext& K) {
    std::string sig = site_signature(h, K);
    auto it = best_cache.find(sig);
    if (it != best_cache.end()) return it->second;
    auto opts =
        choice_options(lib, model, task, K, h.env, h.request, h.parent, h.arg_index);
    double best = kNegInf;
    for (const ChoiceOption& o : opts) best = std::max(best, o.log_mass);
    best_cache.emplace(std::move(sig), best);
    return best;
  }

  // Consume `request`'s arrows by lambda insertion; the hole's text is the
  // lambda wrapping around '?'.
  OpenHole make_hole(const TypeContext& K, std::vector<EnvEntry> env, TypeRef request,
                     const std::string& parent, int arg_index, std::string& text) {
    TypeRef req = K.resolve(request);
    int wrapped = 0;
    while (req->is_arrow()) {
      env.push_back({req->lhs, false});
      req = K.resolve(req->rhs);
      wrapped++;
    }
    text = "?";
    for (int i = 0; i < wrapped; ++i) text = "(lambda " + text + ")";
    OpenHole h{std::move(env), req, parent, arg_index, 0.0};
    h.best = best_mass(h, K);
    return h;
  }
};

std::string splice_first_hole(const std::string& text, const std::string& piece) {
  size_t at = text.find('?');
  std::string out;
  out.reserve(text.size() + piece.size());
  out.append(text, 0, at).append(piece).append(text, at + 1, std::string::npos);
  return out;
}

}  // namespace

long enumerate_programs(const Library& lib, const ProgramModel& model, const Task* task,
                        const TypeRef& requested, const SearchBudget& budget,
                        const EmitFn& emit) {
  Enumerator en{lib, model, task, {}};
  std::priority_queue<PartialProgram, std::vector<PartialProgram>, WorsePartial> frontier;

  TypeContext K0;
  {
    std::vector<int> ids;
    free_type_vars(requested, ids);
    int upto = 0;
    for (int id : ids) upto = std::max(upto, id + 1);
    K0.reserve_ids(upto);
  }
  {
    PartialProgram root;
    root.ctx = K0;
    root.holes.push_back(en.make_hole(K0, {}, requested, kRootParent, 0, root.text));
    root.bound = root.holes[0].best;
    if (root.bound > kNegInf) frontier.push(std::move(root));
  }

  long pops = 0;
  std::string piece;
  while (!frontier.empty() && pops < budget.expansions) {
    PartialProgram cur = std::move(const_cast<PartialProgram&>(frontier.top()));
    frontier.pop();
    pops++;
    if (cur.holes.empty()) {
      if (!emit(parse_expr(cur.text), cur.chosen_sum, pops)) break;
      continue;
    }
    double rest_best = 0.0;
    for (size_t i = 1; i < cur.holes.size(); ++i) rest_best += cur.holes[i].best;
    const OpenHole& hole = cur.holes.front();
    auto opts = choice_options(lib, model, task, cur.ctx, hole.env, hole.request,
                               hole.parent, hole.arg_index);
    for (ChoiceOption& o : opts) {
      PartialProgram child;
      child.ctx = std::move(o.ctx_after);
      std::string child_parent = o.is_var ? kVarParent : o.prim->name;
      piece = o.is_var ? "$" + std::to_string(o.var_index) : o.prim->name;
      if (!o.arg_types.empty()) piece = "(" + piece;
      child.holes.reserve(o.arg_types.size() + cur.holes.size() - 1);
      double arg_best = 0.0;
      std::string part;
      for (size_t j = 0; j < o.arg_types.size(); ++j) {
        child.holes.push_back(en.make_hole(child.ctx, hole.env, o.arg_types[j],
                                           child_parent, static_cast<int>(j), part));
        arg_best += child.holes.back().best;
        piece += ' ';
        piece += part;
      }
      if (arg_best == kNegInf) continue;  // some argument has empty support
      if (!o.arg_types.empty()) piece += ')';
      child.holes.insert(child.holes.end(), cur.holes.begin() + 1, cur.holes.end());
      child.chosen_sum = cur.chosen_sum + o.log_mass;
      child.bound = child.chosen_sum + arg_best + rest_best;
      child.text = splice_first_hole(cur.text, piece);
      frontier.push(std::move(child));
    }
  }
  return pops;
}

bool check_solution(const Library& lib, const ExprRef& program, const Task& task,
                    long eval_steps) {
  for (const Example& ex : task.examples) {
    try {
      Value got = run_program(lib, program, ex.inputs, eval_steps);
      if (!value_equal(got, ex.output)) return false;
    } catch (const EvalError&) {
      return false;
    }
  }
  return true;
}

WakeTaskResult wake_task(const Library& lib, const ProgramModel& model, const Task& task,
                         const SearchBudget& budget, int capacity) {
  WakeTaskResult out;
  EmitFn emit = [&](const ExprRef& program, double logprob, long pops) {
    if (!check_solution(lib, program, task)) return true;
    if (out.solutions.empty()) out.expansions_to_first = pops;
    out.solutions.push_back({program, logprob});
    return static_cast<int>(out.solutions.size()) < capacity;
  };
  out.expansions_used =
      enumerate_programs(lib, model, &task, task.requested, budget, emit);
  return out;
}

}  // namespace ddc
