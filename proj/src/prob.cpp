#include "ddc/prob.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "ddc/util.hpp"

namespace ddc {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double log_sum_exp(const std::vector<double>& xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

std::string render_context(const BigramContext& c) {
  return c.parent + "|" + std::to_string(c.arg_index) + "|" + render_type(c.requested);
}

double RecognitionModel::prim_logweight(const Task* task, const std::string& parent,
                                        int arg_index, const std::string& name) const {
  auto site = prim_scores_.find({bucket(task), parent, arg_index});
  if (site == prim_scores_.end()) return 0.0;
  auto it = site->second.find(name);
  return it == site->second.end() ? 0.0 : it->second;
}

double RecognitionModel::var_logweight(const Task* task, const std::string& parent,
                                       int arg_index) const {
  auto it = var_scores_.find({bucket(task), parent, arg_index});
  return it == var_scores_.end() ? 0.0 : it->second;
}

void RecognitionModel::set_prim_score(int bucket, const std::string& parent,
                                      int arg_index, const std::string& name,
                                      double score) {
  prim_scores_[{bucket, parent, arg_index}][name] = score;
}

void RecognitionModel::set_var_score(int bucket, const std::string& parent,
                                     int arg_index, double score) {
  var_scores_[{bucket, parent, arg_index}] = score;
}

std::vector<RecognitionModel::Row> RecognitionModel::rows() const {
  std::vector<Row> out;
  for (const auto& [site, comps] : prim_scores_)
    for (const auto& [name, score] : comps)
      out.push_back({std::get<0>(site), std::get<1>(site), std::get<2>(site), name, score});
  for (const auto& [site, score] : var_scores_)
    out.push_back({std::get<0>(site), std::get<1>(site), std::get<2>(site), kVarParent, score});
  std::sort(out.begin(), out.end(), [](const Row& a, const Row& b) {
    return std::tie(a.bucket, a.parent, a.arg_index, a.component) <
           std::tie(b.bucket, b.parent, b.arg_index, b.component);
  });
  return out;
}

namespace {

// Shape a candidate's type for a choice point: strip all arrows statically,
// then, when the program applies more arguments than the static arity and the
// residual is still a variable, grow fresh arrows to match. Growth never
// affects support membership or weights, only the argument requests.
void strip_for_choice(TypeContext& ctx, const TypeRef& t, int min_args,
                      std::vector<TypeRef>& args, TypeRef& result) {
  strip_arrows(ctx, t, args, result);
  while (static_cast<int>(args.size()) < min_args && ctx.resolve(result)->is_var()) {
    TypeRef a = ctx.fresh(), r = ctx.fresh();
    if (!ctx.unify(result, Type::arrow(a, r))) break;
    args.push_back(a);
    result = r;
  }
}

std::vector<ChoiceOption> options_at(const Library& lib, const ProgramModel& model,
                                     const Task* task, const TypeContext& K,
                                     const std::vector<EnvEntry>& env,
                                     const TypeRef& request, const std::string& parent,
                                     int arg_index, int min_args) {
  std::vector<ChoiceOption> out;
  if (K.resolve(request)->is_arrow()) return out;
  for (const Primitive& p : lib.prims()) {
    TypeContext ctx = K;
    TypeRef inst = ctx.instantiate(p.poly);
    ChoiceOption o;
    TypeRef result;
    strip_for_choice(ctx, inst, min_args, o.arg_types, result);
    if (!ctx.unify(result, request)) continue;
    o.prim = &p;
    o.ctx_after = std::move(ctx);
    o.log_weight = model.prim_logweight(task, parent, arg_index, p.name);
    out.push_back(std::move(o));
  }
  for (size_t i = 0; i < env.size(); ++i) {  // i is the de Bruijn index
    const EnvEntry& ent = env[env.size() - 1 - i];
    if (ent.wrapper) continue;
    TypeContext ctx = K;
    ChoiceOption o;
    TypeRef result;
    strip_for_choice(ctx, ent.type, min_args, o.arg_types, result);
    if (!ctx.unify(result, request)) continue;
    o.is_var = true;
    o.var_index = static_cast<int>(i);
    o.ctx_after = std::move(ctx);
    o.log_weight = model.var_logweight(task, parent, arg_index);
    out.push_back(std::move(o));
  }
  if (out.empty()) return out;
  std::vector<double> ws;
  ws.reserve(out.size());
  for (const ChoiceOption& o : out) ws.push_back(o.log_weight);
  double z = log_sum_exp(ws);
  for (ChoiceOption& o : out) o.log_mass = o.log_weight - z;
  return out;
}

// Scores a term against the generative grammar: arrows take a deterministic
// lambda, ground requests take one choice from the type-valid support, chosen
// components recurse into fully applied arguments. Wrapper-binder occurrences
// are transparent (no choice, no unification).
struct Walker {
  const Library& lib;
  const ProgramModel& model;
  const Task* task;
  const ChoiceHook* hook;
  TypeContext K;

  std::optional<double> go(const ExprRef& e, const TypeRef& request,
                           std::vector<EnvEntry>& env, const std::string& parent,
                           int arg_index) {
    if (e->is(Expr::Tag::Index)) {
      if (e->index < 0 || e->index >= static_cast<int>(env.size())) return std::nullopt;
      if (env[env.size() - 1 - e->index].wrapper) return 0.0;
    }
    TypeRef req = K.resolve(request);
    if (req->is_arrow()) {
      if (!e->is(Expr::Tag::Lambda)) return std::nullopt;
      env.push_back({req->lhs, false});
      auto body = go(e->body, req->rhs, env, parent, arg_index);
      env.pop_back();
      return body;
    }
    ExprRef head;
    std::vector<ExprRef> args;
    spine(e, head, args);
    if (head->is(Expr::Tag::Index)) {
      if (head->index < 0 || head->index >= static_cast<int>(env.size()))
        return std::nullopt;
      // An applied wrapper variable has no generative reading.
      if (env[env.size() - 1 - head->index].wrapper) return std::nullopt;
    } else if (!head->is(Expr::Tag::Prim)) {
      return std::nullopt;  // beta-redex or hole
    }
    auto opts = options_at(lib, model, task, K, env, req, parent, arg_index,
                           static_cast<int>(args.size()));
    size_t chosen = opts.size();
    for (size_t i = 0; i < opts.size(); ++i) {
      if (head->is(Expr::Tag::Prim)
              ? (!opts[i].is_var && opts[i].prim->name == head->prim_name)
              : (opts[i].is_var && opts[i].var_index == head->index)) {
        chosen = i;
        break;
      }
    }
    if (chosen == opts.size()) return std::nullopt;
    if (opts[chosen].arg_types.size() != args.size()) return std::nullopt;
    if (hook && *hook) {
      BigramContext ctx{parent, arg_index, canonical_type(req)};
      (*hook)(ctx, opts, chosen);
    }
    double total = opts[chosen].log_mass;
    std::vector<TypeRef> arg_types = opts[chosen].arg_types;
    std::string child = opts[chosen].is_var ? kVarParent : head->prim_name;
    K = std::move(opts[chosen].ctx_after);
    for (size_t j = 0; j < args.size(); ++j) {
      auto sub = go(args[j], arg_types[j], env, child, static_cast<int>(j));
      if (!sub) return std::nullopt;
      total += *sub;
    }
    return total;
  }
};

int max_var_id(const TypeRef& t) {
  std::vector<int> ids;
  free_type_vars(t, ids);
  int upto = 0;
  for (int id : ids) upto = std::max(upto, id + 1);
  return upto;
}

}  // namespace

std::vector<ChoiceOption> choice_options(const Library& lib, const ProgramModel& model,
                                         const Task* task, const TypeContext& K,
                                         const std::vector<EnvEntry>& env,
                                         const TypeRef& request,
                                         const std::string& parent, int arg_index) {
  return options_at(lib, model, task, K, env, request, parent, arg_index, 0);
}

std::optional<double> program_logprob(const Library& lib, const ProgramModel& model,
                                      const Task* task, const ExprRef& e,
                                      const TypeRef& requested, const ChoiceHook& hook) {
  if (contains_hole(e)) return std::nullopt;
  TypeContext K;
  K.reserve_ids(max_var_id(requested));
  Walker w{lib, model, task, hook ? &hook : nullptr, std::move(K)};
  std::vector<EnvEntry> env;
  return w.go(e, requested, env, kRootParent, 0);
}

ContextPrior estimate_context_prior(
    const Library& lib, const std::vector<std::pair<ExprRef, TypeRef>>& programs) {
  std::map<std::string, ContextPrior::Entry> counts;
  double total = 0.0;
  RecognitionModel uniform;  // weights are irrelevant to which sites occur
  for (const auto& [e, requested] : programs) {
    ChoiceHook tally = [&](const BigramContext& ctx, const std::vector<ChoiceOption>&,
                           size_t) {
      auto [it, fresh] = counts.try_emplace(render_context(ctx),
                                            ContextPrior::Entry{ctx, 0.0});
      (void)fresh;
      it->second.prob += 1.0;
      total += 1.0;
    };
    program_logprob(lib, uniform, nullptr, e, requested, tally);
  }
  if (total == 0.0) return uniform_fallback_prior(lib);
  ContextPrior prior;
  prior.provenance = ContextPrior::Provenance::Pooled;
  for (auto& [key, entry] : counts) {
    entry.prob /= total;
    prior.entries.push_back(std::move(entry));
  }
  return prior;
}

ContextPrior uniform_fallback_prior(const Library& lib) {
  ContextPrior prior;
  for (const Primitive& p : lib.prims()) {
    TypeContext K;
    TypeRef inst = K.instantiate(p.poly);
    std::vector<TypeRef> args;
    TypeRef result;
    strip_arrows(K, inst, args, result);
    for (size_t j = 0; j < args.size(); ++j) {
      // The choice point sits under the argument's own arrows.
      std::vector<TypeRef> inner;
      TypeRef point;
      strip_arrows(K, args[j], inner, point);
      prior.entries.push_back(
          {BigramContext{p.name, static_cast<int>(j), canonical_type(point)}, 0.0});
    }
  }
  if (prior.entries.empty()) return prior;
  std::sort(prior.entries.begin(), prior.entries.end(),
            [](const ContextPrior::Entry& a, const ContextPrior::Entry& b) {
              return render_context(a.ctx) < render_context(b.ctx);
            });
  for (auto& e : prior.entries) e.prob = 1.0 / static_cast<double>(prior.entries.size());
  return prior;
}

double function_logprob_as_part(const Library& lib, const ProgramModel& model,
                                const Task* task, const ExprRef& closed, int arity,
                                const ContextPrior& prior) {
  double total = 0.0;
  for (const ContextPrior::Entry& entry : prior.entries) {
    TypeContext K;
    TypeRef req = K.instantiate(Polytype::generalize(entry.ctx.requested));
    std::vector<EnvEntry> env;
    ExprRef cur = closed;
    for (int i = 0; i < arity; ++i) {
      if (!cur->is(Expr::Tag::Lambda)) return kNegInf;
      env.push_back({K.fresh(), true});
      cur = cur->body;
    }
    // Genuine leading lambdas sit at what was an arrow-typed position; the
    // prior's site types already have those arrows stripped, so consume them
    // here with unconstrained binder types.
    while (cur->is(Expr::Tag::Lambda)) {
      env.push_back({K.fresh(), false});
      cur = cur->body;
    }
    ExprRef head;
    std::vector<ExprRef> args;
    spine(cur, head, args);
    if (head->is(Expr::Tag::Index) && head->index >= 0 &&
        head->index < static_cast<int>(env.size()) &&
        env[env.size() - 1 - head->index].wrapper)
      return kNegInf;  // fragment without a component of its own at the root
    Walker w{lib, model, task, nullptr, std::move(K)};
    auto lp = w.go(cur, req, env, entry.ctx.parent, entry.ctx.arg_index);
    if (lp) total += entry.prob * std::exp(*lp);
  }
  return total > 0.0 ? std::log(total) : kNegInf;
}

namespace {

// One observed choice point, with its support flattened to parameter ids.
struct FitEvent {
  double weight = 0.0;
  std::vector<int> prim_params;
  int var_param = -1;  // parameter shared by all in-scope variables
  int n_vars = 0;
  int chosen_param = -1;
  bool chose_var = false;
};

struct FitProblem {
  std::vector<FitEvent> events;
  std::vector<std::tuple<int, std::string, int, std::string>> param_keys;
  std::map<std::tuple<int, std::string, int, std::string>, int> param_ids;

  int param(int bucket, const std::string& parent, int arg, const std::string& comp) {
    auto key = std::make_tuple(bucket, parent, arg, comp);
    auto it = param_ids.find(key);
    if (it != param_ids.end()) return it->second;
    int id = static_cast<int>(param_keys.size());
    param_keys.push_back(key);
    param_ids.emplace(std::move(key), id);
    return id;
  }

  double objective(const std::vector<double>& x, std::vector<double>* grad,
                   double l2) const {
    if (grad) std::fill(grad->begin(), grad->end(), 0.0);
    double obj = 0.0;
    std::vector<double> ws;
    for (const FitEvent& ev : events) {
      ws.clear();
      for (int p : ev.prim_params) ws.push_back(x[p]);
      if (ev.n_vars > 0)
        ws.push_back(x[ev.var_param] + std::log(static_cast<double>(ev.n_vars)));
      double z = log_sum_exp(ws);
      obj += ev.weight * (x[ev.chosen_param] - z);
      if (grad) {
        (*grad)[ev.chosen_param] += ev.weight;
        for (int p : ev.prim_params) (*grad)[p] -= ev.weight * std::exp(x[p] - z);
        if (ev.n_vars > 0)
          (*grad)[ev.var_param] -=
              ev.weight * ev.n_vars * std::exp(x[ev.var_param] - z);
      }
    }
    for (size_t i = 0; i < x.size(); ++i) {
      obj -= l2 * x[i] * x[i];
      if (grad) (*grad)[i] -= 2.0 * l2 * x[i];
    }
    return obj;
  }
};

void collect_events(const Library& lib, FitProblem& prob,
                    const std::vector<std::pair<ExprRef, const Task*>>& pairs,
                    double side_weight, const FeatureFn& features) {
  if (pairs.empty()) return;
  double w = side_weight / static_cast<double>(pairs.size());
  RecognitionModel probe(features);
  for (const auto& [e, task] : pairs) {
    if (!task) continue;
    int bucket = probe.bucket(task);
    std::vector<FitEvent> pending;
    ChoiceHook record = [&](const BigramContext& ctx,
                            const std::vector<ChoiceOption>& support, size_t chosen) {
      FitEvent ev;
      ev.weight = w;
      for (const ChoiceOption& o : support) {
        if (o.is_var) {
          ev.n_vars++;
          if (ev.var_param < 0)
            ev.var_param = prob.param(bucket, ctx.parent, ctx.arg_index, kVarParent);
        } else {
          ev.prim_params.push_back(
              prob.param(bucket, ctx.parent, ctx.arg_index, o.prim->name));
        }
      }
      ev.chose_var = support[chosen].is_var;
      ev.chosen_param = ev.chose_var
                            ? ev.var_param
                            : prob.param(bucket, ctx.parent, ctx.arg_index,
                                         support[chosen].prim->name);
      pending.push_back(std::move(ev));
    };
    if (program_logprob(lib, probe, task, e, task->requested, record))
      for (FitEvent& ev : pending) prob.events.push_back(std::move(ev));
  }
}

}  // namespace

RecognitionModel fit_recognition(const Library& lib,
                                 const std::vector<std::pair<ExprRef, const Task*>>& replays,
                                 const std::vector<std::pair<ExprRef, const Task*>>& fantasies,
                                 FeatureFn features, const FitOptions& opts) {
  FitProblem prob;
  double wr = replays.empty() ? 0.0 : (fantasies.empty() ? 1.0 : 0.5);
  double wf = fantasies.empty() ? 0.0 : (replays.empty() ? 1.0 : 0.5);
  collect_events(lib, prob, replays, wr, features);
  collect_events(lib, prob, fantasies, wf, features);

  std::vector<double> x(prob.param_keys.size(), 0.0);
  std::vector<double> grad(x.size(), 0.0);
  if (!prob.events.empty() && !x.empty()) {
    double obj = prob.objective(x, nullptr, opts.l2);
    double step = 1.0;
    std::vector<double> trial(x.size());
    for (int iter = 0; iter < opts.max_iters; ++iter) {
      prob.objective(x, &grad, opts.l2);
      double s = step * 2.0;
      bool improved = false;
      for (int back = 0; back < 40; ++back, s *= 0.5) {
        for (size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + s * grad[i];
        double cand = prob.objective(trial, nullptr, opts.l2);
        if (cand > obj) {
          bool done = cand - obj < opts.tol;
          x.swap(trial);
          obj = cand;
          step = s;
          improved = !done;
          break;
        }
      }
      if (!improved) break;
    }
  }

  RecognitionModel model(std::move(features));
  for (size_t i = 0; i < x.size(); ++i) {
    const auto& [bucket, parent, arg, comp] = prob.param_keys[i];
    if (comp == kVarParent)
      model.set_var_score(bucket, parent, arg, x[i]);
    else
      model.set_prim_score(bucket, parent, arg, comp, x[i]);
  }
  return model;
}

namespace {

struct Sampler {
  const Library& lib;
  const GenerativeModel& gen;
  std::mt19937_64& rng;
  int depth_cap;
  TypeContext K;

  std::optional<ExprRef> go(const TypeRef& request, std::vector<EnvEntry>& env,
                            int depth, const std::string& parent, int arg_index) {
    TypeRef req = K.resolve(request);
    if (req->is_arrow()) {
      env.push_back({req->lhs, false});
      auto body = go(req->rhs, env, depth, parent, arg_index);
      env.pop_back();
      if (!body) return std::nullopt;
      return Expr::lambda(*body);
    }
    if (depth > depth_cap) return std::nullopt;
    auto opts = options_at(lib, gen, nullptr, K, env, req, parent, arg_index, 0);
    if (opts.empty()) return std::nullopt;
    double u = uniform01(rng);
    size_t pick = opts.size() - 1;
    double cum = 0.0;
    for (size_t i = 0; i < opts.size(); ++i) {
      cum += std::exp(opts[i].log_mass);
      if (u < cum) {
        pick = i;
        break;
      }
    }
    ChoiceOption& o = opts[pick];
    K = std::move(o.ctx_after);
    ExprRef head = o.is_var ? Expr::ix(o.var_index) : Expr::prim(o.prim->name);
    std::string child = o.is_var ? kVarParent : o.prim->name;
    std::vector<ExprRef> built;
    for (size_t j = 0; j < o.arg_types.size(); ++j) {
      auto sub = go(o.arg_types[j], env, depth + 1, child, static_cast<int>(j));
      if (!sub) return std::nullopt;
      built.push_back(*sub);
    }
    return app(head, built);
  }
};

}  // namespace

std::optional<TypedProgram> sample_program(const Library& lib, const GenerativeModel& gen,
                                           const TypeRef& requested, std::mt19937_64& rng,
                                           int depth_cap) {
  TypeContext K;
  K.reserve_ids(max_var_id(requested));
  Sampler s{lib, gen, rng, depth_cap, std::move(K)};
  std::vector<EnvEntry> env;
  auto e = s.go(requested, env, 1, kRootParent, 0);
  if (!e) return std::nullopt;
  return TypedProgram{*e, canonical_type(s.K.resolve(requested))};
}

}  // namespace ddc
