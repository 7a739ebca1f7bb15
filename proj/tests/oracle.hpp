#pragma once

// Brute-force reference implementations used only by tests. Everything here
// assumes a monomorphic library and trades speed for transparent
// correctness: direct recursion and closed-form arithmetic, sharing no code
// with the enumerator or the scoring paths it is checking.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ddc/expr.hpp"
#include "ddc/library.hpp"
#include "ddc/type.hpp"

namespace ddc::testing::oracle {

inline void split_arrows(const TypeRef& t, std::vector<TypeRef>& args, TypeRef& result) {
  result = t;
  while (result->is_arrow()) {
    args.push_back(result->lhs);
    result = result->rhs;
  }
}

struct Enumerated {
  ExprRef expr;
  double logprob;
};

// All eta-long programs of tree height <= max_depth at `request`, each choice
// uniform over the type-valid components (primitives plus bound variables);
// lambdas are forced by arrow requests and cost nothing.
inline std::vector<Enumerated> gen(const Library& lib, const TypeRef& request,
                                   const std::vector<TypeRef>& env, int max_depth) {
  std::vector<Enumerated> out;
  if (request->is_arrow()) {
    std::vector<TypeRef> inner = env;
    inner.push_back(request->lhs);
    for (const auto& body : gen(lib, request->rhs, inner, max_depth))
      out.push_back({Expr::lambda(body.expr), body.logprob});
    return out;
  }
  if (max_depth <= 0) return out;
  struct Option {
    ExprRef head;
    std::vector<TypeRef> args;
  };
  std::vector<Option> support;
  for (const auto& p : lib.prims()) {
    std::vector<TypeRef> args;
    TypeRef result;
    split_arrows(p.poly.body, args, result);
    if (render_type(result) == render_type(request)) support.push_back({Expr::prim(p.name), args});
  }
  for (int i = 0; i < static_cast<int>(env.size()); ++i) {
    std::vector<TypeRef> args;
    TypeRef result;
    split_arrows(env[env.size() - 1 - i], args, result);
    if (render_type(result) == render_type(request)) support.push_back({Expr::ix(i), args});
  }
  if (support.empty()) return out;
  double choice = -std::log(static_cast<double>(support.size()));
  for (const auto& opt : support) {
    std::vector<Enumerated> partial{{opt.head, choice}};
    for (const auto& arg_type : opt.args) {
      std::vector<Enumerated> next;
      for (const auto& sofar : partial)
        for (const auto& fill : gen(lib, arg_type, env, max_depth - 1))
          next.push_back({Expr::apply(sofar.expr, fill.expr), sofar.logprob + fill.logprob});
      partial = std::move(next);
    }
    for (auto& done : partial) out.push_back(std::move(done));
  }
  return out;
}

// Sorted the way a correct best-first enumerator must emit: probability
// descending, rendering ascending.
inline std::vector<Enumerated> programs(const Library& lib, const TypeRef& request,
                                        int max_depth) {
  auto out = gen(lib, request, {}, max_depth);
  std::sort(out.begin(), out.end(), [](const Enumerated& a, const Enumerated& b) {
    if (a.logprob != b.logprob) return a.logprob > b.logprob;
    return render_expr(a.expr) < render_expr(b.expr);
  });
  return out;
}

// Greedy top-down leftmost matcher for first-order fragments (no lambdas in
// pattern or subject; slot j is Index(arity - 1 - j)). Bindings compare by
// rendering.
inline bool fo_match(const ExprRef& pat, const ExprRef& subject, int arity,
                     std::vector<ExprRef>& bound) {
  if (pat->is(Expr::Tag::Index)) {
    int slot = arity - 1 - pat->index;
    if (bound[slot]) return render_expr(bound[slot]) == render_expr(subject);
    bound[slot] = subject;
    return true;
  }
  if (pat->tag != subject->tag) return false;
  if (pat->is(Expr::Tag::Prim)) return pat->prim_name == subject->prim_name;
  if (pat->is(Expr::Tag::Apply))
    return fo_match(pat->fn, subject->fn, arity, bound) &&
           fo_match(pat->arg, subject->arg, arity, bound);
  return false;
}

inline int fo_count(const ExprRef& subject, const ExprRef& fragment, int arity) {
  std::vector<ExprRef> bound(arity);
  if (fo_match(fragment, subject, arity, bound)) {
    int n = 1;
    for (const auto& b : bound)
      if (b) n += fo_count(b, fragment, arity);
    return n;
  }
  if (subject->is(Expr::Tag::Apply))
    return fo_count(subject->fn, fragment, arity) + fo_count(subject->arg, fragment, arity);
  return 0;
}

// Direct summation of the two chunk scores for first-order beams under a
// uniform recognition model over N components: q(rho) = N^-size(rho), the
// candidate generates as part with probability N^-size(f), and the caching
// benefit reduces to n*size(f)/size(rho).
struct UniformScores {
  double pc = 0.0;
  double compression = 0.0;
};

inline UniformScores score_uniform(size_t n_components,
                                   const std::vector<std::vector<ExprRef>>& beams_by_task,
                                   const ExprRef& fragment, int arity, int size_f) {
  double n_comp = static_cast<double>(n_components);
  double num = 0.0, den = 0.0, comp = 0.0;
  double q_f = std::pow(n_comp, -static_cast<double>(size_f));
  for (const auto& beam : beams_by_task) {
    double contrib = 0.0;
    for (const auto& rho : beam) {
      int n = fo_count(rho, fragment, arity);
      if (n == 0) continue;
      double sz = static_cast<double>(expr_size(rho));
      double benefit = std::min(1.0, static_cast<double>(n) * size_f / sz);
      contrib += benefit * std::pow(n_comp, -sz);
      comp += static_cast<double>(n) / (sz * std::pow(n_comp, sz));
    }
    num += q_f * contrib;
    den += q_f;
  }
  UniformScores out;
  out.pc = den > 0.0 ? num / den : 0.0;
  out.compression = static_cast<double>(size_f) * comp;
  return out;
}

}  // namespace ddc::testing::oracle
