#include <map>
#include <stdexcept>

#include "ddc/library.hpp"
#include "ddc/util.hpp"

namespace ddc {

namespace {

struct Inferer {
  const Library& lib;
  TypeContext K;
  // Types for indexes that escape the expression root, keyed by how far
  // above the root they point. Lets fragments with open slots be typed.
  std::map<int, TypeRef> free_levels;

  TypeRef go(const ExprRef& e, std::vector<TypeRef>& env) {
    switch (e->tag) {
      case Expr::Tag::Prim: {
        const Primitive* p = lib.find(e->prim_name);
        if (!p) throw TypeError("unknown primitive", render_expr(e));
        return K.instantiate(p->poly);
      }
      case Expr::Tag::Index: {
        int i = e->index;
        if (i < static_cast<int>(env.size())) return env[env.size() - 1 - i];
        int level = i - static_cast<int>(env.size());
        auto it = free_levels.find(level);
        if (it == free_levels.end()) it = free_levels.emplace(level, K.fresh()).first;
        return it->second;
      }
      case Expr::Tag::Apply: {
        TypeRef tf = go(e->fn, env);
        TypeRef ta = go(e->arg, env);
        TypeRef r = K.fresh();
        if (!K.unify(tf, Type::arrow(ta, r)))
          throw TypeError("cannot apply " + render_type(K.resolve(tf)) + " to " +
                              render_type(K.resolve(ta)),
                          render_expr(e));
        return r;
      }
      case Expr::Tag::Lambda: {
        TypeRef a = K.fresh();
        env.push_back(a);
        TypeRef b = go(e->body, env);
        env.pop_back();
        return Type::arrow(a, b);
      }
      case Expr::Tag::Hole:
        throw TypeError("cannot type a hole", render_expr(e));
    }
    throw TypeError("malformed expression", render_expr(e));
  }
};

}  // namespace

TypeRef infer_type(const Library& lib, const ExprRef& e) {
  Inferer inf{lib, {}, {}};
  std::vector<TypeRef> env;
  TypeRef t = inf.go(e, env);
  return inf.K.resolve(t);
}

TypedProgram typed(const Library& lib, const ExprRef& e) {
  return TypedProgram{e, canonical_type(infer_type(lib, e))};
}

namespace {

struct EtaLong {
  const Library& lib;
  TypeContext K;

  ExprRef go(const ExprRef& e, const TypeRef& request_in, std::vector<TypeRef>& env) {
    TypeRef request = K.resolve(request_in);
    if (request->is_arrow()) {
      env.push_back(request->lhs);
      ExprRef body = e->is(Expr::Tag::Lambda)
                         ? go(e->body, request->rhs, env)
                         : go(Expr::apply(shift(e, 1), Expr::ix(0)), request->rhs, env);
      env.pop_back();
      return Expr::lambda(body);
    }

    ExprRef head;
    std::vector<ExprRef> args;
    spine(e, head, args);

    TypeRef head_type;
    if (head->is(Expr::Tag::Prim)) {
      const Primitive* p = lib.find(head->prim_name);
      if (!p) throw TypeError("unknown primitive", render_expr(head));
      head_type = K.instantiate(p->poly);
    } else if (head->is(Expr::Tag::Index)) {
      if (head->index >= static_cast<int>(env.size()))
        throw TypeError("unbound index", render_expr(head));
      head_type = env[env.size() - 1 - head->index];
    } else {
      throw TypeError("expected a primitive or variable at the head",
                      render_expr(e));
    }

    std::vector<TypeRef> arg_types;
    TypeRef result;
    strip_arrows(K, head_type, arg_types, result);
    // A var-typed result can hide more arrows than the spine shows.
    while (arg_types.size() < args.size()) {
      TypeRef a = K.fresh(), r = K.fresh();
      if (!K.unify(result, Type::arrow(a, r)))
        throw TypeError("over-applied head", render_expr(e));
      arg_types.push_back(a);
      result = r;
    }
    if (args.size() < arg_types.size())
      throw TypeError("partial application at a ground position", render_expr(e));
    if (!K.unify(result, request))
      throw TypeError("result type mismatch", render_expr(e));

    std::vector<ExprRef> rebuilt;
    rebuilt.reserve(args.size());
    for (size_t j = 0; j < args.size(); ++j)
      rebuilt.push_back(go(args[j], arg_types[j], env));
    return app(head, rebuilt);
  }
};

}  // namespace

ExprRef eta_long(const Library& lib, const ExprRef& e, const TypeRef& requested) {
  EtaLong el{lib, {}};
  std::vector<int> vars;
  free_type_vars(requested, vars);
  for (int v : vars) el.K.reserve_ids(v + 1);
  std::vector<TypeRef> env;
  return el.go(e, requested, env);
}

}  // namespace ddc
