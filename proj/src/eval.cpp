#include "ddc/eval.hpp"

#include "ddc/util.hpp"

namespace ddc {

void EvalState::tick() {
  if (--steps_ < 0)
    throw EvalError(EvalError::Kind::StepLimit, "evaluation step budget exhausted");
}

Value EvalState::apply(const Value& fn, const Value& arg) {
  tick();
  switch (fn.tag) {
    case Value::Tag::Closure:
      return eval(fn.closure_body, env_push(fn.closure_env, arg));
    case Value::Tag::Partial: {
      std::vector<Value> args = *fn.partial_args;
      args.push_back(arg);
      if (static_cast<int>(args.size()) == fn.prim->arity())
        return fn.prim->builtin(args, *this);
      return Value::partial(fn.prim, std::move(args));
    }
    default:
      throw EvalError(EvalError::Kind::DomainError, "applied a non-function value");
  }
}

Value EvalState::eval(const ExprRef& e, const EnvRef& env) {
  tick();
  switch (e->tag) {
    case Expr::Tag::Index: {
      const Value* v = env_lookup(env, e->index);
      if (!v) throw EvalError(EvalError::Kind::DomainError, "unbound index");
      return *v;
    }
    case Expr::Tag::Lambda:
      return Value::closure(e->body, env);
    case Expr::Tag::Prim: {
      const Primitive& p = lib_.at(e->prim_name);
      if (p.origin == Primitive::Origin::Chunk) return eval(p.definition, nullptr);
      if (p.arity() == 0) return p.builtin({}, *this);
      return Value::partial(&p, {});
    }
    case Expr::Tag::Apply: {
      ExprRef head;
      std::vector<ExprRef> args;
      spine(e, head, args);
      // Branch-lazy builtins (if): evaluate the condition, then only the
      // selected branch. Strict evaluation would turn guarded partial
      // operations like (if (is_empty $0) c0 (head $0)) into errors.
      if (head->is(Expr::Tag::Prim)) {
        const Primitive& p = lib_.at(head->prim_name);
        if (p.lazy_branches && static_cast<int>(args.size()) == p.arity()) {
          Value cond = eval(args[0], env);
          if (cond.tag != Value::Tag::Bool)
            throw EvalError(EvalError::Kind::DomainError, "branch condition not a bool");
          return eval(cond.b ? args[1] : args[2], env);
        }
      }
      Value fn = eval(head, env);
      for (const auto& a : args) fn = apply(fn, eval(a, env));
      return fn;
    }
    case Expr::Tag::Hole:
      throw EvalError(EvalError::Kind::DomainError, "evaluated a hole");
  }
  throw EvalError(EvalError::Kind::DomainError, "malformed expression");
}

Value run_program(const Library& lib, const ExprRef& program,
                  const std::vector<Value>& inputs, long steps) {
  EvalState st(lib, steps);
  Value v = st.eval(program, nullptr);
  for (const auto& in : inputs) v = st.apply(v, in);
  return v;
}

}  // namespace ddc
