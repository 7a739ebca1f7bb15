#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ddc/eval.hpp"
#include "ddc/library.hpp"
#include "ddc/util.hpp"
#include "helpers.hpp"

using namespace ddc;

TEST_CASE("type rendering and parsing round-trip") {
  for (const char* text : {"int", "bool", "list(int)", "int -> int",
                           "int -> int -> int", "(int -> int) -> list(int) -> list(int)",
                           "t0 -> t1 -> t0", "list(t0) -> int"}) {
    TypeRef t = parse_type(text);
    CHECK(render_type(t) == text);
    CHECK(type_equal(parse_type(render_type(t)), t));
  }
  CHECK_THROWS_AS(parse_type("int ->"), TypeError);
  CHECK_THROWS_AS(parse_type("list(int"), TypeError);
}

TEST_CASE("unification solves, fails, and occurs-checks") {
  // (t0 -> int) ~ (bool -> t1)  =>  t0 := bool, t1 := int
  auto sub = unify_types(parse_type("t0 -> int"), parse_type("bool -> t1"));
  REQUIRE(sub.has_value());
  CHECK(type_equal((*sub)[0], t_bool()));
  CHECK(type_equal((*sub)[1], t_int()));

  CHECK_FALSE(unify_types(t_int(), t_bool()).has_value());
  CHECK_FALSE(unify_types(parse_type("list(int)"), parse_type("list(bool)")).has_value());
  // occurs check: t0 ~ t0 -> int has no finite solution
  CHECK_FALSE(unify_types(Type::var(0), parse_type("t0 -> int")).has_value());
  // unifying a variable with itself binds nothing
  auto self = unify_types(Type::var(3), Type::var(3));
  REQUIRE(self.has_value());
  CHECK(self->empty());
}

TEST_CASE("unification is symmetric and idempotent on random types") {
  std::mt19937_64 rng(11);
  auto rand_type = [&](auto&& self, int depth) -> TypeRef {
    switch (rng() % (depth > 2 ? 3 : 5)) {
      case 0:
        return Type::var(static_cast<int>(rng() % 3));
      case 1:
        return t_int();
      case 2:
        return t_bool();
      case 3:
        return t_list(self(self, depth + 1));
      default:
        return Type::arrow(self(self, depth + 1), self(self, depth + 1));
    }
  };
  auto apply_sub = [](const std::unordered_map<int, TypeRef>& sub, const TypeRef& t) {
    TypeContext K;
    std::vector<int> vars;
    free_type_vars(t, vars);
    for (int v : vars) K.reserve_ids(v + 1);
    for (const auto& [id, ty] : sub) {
      K.reserve_ids(id + 1);
      REQUIRE(K.unify(Type::var(id), ty));
    }
    return K.resolve(t);
  };
  int solved = 0;
  for (int trial = 0; trial < 300; ++trial) {
    TypeRef a = rand_type(rand_type, 0), b = rand_type(rand_type, 0);
    auto ab = unify_types(a, b), ba = unify_types(b, a);
    CHECK(ab.has_value() == ba.has_value());
    if (ab) {
      ++solved;
      // the substitution actually unifies, and re-applying changes nothing
      TypeRef ra = apply_sub(*ab, a), rb = apply_sub(*ab, b);
      CHECK(type_equal(ra, rb));
      CHECK(type_equal(apply_sub(*ab, ra), ra));
    }
  }
  CHECK(solved > 20);  // the generator must exercise both outcomes
}

TEST_CASE("expression rendering, parsing, and size") {
  ExprRef e = parse_expr("(f (f n))");
  CHECK(render_expr(e) == "(f (f n))");
  CHECK(expr_size(e) == 3);

  ExprRef lam = parse_expr("(lambda (f (f $0)))");
  CHECK(render_expr(lam) == "(lambda (f (f $0)))");
  CHECK(expr_size(lam) == 3);  // Lambda and Apply nodes are free
  CHECK(expr_size(parse_expr("n")) == 1);

  CHECK(is_closed(lam));
  CHECK_FALSE(is_closed(parse_expr("(f $0)")));
  CHECK(free_index_bound(parse_expr("(lambda (add $0 $1))")) == 1);

  CHECK(expr_equal(parse_expr("(lambda $0)"), parse_expr("(lambda $0)")));
  CHECK_FALSE(expr_equal(parse_expr("(lambda $0)"), parse_expr("(lambda (f $0))")));
}

TEST_CASE("expression round-trip on random terms") {
  std::mt19937_64 rng(7);
  auto rand_expr = [&](auto&& self, int depth, int scope) -> ExprRef {
    int pick = static_cast<int>(rng() % (depth > 3 ? 2 : 4));
    switch (pick) {
      case 0:
        return Expr::prim(rng() % 2 ? "f" : "n");
      case 1:
        return scope > 0 ? Expr::ix(static_cast<int>(rng() % scope)) : Expr::prim("n");
      case 2:
        return Expr::apply(self(self, depth + 1, scope), self(self, depth + 1, scope));
      default:
        return Expr::lambda(self(self, depth + 1, scope + 1));
    }
  };
  for (int i = 0; i < 500; ++i) {
    ExprRef e = rand_expr(rand_expr, 0, 0);
    CHECK(expr_equal(parse_expr(render_expr(e)), e));
  }
}

TEST_CASE("shift and substitute behave like the textbook operations") {
  // (lambda (add $0 $1)) has one free index; shifting bumps only free ones
  ExprRef e = parse_expr("(lambda (add $0 $1))");
  CHECK(render_expr(shift(e, 2)) == "(lambda (add $0 $3))");
  // the cutoff rises under binders: only indexes free at the cutoff move
  CHECK(render_expr(shift(parse_expr("(add $0 $1)"), 1, 1)) == "(add $0 $2)");
  CHECK(render_expr(shift(e, 1, 1)) == "(lambda (add $0 $1))");

  // ((lambda body) v) == substitute(body, 0, v)
  ExprRef body = parse_expr("(add $0 (add $0 $1))");
  ExprRef v = parse_expr("(f n)");
  CHECK(render_expr(substitute(body, 0, v)) == "(add (f n) (add (f n) $0))");
}

TEST_CASE("beta normalization reaches normal forms") {
  CHECK(render_expr(beta_normalize(parse_expr("((lambda $0) n)"))) == "n");
  CHECK(render_expr(beta_normalize(parse_expr("((lambda (lambda $1)) a b)"))) == "a");
  CHECK(render_expr(beta_normalize(parse_expr("((lambda (f (f $0))) n)"))) == "(f (f n))");
  // capture-avoidance: the bound variable of the inner lambda is untouched
  CHECK(render_expr(beta_normalize(parse_expr("((lambda (lambda (g $1 $0))) x)"))) ==
        "(lambda (g x $0))");
  ExprRef nf = parse_expr("(lambda (f $0))");
  CHECK(beta_normalize(nf).get() == nf.get());  // already normal: untouched
}

TEST_CASE("evaluate: increment twice from zero gives two") {
  Library lib = testing::make_inc_lib();
  Value out = run_program(lib, parse_expr("(f (f n))"), {});
  CHECK(out.tag == Value::Tag::Int);
  CHECK(out.i == 2);

  // programs taking inputs: (lambda (f $0)) applied to 41
  Value out2 = run_program(lib, parse_expr("(lambda (f $0))"), {Value::of_int(41)});
  CHECK(out2.i == 42);
}

TEST_CASE("evaluate: step budget and domain errors signal failure") {
  Library lib = testing::make_inc_lib();
  // deep enough to exhaust a 5-step budget
  CHECK_THROWS_AS(run_program(lib, parse_expr("(f (f (f (f n))))"), {}, 5), EvalError);
  try {
    run_program(lib, parse_expr("(f (f (f (f n))))"), {}, 5);
  } catch (const EvalError& e) {
    CHECK(e.kind == EvalError::Kind::StepLimit);
  }

  Library lst;
  lst.add_builtin("head", "list(int) -> int",
                  [](const std::vector<Value>& a, EvalState&) {
                    if (a[0].list->empty())
                      throw EvalError(EvalError::Kind::DomainError, "head of empty list");
                    return a[0].list->front();
                  });
  lst.add_builtin("empty", "list(int)", [](const std::vector<Value>&, EvalState&) {
    return Value::of_list({});
  });
  try {
    run_program(lst, parse_expr("(head empty)"), {});
    CHECK(false);
  } catch (const EvalError& e) {
    CHECK(e.kind == EvalError::Kind::DomainError);
  }
}

TEST_CASE("infer_type: principal types") {
  Library lib = testing::make_inc_lib();
  CHECK(render_type(infer_type(lib, parse_expr("(f (f n))"))) == "int");
  CHECK(render_type(canonical_type(infer_type(lib, parse_expr("(lambda $0)")))) ==
        "t0 -> t0");
  CHECK(render_type(infer_type(lib, parse_expr("(lambda (f $0))"))) == "int -> int");

  // ill-typed: f expects an int, gets a function
  try {
    infer_type(lib, parse_expr("(f (lambda $0))"));
    CHECK(false);
  } catch (const TypeError& e) {
    CHECK(e.where == "(f (lambda $0))");  // names the offending subterm
  }
  CHECK_THROWS_AS(infer_type(lib, parse_expr("(n n)")), TypeError);
  CHECK_THROWS_AS(infer_type(lib, parse_expr("unknown_prim")), TypeError);
}

TEST_CASE("infer_type assigns consistent types to open fragments") {
  Library lib = testing::make_inc_lib();
  // $0 escapes; both occurrences must get the same variable
  TypeRef t = infer_type(lib, parse_expr("(f $0)"));
  CHECK(render_type(t) == "int");
}

TEST_CASE("eta_long rebuilds partial applications and bare variables") {
  Library lib;
  lib.add_builtin("add", "int -> int -> int", [](const std::vector<Value>& a, EvalState&) {
    return Value::of_int(testing::need_int(a[0]).i + testing::need_int(a[1]).i);
  });
  lib.add_builtin("c1", "int",
                  [](const std::vector<Value>&, EvalState&) { return Value::of_int(1); });
  lib.add_builtin("twice", "(int -> int) -> int -> int",
                  [](const std::vector<Value>& a, EvalState& st) {
                    return st.apply(a[0], st.apply(a[0], a[1]));
                  });

  // partial application in a function slot gets a wrapper lambda
  ExprRef e = parse_expr("(twice (add c1) c1)");
  ExprRef el = eta_long(lib, e, t_int());
  CHECK(render_expr(el) == "(twice (lambda (add c1 $0)) c1)");
  CHECK(run_program(lib, el, {}).i == run_program(lib, e, {}).i);

  // a variable standing in a function slot gets one too
  ExprRef g = parse_expr("(lambda (twice $0 c1))");
  ExprRef gl = eta_long(lib, g, parse_type("(int -> int) -> int"));
  CHECK(render_expr(gl) == "(lambda (twice (lambda ($1 $0)) c1))");

  // already eta-long input is reproduced
  ExprRef full = parse_expr("(twice (lambda (add c1 $0)) c1)");
  CHECK(expr_equal(eta_long(lib, full, t_int()), full));
}
