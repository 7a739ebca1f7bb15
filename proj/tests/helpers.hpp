#pragma once

// Shared fixtures for the unit tests: tiny hand-built libraries with known
// closed-form probabilities.

#include "ddc/eval.hpp"
#include "ddc/library.hpp"
#include "ddc/util.hpp"

namespace ddc::testing {

inline Value need_int(const Value& v) {
  if (v.tag != Value::Tag::Int)
    throw EvalError(EvalError::Kind::DomainError, "expected an int");
  return v;
}

// Two primitives over one ground type: f : int -> int is increment, n : int
// is the constant 0. Program probabilities under the uniform model are
// 1/2^size, which many frozen expectations below rely on.
inline Library make_inc_lib() {
  Library lib;
  lib.add_builtin("f", "int -> int", [](const std::vector<Value>& a, EvalState&) {
    return Value::of_int(need_int(a[0]).i + 1);
  });
  lib.add_builtin("n", "int",
                  [](const std::vector<Value>&, EvalState&) { return Value::of_int(0); });
  return lib;
}

// Constants 0/1/2 plus increment; gives tasks with several distinct solutions.
inline Library make_const_lib() {
  Library lib;
  lib.add_builtin("inc", "int -> int", [](const std::vector<Value>& a, EvalState&) {
    return Value::of_int(need_int(a[0]).i + 1);
  });
  lib.add_builtin("zero", "int",
                  [](const std::vector<Value>&, EvalState&) { return Value::of_int(0); });
  lib.add_builtin("one", "int",
                  [](const std::vector<Value>&, EvalState&) { return Value::of_int(1); });
  lib.add_builtin("two", "int",
                  [](const std::vector<Value>&, EvalState&) { return Value::of_int(2); });
  return lib;
}

}  // namespace ddc::testing
