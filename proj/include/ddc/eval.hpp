#pragma once

#include <vector>

#include "ddc/library.hpp"
#include "ddc/value.hpp"

namespace ddc {

// Call-by-value interpreter state. One instance per top-level evaluation;
// the step budget is shared across nested applications.
class EvalState {
 public:
  EvalState(const Library& lib, long steps) : lib_(lib), steps_(steps) {}

  Value eval(const ExprRef& e, const EnvRef& env);
  Value apply(const Value& fn, const Value& arg);
  long steps_left() const { return steps_; }

 private:
  void tick();

  const Library& lib_;
  long steps_;
};

inline constexpr long kDefaultEvalSteps = 10000;

// Evaluate `program` applied to `inputs`. Throws EvalError on domain errors
// (head of empty list, arithmetic overflow, ...) or when the step budget is
// exhausted.
Value run_program(const Library& lib, const ExprRef& program,
                  const std::vector<Value>& inputs, long steps = kDefaultEvalSteps);

}  // namespace ddc
