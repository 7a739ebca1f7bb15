#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ddc/expr.hpp"

namespace ddc {

struct Primitive;

// Environment for closures: a persistent cons list, innermost binding first.
struct EnvNode;
using EnvRef = std::shared_ptr<const EnvNode>;

// Runtime value. Ground data (Int, Bool, List) is what tasks compare on;
// Closure and Partial exist only during evaluation.
class Value {
 public:
  enum class Tag { Int, Bool, List, Closure, Partial };

  Tag tag = Tag::Int;
  std::int64_t i = 0;
  bool b = false;
  std::shared_ptr<const std::vector<Value>> list;

  ExprRef closure_body;  // Closure
  EnvRef closure_env;

  const Primitive* prim = nullptr;  // Partial: builtin awaiting more arguments
  std::shared_ptr<const std::vector<Value>> partial_args;

  static Value of_int(std::int64_t v);
  static Value of_bool(bool v);
  static Value of_list(std::vector<Value> items);
  static Value closure(ExprRef body, EnvRef env);
  static Value partial(const Primitive* p, std::vector<Value> args);

  bool is_ground() const;  // Int, Bool, or List of ground values
};

struct EnvNode {
  Value value;
  EnvRef next;
};

EnvRef env_push(EnvRef env, Value v);
const Value* env_lookup(const EnvRef& env, int index);

// Equality on ground values; Closure/Partial never compare equal.
bool value_equal(const Value& a, const Value& b);

// "5", "true", "[1, 2, 3]". Only ground values render.
std::string render_value(const Value& v);

}  // namespace ddc
