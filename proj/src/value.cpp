#include "ddc/value.hpp"

#include <sstream>

namespace ddc {

Value Value::of_int(std::int64_t v) {
  Value x;
  x.tag = Tag::Int;
  x.i = v;
  return x;
}

Value Value::of_bool(bool v) {
  Value x;
  x.tag = Tag::Bool;
  x.b = v;
  return x;
}

Value Value::of_list(std::vector<Value> items) {
  Value x;
  x.tag = Tag::List;
  x.list = std::make_shared<const std::vector<Value>>(std::move(items));
  return x;
}

Value Value::closure(ExprRef body, EnvRef env) {
  Value x;
  x.tag = Tag::Closure;
  x.closure_body = std::move(body);
  x.closure_env = std::move(env);
  return x;
}

Value Value::partial(const Primitive* p, std::vector<Value> args) {
  Value x;
  x.tag = Tag::Partial;
  x.prim = p;
  x.partial_args = std::make_shared<const std::vector<Value>>(std::move(args));
  return x;
}

bool Value::is_ground() const {
  switch (tag) {
    case Tag::Int:
    case Tag::Bool:
      return true;
    case Tag::List:
      for (const auto& v : *list)
        if (!v.is_ground()) return false;
      return true;
    default:
      return false;
  }
}

EnvRef env_push(EnvRef env, Value v) {
  auto node = std::make_shared<EnvNode>();
  node->value = std::move(v);
  node->next = std::move(env);
  return node;
}

const Value* env_lookup(const EnvRef& env, int index) {
  const EnvNode* cur = env.get();
  while (cur && index > 0) {
    cur = cur->next.get();
    --index;
  }
  return cur ? &cur->value : nullptr;
}

bool value_equal(const Value& a, const Value& b) {
  if (a.tag != b.tag) return false;
  switch (a.tag) {
    case Value::Tag::Int:
      return a.i == b.i;
    case Value::Tag::Bool:
      return a.b == b.b;
    case Value::Tag::List: {
      if (a.list->size() != b.list->size()) return false;
      for (size_t i = 0; i < a.list->size(); ++i)
        if (!value_equal((*a.list)[i], (*b.list)[i])) return false;
      return true;
    }
    default:
      return false;
  }
}

std::string render_value(const Value& v) {
  switch (v.tag) {
    case Value::Tag::Int:
      return std::to_string(v.i);
    case Value::Tag::Bool:
      return v.b ? "true" : "false";
    case Value::Tag::List: {
      std::ostringstream out;
      out << '[';
      for (size_t i = 0; i < v.list->size(); ++i) {
        if (i) out << ", ";
        out << render_value((*v.list)[i]);
      }
      out << ']';
      return out.str();
    }
    case Value::Tag::Closure:
      return "<closure>";
    case Value::Tag::Partial:
      return "<partial>";
  }
  return "?";
}

}  // namespace ddc
