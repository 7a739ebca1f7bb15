#include "ddc/task.hpp"

#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ddc {

using json = nlohmann::json;

namespace {

json value_to_json(const Value& v) {
  switch (v.tag) {
    case Value::Tag::Int:
      return v.i;
    case Value::Tag::Bool:
      return v.b;
    case Value::Tag::List: {
      json arr = json::array();
      for (const auto& item : *v.list) arr.push_back(value_to_json(item));
      return arr;
    }
    default:
      throw std::runtime_error("only ground values serialize");
  }
}

Value value_from_json(const json& j, const TypeRef& type) {
  if (type->tag == Type::Tag::Con) {
    if (type->name == "int" && j.is_number_integer())
      return Value::of_int(j.get<std::int64_t>());
    if (type->name == "bool" && j.is_boolean()) return Value::of_bool(j.get<bool>());
    if (type->name == "list" && j.is_array()) {
      std::vector<Value> items;
      items.reserve(j.size());
      for (const auto& item : j) items.push_back(value_from_json(item, type->args[0]));
      return Value::of_list(std::move(items));
    }
  }
  throw std::runtime_error("value " + j.dump() + " does not match type " +
                           render_type(type));
}

}  // namespace

std::string render_task(const Task& t) {
  json doc;
  doc["id"] = t.id;
  doc["domain"] = t.domain;
  doc["type"] = render_type(t.requested);
  doc["split"] = t.split == Task::Split::Train ? "train" : "test";
  json exs = json::array();
  for (const auto& ex : t.examples) {
    json e;
    json ins = json::array();
    for (const auto& in : ex.inputs) ins.push_back(value_to_json(in));
    e["in"] = std::move(ins);
    e["out"] = value_to_json(ex.output);
    exs.push_back(std::move(e));
  }
  doc["examples"] = std::move(exs);
  return doc.dump();
}

Task parse_task(const std::string& line) {
  json doc = json::parse(line);
  Task t;
  t.id = doc.at("id").get<std::string>();
  t.domain = doc.at("domain").get<std::string>();
  t.requested = parse_type(doc.at("type").get<std::string>());
  std::string split = doc.at("split").get<std::string>();
  if (split != "train" && split != "test")
    throw std::runtime_error("bad split tag " + split);
  t.split = split == "train" ? Task::Split::Train : Task::Split::Test;

  std::vector<TypeRef> arg_types;
  TypeRef out_type = t.requested;
  while (out_type->is_arrow()) {
    arg_types.push_back(out_type->lhs);
    out_type = out_type->rhs;
  }
  for (const auto& e : doc.at("examples")) {
    Example ex;
    const auto& ins = e.at("in");
    if (ins.size() != arg_types.size())
      throw std::runtime_error("example arity does not match task type");
    for (size_t i = 0; i < arg_types.size(); ++i)
      ex.inputs.push_back(value_from_json(ins[i], arg_types[i]));
    ex.output = value_from_json(e.at("out"), out_type);
    t.examples.push_back(std::move(ex));
  }
  return t;
}

std::string render_tasks(const std::vector<Task>& ts) {
  std::ostringstream out;
  for (const auto& t : ts) out << render_task(t) << '\n';
  return out.str();
}

std::vector<Task> parse_tasks(const std::string& text) {
  std::vector<Task> ts;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ts.push_back(parse_task(line));
  }
  return ts;
}

bool task_equal(const Task& a, const Task& b) {
  if (a.id != b.id || a.domain != b.domain || a.split != b.split) return false;
  if (!type_equal(a.requested, b.requested)) return false;
  if (a.examples.size() != b.examples.size()) return false;
  for (size_t i = 0; i < a.examples.size(); ++i) {
    const auto& x = a.examples[i];
    const auto& y = b.examples[i];
    if (x.inputs.size() != y.inputs.size()) return false;
    for (size_t j = 0; j < x.inputs.size(); ++j)
      if (!value_equal(x.inputs[j], y.inputs[j])) return false;
    if (!value_equal(x.output, y.output)) return false;
  }
  return true;
}

}  // namespace ddc
