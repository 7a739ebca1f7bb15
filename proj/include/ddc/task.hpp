#pragma once

#include <string>
#include <vector>

#include "ddc/type.hpp"
#include "ddc/value.hpp"

namespace ddc {

// One observed input/output pair. `inputs` has one entry per arrow of the
// task's requested type (zero-input tasks are allowed).
struct Example {
  std::vector<Value> inputs;
  Value output;
};

struct Task {
  enum class Split { Train, Test };

  std::string id;
  std::string domain;
  TypeRef requested;
  std::vector<Example> examples;
  Split split = Split::Train;
};

// One JSON document per line; parse(render(t)) == t exactly. Values are
// decoded against the requested type, which disambiguates e.g. bool vs int.
std::string render_task(const Task& t);
Task parse_task(const std::string& line);
std::string render_tasks(const std::vector<Task>& ts);
std::vector<Task> parse_tasks(const std::string& text);

bool task_equal(const Task& a, const Task& b);

}  // namespace ddc
