#include "ddc/domains.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ddc/eval.hpp"
#include "ddc/expr.hpp"
#include "ddc/util.hpp"

namespace ddc {
namespace {

constexpr int kExamplesPerTask = 10;
constexpr int kMaxGroundTruthSize = 12;
constexpr int kSampleDepthCap = 6;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::int64_t need_int(const Value& v) {
  if (v.tag != Value::Tag::Int)
    throw EvalError(EvalError::Kind::DomainError, "expected an int");
  return v.i;
}

const std::vector<Value>& need_list(const Value& v) {
  if (v.tag != Value::Tag::List)
    throw EvalError(EvalError::Kind::DomainError, "expected a list");
  return *v.list;
}

// Intermediate values stay small in intended programs; anything past this
// bound is a runaway ground-truth sample, not a representable answer.
std::int64_t checked(std::int64_t v) {
  if (v > 1000000000ll || v < -1000000000ll)
    throw EvalError(EvalError::Kind::DomainError, "arithmetic overflow");
  return v;
}

void add_int_constants(Library& lib, const std::vector<std::int64_t>& cs) {
  for (std::int64_t c : cs) {
    lib.add_builtin("c" + std::to_string(c), "int",
                    [c](const std::vector<Value>&, EvalState&) { return Value::of_int(c); });
  }
}

void add_arith_ops(Library& lib) {
  lib.add_builtin("add", "int -> int -> int",
                  [](const std::vector<Value>& a, EvalState&) {
                    return Value::of_int(checked(need_int(a[0]) + need_int(a[1])));
                  });
  lib.add_builtin("mul", "int -> int -> int",
                  [](const std::vector<Value>& a, EvalState&) {
                    return Value::of_int(checked(need_int(a[0]) * need_int(a[1])));
                  });
}

Library make_list_lib() {
  Library lib;
  add_int_constants(lib, {0, 1});
  add_arith_ops(lib);
  lib.add_builtin("empty", "list(int)", [](const std::vector<Value>&, EvalState&) {
    return Value::of_list({});
  });
  lib.add_builtin("cons", "int -> list(int) -> list(int)",
                  [](const std::vector<Value>& a, EvalState&) {
                    std::vector<Value> items;
                    items.push_back(a[0]);
                    const auto& rest = need_list(a[1]);
                    items.insert(items.end(), rest.begin(), rest.end());
                    return Value::of_list(std::move(items));
                  });
  lib.add_builtin("head", "list(int) -> int", [](const std::vector<Value>& a, EvalState&) {
    const auto& xs = need_list(a[0]);
    if (xs.empty()) throw EvalError(EvalError::Kind::DomainError, "head of empty list");
    return xs.front();
  });
  lib.add_builtin("tail", "list(int) -> list(int)", [](const std::vector<Value>& a, EvalState&) {
    const auto& xs = need_list(a[0]);
    if (xs.empty()) throw EvalError(EvalError::Kind::DomainError, "tail of empty list");
    return Value::of_list(std::vector<Value>(xs.begin() + 1, xs.end()));
  });
  lib.add_builtin("is_empty", "list(int) -> bool", [](const std::vector<Value>& a, EvalState&) {
    return Value::of_bool(need_list(a[0]).empty());
  });
  {
    TypeRef t0 = Type::var(0);
    Polytype poly = Polytype::generalize(Type::arrow(t_bool(), Type::arrow(t0, Type::arrow(t0, t0))));
    lib.add_builtin("if", poly,
                    [](const std::vector<Value>& a, EvalState&) {
                      if (a[0].tag != Value::Tag::Bool)
                        throw EvalError(EvalError::Kind::DomainError, "branch condition not a bool");
                      return a[0].b ? a[1] : a[2];
                    },
                    /*lazy_branches=*/true);
  }
  lib.add_builtin("map", "(int -> int) -> list(int) -> list(int)",
                  [](const std::vector<Value>& a, EvalState& st) {
                    std::vector<Value> out;
                    for (const Value& x : need_list(a[1])) out.push_back(st.apply(a[0], x));
                    return Value::of_list(std::move(out));
                  });
  // fold g z [x0, x1, ...] threads the accumulator front to back:
  // g(x1, g(x0, z)).
  lib.add_builtin("fold", "(int -> int -> int) -> int -> list(int) -> int",
                  [](const std::vector<Value>& a, EvalState& st) {
                    Value acc = a[1];
                    for (const Value& x : need_list(a[2])) acc = st.apply(st.apply(a[0], x), acc);
                    return acc;
                  });
  lib.set_uniform_theta();
  return lib;
}

Library make_arith_lib() {
  Library lib;
  add_int_constants(lib, {1, 2, 3});
  add_arith_ops(lib);
  lib.set_uniform_theta();
  return lib;
}

// Install the hidden concept chunks and tilt the sampling weights toward
// them so generated tasks actually exercise the concepts.
Library install_hidden(const Library& base, const std::vector<std::string>& defs,
                       std::vector<std::string>& names) {
  Library out = base;
  for (const std::string& text : defs) {
    auto [next, name] = out.install_chunk(parse_expr(text));
    out = std::move(next);
    names.push_back(name);
  }
  for (const std::string& n : names) out.set_theta(n, std::log(4.0));
  return out;
}

int sign_code(long v) { return v < 0 ? 0 : (v == 0 ? 1 : 2); }

// Coarse behavioral signature over the examples of a list task. Total and
// pure: every case falls through to a fixed code.
int list_features(const Task& t) {
  TypeRef res = t.requested;
  while (res->is_arrow()) res = res->rhs;
  int is_list_out = type_equal(res, t_list(t_int())) ? 1 : 0;

  long dlen = 0;
  int rel = 3;
  int empt = 0;
  for (const Example& ex : t.examples) {
    if (ex.inputs.empty() || ex.inputs[0].tag != Value::Tag::List) continue;
    const auto& in = *ex.inputs[0].list;
    if (is_list_out && ex.output.tag == Value::Tag::List)
      dlen += sign_code(static_cast<long>(ex.output.list->size()) - static_cast<long>(in.size())) - 1;
    if (in.empty()) {
      bool blank = is_list_out ? (ex.output.tag == Value::Tag::List && ex.output.list->empty())
                               : (ex.output.tag == Value::Tag::Int && ex.output.i == 0);
      if (!blank) empt = 1;
      continue;
    }
    if (rel == 3 && in[0].tag == Value::Tag::Int) {
      const Value* out0 = nullptr;
      if (is_list_out && ex.output.tag == Value::Tag::List && !ex.output.list->empty())
        out0 = &(*ex.output.list)[0];
      else if (!is_list_out && ex.output.tag == Value::Tag::Int)
        out0 = &ex.output;
      if (out0 && out0->tag == Value::Tag::Int)
        rel = sign_code(out0->i - in[0].i);
    }
  }
  return is_list_out + 2 * sign_code(dlen) + 6 * rel + 24 * empt;
}

// Parity plus first/second finite differences of the outputs on the three
// smallest integer inputs.
int arith_features(const Task& t) {
  std::vector<std::pair<std::int64_t, std::int64_t>> pts;
  for (const Example& ex : t.examples) {
    if (ex.inputs.size() == 1 && ex.inputs[0].tag == Value::Tag::Int &&
        ex.output.tag == Value::Tag::Int)
      pts.push_back({ex.inputs[0].i, ex.output.i});
  }
  std::sort(pts.begin(), pts.end());
  if (pts.empty()) return 0;
  int parity = static_cast<int>(((pts[0].second % 2) + 2) % 2);
  int d1 = 1, d2 = 1;
  if (pts.size() >= 2) d1 = sign_code(pts[1].second - pts[0].second);
  if (pts.size() >= 3)
    d2 = sign_code((pts[2].second - pts[1].second) - (pts[1].second - pts[0].second));
  return parity + 2 * d1 + 6 * d2;
}

std::vector<TypeRef> request_args(const TypeRef& request) {
  std::vector<TypeRef> args;
  TypeRef t = request;
  while (t->is_arrow()) {
    args.push_back(t->lhs);
    t = t->rhs;
  }
  return args;
}

Value random_value(const TypeRef& t, std::mt19937_64& rng) {
  if (type_equal(t, t_int())) return Value::of_int(static_cast<std::int64_t>(rng() % 6));
  if (type_equal(t, t_list(t_int()))) {
    size_t len = rng() % 5;
    std::vector<Value> items;
    for (size_t i = 0; i < len; ++i)
      items.push_back(Value::of_int(static_cast<std::int64_t>(rng() % 6)));
    return Value::of_list(std::move(items));
  }
  throw std::invalid_argument("no input generator for type " + render_type(t));
}

// Single-int-argument tasks get a shuffled 0..9 so the examples pin the
// function at ten distinct points; everything else draws independently.
std::vector<std::vector<Value>> make_inputs(const std::vector<TypeRef>& args,
                                            std::mt19937_64& rng) {
  std::vector<std::vector<Value>> rows;
  if (args.size() == 1 && type_equal(args[0], t_int())) {
    std::vector<std::int64_t> xs(kExamplesPerTask);
    for (int i = 0; i < kExamplesPerTask; ++i) xs[i] = i;
    for (int i = kExamplesPerTask - 1; i > 0; --i)
      std::swap(xs[i], xs[rng() % (i + 1)]);
    for (std::int64_t x : xs) rows.push_back({Value::of_int(x)});
    return rows;
  }
  for (int i = 0; i < kExamplesPerTask; ++i) {
    std::vector<Value> row;
    for (const TypeRef& a : args) row.push_back(random_value(a, rng));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string behavior_signature(const TypeRef& request, const std::vector<Example>& exs) {
  std::ostringstream os;
  os << render_type(request);
  for (const Example& ex : exs) {
    os << "|";
    for (const Value& in : ex.inputs) os << render_value(in) << ",";
    os << "->" << render_value(ex.output);
  }
  return os.str();
}

}  // namespace

std::vector<std::vector<Value>> domain_inputs(const DomainSpec& spec, const TypeRef& request,
                                              std::mt19937_64& rng) {
  (void)spec;
  return make_inputs(request_args(request), rng);
}

DomainSpec make_domain(const std::string& name, std::uint64_t seed) {
  DomainSpec spec;
  spec.name = name;
  spec.seed = seed;
  if (name == "list") {
    spec.lib = make_list_lib();
    spec.gt_lib = install_hidden(spec.lib,
                                 {
                                     "(lambda (map (lambda (add $0 c1)) $0))",   // increment each
                                     "(lambda (fold (lambda (lambda (add $1 $0))) c0 $0))",  // sum
                                     "(lambda (map (lambda (add $0 $0)) $0))",   // double each
                                 },
                                 spec.hidden_chunks);
    spec.requests = {Type::arrow(t_list(t_int()), t_list(t_int())), Type::arrow(t_list(t_int()), t_int())};
    spec.features = list_features;
    return spec;
  }
  if (name == "arith") {
    spec.lib = make_arith_lib();
    spec.gt_lib = install_hidden(spec.lib,
                                 {
                                     "(lambda (mul $0 $0))",            // square
                                     "(lambda (add (mul $0 $0) $0))",   // x^2 + x
                                 },
                                 spec.hidden_chunks);
    spec.requests = {Type::arrow(t_int(), t_int())};
    spec.features = arith_features;
    return spec;
  }
  throw std::invalid_argument("unknown domain: " + name);
}

GeneratedTasks generate_tasks(const DomainSpec& spec, int n_train, int n_test,
                              std::uint64_t seed) {
  if (n_train < 0 || n_test < 0) throw std::invalid_argument("negative task count");
  const int total = n_train + n_test;
  GeneratedTasks out;
  if (total == 0) return out;

  std::mt19937_64 rng(mix_seed(seed, fnv1a(spec.name)));
  GenerativeModel gen(spec.gt_lib);
  std::set<std::string> seen;
  std::vector<std::pair<TypedProgram, std::vector<Example>>> accepted;

  const long max_attempts = 400l * total + 2000;
  long attempts = 0;
  while (static_cast<int>(accepted.size()) < total) {
    if (++attempts > max_attempts)
      throw std::runtime_error("task generation stalled for domain " + spec.name);
    const TypeRef& request = spec.requests[rng() % spec.requests.size()];
    auto prog = sample_program(spec.gt_lib, gen, request, rng, kSampleDepthCap);
    if (!prog || expr_size(prog->expr) > kMaxGroundTruthSize) {
      ++out.rejected;
      continue;
    }

    std::vector<TypeRef> args = request_args(request);
    std::vector<Example> exs;
    bool ok = true;
    for (auto& row : make_inputs(args, rng)) {
      try {
        Value v = run_program(spec.gt_lib, prog->expr, row);
        exs.push_back({std::move(row), std::move(v)});
      } catch (const EvalError&) {
        ok = false;
        break;
      }
    }
    if (!ok) {
      ++out.rejected;
      continue;
    }

    // A task whose outputs never vary carries no signal about its input.
    bool constant = true;
    for (const Example& ex : exs)
      if (!value_equal(ex.output, exs.front().output)) constant = false;
    if (constant || !seen.insert(behavior_signature(request, exs)).second) {
      ++out.rejected;
      continue;
    }
    accepted.push_back({{prog->expr, request}, std::move(exs)});
  }

  for (int i = 0; i < total; ++i) {
    bool train = i < n_train;
    Task t;
    t.domain = spec.name;
    t.id = spec.name + (train ? "_train_" : "_test_") + std::to_string(train ? i : i - n_train);
    t.requested = accepted[i].first.type;
    t.examples = std::move(accepted[i].second);
    t.split = train ? Task::Split::Train : Task::Split::Test;
    out.ground_truth.emplace(t.id, accepted[i].first);
    (train ? out.train : out.test).push_back(std::move(t));
  }
  return out;
}

}  // namespace ddc
