#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddc/expr.hpp"
#include "ddc/type.hpp"
#include "ddc/value.hpp"

namespace ddc {

class EvalState;
using BuiltinFn = std::function<Value(const std::vector<Value>&, EvalState&)>;

struct TypedProgram {
  ExprRef expr;
  TypeRef type;
};

// A library entry: either a builtin with native semantics, or a chunk whose
// meaning is its definition expression.
struct Primitive {
  enum class Origin { Builtin, Chunk };

  std::string name;
  Polytype poly;
  Origin origin = Origin::Builtin;
  BuiltinFn builtin;   // Origin::Builtin only
  ExprRef definition;  // Origin::Chunk only; always closed
  // Builtin whose non-first arguments must not be evaluated eagerly (if).
  bool lazy_branches = false;
  int installed_cycle = -1;

  int arity() const { return poly.arity(); }
};

// An immutable component library with per-primitive production weights.
// All mutating operations return a new Library, so snapshots taken by
// concurrent readers stay valid.
class Library {
 public:
  Library() = default;

  void add_builtin(std::string name, const std::string& type, BuiltinFn fn,
                   bool lazy_branches = false);
  void add_builtin(std::string name, Polytype poly, BuiltinFn fn,
                   bool lazy_branches = false);

  const Primitive* find(const std::string& name) const;
  const Primitive& at(const std::string& name) const;  // throws on miss
  const std::vector<Primitive>& prims() const { return prims_; }
  size_t prim_count() const { return prims_.size(); }

  // Log production weight of a primitive / of choosing a bound variable.
  double theta(const std::string& name) const;
  double variable_weight() const { return variable_weight_; }
  const std::map<std::string, double>& theta_map() const { return theta_; }

  // Reset weights to the uniform distribution over primitives + variable.
  void set_uniform_theta();
  void set_theta(const std::string& name, double log_w);
  void set_variable_weight(double log_w) { variable_weight_ = log_w; }

  // Add a chunk under a fresh generated name. `f` must be closed and
  // well-typed; its polytype is the generalization of the principal type.
  // The new theta weight is the mean of the existing weights. Throws
  // DuplicateChunkError when f is alpha-equivalent after inlining to an
  // existing chunk, TypeError / invalid_argument on bad input.
  std::pair<Library, std::string> install_chunk(const ExprRef& f,
                                                int cycle = -1) const;

  // Replace every chunk primitive by its definition, recursively, and
  // beta-reduce to normal form.
  ExprRef inline_expr(const ExprRef& e) const;

  // Laplace-smoothed usage frequencies (pseudo-count 1 per primitive and for
  // the variable pseudo-component) over the given programs. Empty input
  // yields the uniform weights.
  Library fit_theta(const std::vector<ExprRef>& programs) const;

  std::string to_json_text() const;
  // `builtins` supplies native semantics for Origin::Builtin entries by name.
  static Library from_json_text(const std::string& text, const Library& builtins);

 private:
  ExprRef expand_chunks(const ExprRef& e) const;

  std::vector<Primitive> prims_;
  std::map<std::string, size_t> byname_;
  std::map<std::string, double> theta_;  // log weights, keyed by name
  double variable_weight_ = 0.0;
  int next_chunk_ = 0;
};

// Principal type of a closed-or-open expression under `lib` (open indexes get
// fresh variable types). Throws TypeError naming the offending subterm.
TypeRef infer_type(const Library& lib, const ExprRef& e);
TypedProgram typed(const Library& lib, const ExprRef& e);

// Rebuild `e` in eta-long form at `requested`: every arrow-typed position is
// a Lambda and every component is fully applied. Behavior-preserving; needed
// after refactoring, which can leave variables in arrow-typed argument slots.
ExprRef eta_long(const Library& lib, const ExprRef& e, const TypeRef& requested);

}  // namespace ddc
