#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace ddc {

class Expr;
using ExprRef = std::shared_ptr<const Expr>;

// A lambda-calculus term over named primitives, with de Bruijn indexes.
// Alpha-equivalence is therefore plain structural equality. Hole is internal
// to the enumerator's partial programs and never appears in a finished
// program; fragments mark their open slots with out-of-range indexes instead.
class Expr {
 public:
  enum class Tag { Prim, Index, Apply, Lambda, Hole };

  Tag tag;
  std::string prim_name;  // Prim
  int index = -1;         // Index (de Bruijn, innermost binder = 0)
  ExprRef fn, arg;        // Apply
  ExprRef body;           // Lambda
  int hole_id = -1;       // Hole

  static ExprRef prim(std::string name);
  static ExprRef ix(int index);
  static ExprRef apply(ExprRef fn, ExprRef arg);
  static ExprRef lambda(ExprRef body);
  static ExprRef hole(int id);

  bool is(Tag t) const { return tag == t; }
};

// Left-folded application: app(f, {a, b}) = ((f a) b).
ExprRef app(ExprRef fn, const std::vector<ExprRef>& args);

// Split an application chain into its head and argument list.
void spine(const ExprRef& e, ExprRef& head, std::vector<ExprRef>& args);

bool expr_equal(const ExprRef& a, const ExprRef& b);

// Number of Prim and Index occurrences. Lambda and Apply nodes are free:
// size (f (f n)) = 3.
int expr_size(const ExprRef& e);

// Canonical S-expression rendering: "(f (f n))", "(lambda (add $0 c1))".
std::string render_expr(const ExprRef& e);
ExprRef parse_expr(const std::string& text);  // throws std::runtime_error

// Standard de Bruijn shift: add delta to every index >= cutoff.
ExprRef shift(const ExprRef& e, int delta, int cutoff = 0);

// Substitute `value` for index `target` (capture-avoiding; `value` is shifted
// under binders).
ExprRef substitute(const ExprRef& e, int target, const ExprRef& value);

// Normal-order beta reduction to normal form. `fuel` bounds reduction steps;
// returns nullptr if exhausted (cannot happen for well-typed terms here, but
// guards against pathological inputs).
ExprRef beta_normalize(const ExprRef& e, int fuel = 100000);

// Smallest n such that every free index is < n; 0 for closed terms.
int free_index_bound(const ExprRef& e);
inline bool is_closed(const ExprRef& e) { return free_index_bound(e) == 0; }

bool contains_prim(const ExprRef& e, const std::string& name);
bool contains_hole(const ExprRef& e);

// Pre-order visit of every subterm.
void visit(const ExprRef& e, const std::function<void(const ExprRef&)>& f);

}  // namespace ddc
