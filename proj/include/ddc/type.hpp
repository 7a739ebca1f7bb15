#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace ddc {

class Type;
using TypeRef = std::shared_ptr<const Type>;

// A monotype: a variable, a constructor applied to arguments (base types are
// zero-argument constructors), or a function arrow.
class Type {
 public:
  enum class Tag { Var, Con, Arrow };

  Tag tag;
  int id = -1;                // Var
  std::string name;           // Con
  std::vector<TypeRef> args;  // Con
  TypeRef lhs, rhs;           // Arrow

  static TypeRef var(int id);
  static TypeRef con(std::string name, std::vector<TypeRef> args = {});
  static TypeRef arrow(TypeRef lhs, TypeRef rhs);

  bool is_arrow() const { return tag == Tag::Arrow; }
  bool is_var() const { return tag == Tag::Var; }
};

TypeRef t_int();
TypeRef t_bool();
TypeRef t_list(TypeRef elem);

bool type_equal(const TypeRef& a, const TypeRef& b);

// Arrows render right-associated: "int -> int -> int". Parameterized
// constructors render as "list(int)". Variables render as "t0", "t1", ...
std::string render_type(const TypeRef& t);
TypeRef parse_type(const std::string& text);  // throws TypeError on bad input

// Collect variable ids in first-occurrence order (depth-first, left to right).
void free_type_vars(const TypeRef& t, std::vector<int>& out);

// A type with some of its variables universally quantified.
struct Polytype {
  TypeRef body;
  std::vector<int> quantified;

  static Polytype mono(TypeRef t) { return Polytype{std::move(t), {}}; }
  // Quantify every variable of t.
  static Polytype generalize(const TypeRef& t);
  int arity() const;  // number of arrows consumable from body
  std::string render() const;
};

// A mutable unification state: variable bindings plus a fresh-id counter.
// Bindings are chased on resolve, so the substitution is effectively
// idempotent.
class TypeContext {
 public:
  TypeRef fresh();
  // Deep-apply the current bindings.
  TypeRef resolve(const TypeRef& t) const;
  // Unify in place; on failure the context may hold partial bindings, so
  // callers that need to back out should clone first.
  bool unify(const TypeRef& a, const TypeRef& b);
  TypeRef instantiate(const Polytype& p);

  int next_id() const { return next_; }
  void reserve_ids(int upto);  // ensure fresh() never collides with ids < upto

 private:
  bool occurs(int id, const TypeRef& t) const;
  TypeRef shallow(const TypeRef& t) const;  // chase Var bindings one level

  std::unordered_map<int, TypeRef> bind_;
  int next_ = 0;
};

// Standalone most-general unifier of two types. Returns the substitution as
// id -> type, or nullopt when the types do not unify (e.g. occurs-check).
std::optional<std::unordered_map<int, TypeRef>> unify_types(const TypeRef& a,
                                                            const TypeRef& b);

// Rename the free variables of a resolved type to 0,1,... in first-occurrence
// order. Two types canonicalize to equal terms iff they are alpha-equivalent.
TypeRef canonical_type(const TypeRef& t);

// Split "a -> b -> r" into args {a,b} and result r, chasing bindings in K.
void strip_arrows(const TypeContext& K, const TypeRef& t,
                  std::vector<TypeRef>& args, TypeRef& result);

}  // namespace ddc
