#include "ddc/type.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

#include "ddc/util.hpp"

namespace ddc {

TypeRef Type::var(int id) {
  auto t = std::make_shared<Type>();
  t->tag = Tag::Var;
  t->id = id;
  return t;
}

TypeRef Type::con(std::string name, std::vector<TypeRef> args) {
  auto t = std::make_shared<Type>();
  t->tag = Tag::Con;
  t->name = std::move(name);
  t->args = std::move(args);
  return t;
}

TypeRef Type::arrow(TypeRef lhs, TypeRef rhs) {
  auto t = std::make_shared<Type>();
  t->tag = Tag::Arrow;
  t->lhs = std::move(lhs);
  t->rhs = std::move(rhs);
  return t;
}

TypeRef t_int() {
  static const TypeRef t = Type::con("int");
  return t;
}

TypeRef t_bool() {
  static const TypeRef t = Type::con("bool");
  return t;
}

TypeRef t_list(TypeRef elem) { return Type::con("list", {std::move(elem)}); }

bool type_equal(const TypeRef& a, const TypeRef& b) {
  if (a.get() == b.get()) return true;
  if (a->tag != b->tag) return false;
  switch (a->tag) {
    case Type::Tag::Var:
      return a->id == b->id;
    case Type::Tag::Con: {
      if (a->name != b->name || a->args.size() != b->args.size()) return false;
      for (size_t i = 0; i < a->args.size(); ++i)
        if (!type_equal(a->args[i], b->args[i])) return false;
      return true;
    }
    case Type::Tag::Arrow:
      return type_equal(a->lhs, b->lhs) && type_equal(a->rhs, b->rhs);
  }
  return false;
}

namespace {

void render_rec(const TypeRef& t, std::ostringstream& out, bool parenthesize_arrow) {
  switch (t->tag) {
    case Type::Tag::Var:
      out << 't' << t->id;
      break;
    case Type::Tag::Con:
      out << t->name;
      if (!t->args.empty()) {
        out << '(';
        for (size_t i = 0; i < t->args.size(); ++i) {
          if (i) out << ", ";
          render_rec(t->args[i], out, false);
        }
        out << ')';
      }
      break;
    case Type::Tag::Arrow:
      if (parenthesize_arrow) out << '(';
      render_rec(t->lhs, out, true);  // left side of -> binds tighter
      out << " -> ";
      render_rec(t->rhs, out, false);
      if (parenthesize_arrow) out << ')';
      break;
  }
}

struct TypeParser {
  const std::string& s;
  size_t pos = 0;

  explicit TypeParser(const std::string& text) : s(text) {}

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  bool peek_arrow() {
    skip_ws();
    return pos + 1 < s.size() && s[pos] == '-' && s[pos + 1] == '>';
  }

  std::string ident() {
    skip_ws();
    size_t start = pos;
    while (pos < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
      ++pos;
    if (start == pos) throw TypeError("expected type name", s.substr(pos, 8));
    return s.substr(start, pos - start);
  }

  TypeRef atom() {
    skip_ws();
    if (eat('(')) {
      TypeRef inner = arrow_chain();
      if (!eat(')')) throw TypeError("expected ')' in type", s);
      return inner;
    }
    std::string name = ident();
    if (name.size() > 1 && name[0] == 't' &&
        std::all_of(name.begin() + 1, name.end(),
                    [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      return Type::var(std::stoi(name.substr(1)));
    }
    std::vector<TypeRef> args;
    if (eat('(')) {
      for (;;) {
        args.push_back(arrow_chain());
        if (eat(')')) break;
        if (!eat(',')) throw TypeError("expected ',' or ')' in type", s);
      }
    }
    return Type::con(std::move(name), std::move(args));
  }

  TypeRef arrow_chain() {
    TypeRef head = atom();
    if (peek_arrow()) {
      pos += 2;
      return Type::arrow(std::move(head), arrow_chain());
    }
    return head;
  }
};

}  // namespace

std::string render_type(const TypeRef& t) {
  std::ostringstream out;
  render_rec(t, out, false);
  return out.str();
}

TypeRef parse_type(const std::string& text) {
  TypeParser p(text);
  TypeRef t = p.arrow_chain();
  p.skip_ws();
  if (p.pos != text.size()) throw TypeError("trailing input in type", text.substr(p.pos));
  return t;
}

void free_type_vars(const TypeRef& t, std::vector<int>& out) {
  switch (t->tag) {
    case Type::Tag::Var:
      if (std::find(out.begin(), out.end(), t->id) == out.end()) out.push_back(t->id);
      break;
    case Type::Tag::Con:
      for (const auto& a : t->args) free_type_vars(a, out);
      break;
    case Type::Tag::Arrow:
      free_type_vars(t->lhs, out);
      free_type_vars(t->rhs, out);
      break;
  }
}

Polytype Polytype::generalize(const TypeRef& t) {
  Polytype p;
  p.body = t;
  free_type_vars(t, p.quantified);
  return p;
}

int Polytype::arity() const {
  int n = 0;
  for (TypeRef t = body; t->is_arrow(); t = t->rhs) ++n;
  return n;
}

std::string Polytype::render() const { return render_type(body); }

TypeRef TypeContext::fresh() { return Type::var(next_++); }

TypeRef TypeContext::shallow(const TypeRef& t) const {
  TypeRef cur = t;
  while (cur->is_var()) {
    auto it = bind_.find(cur->id);
    if (it == bind_.end()) break;
    cur = it->second;
  }
  return cur;
}

TypeRef TypeContext::resolve(const TypeRef& t) const {
  TypeRef cur = shallow(t);
  switch (cur->tag) {
    case Type::Tag::Var:
      return cur;
    case Type::Tag::Con: {
      if (cur->args.empty()) return cur;
      std::vector<TypeRef> args;
      args.reserve(cur->args.size());
      bool changed = false;
      for (const auto& a : cur->args) {
        args.push_back(resolve(a));
        changed |= args.back().get() != a.get();
      }
      return changed ? Type::con(cur->name, std::move(args)) : cur;
    }
    case Type::Tag::Arrow: {
      TypeRef l = resolve(cur->lhs), r = resolve(cur->rhs);
      if (l.get() == cur->lhs.get() && r.get() == cur->rhs.get()) return cur;
      return Type::arrow(std::move(l), std::move(r));
    }
  }
  return cur;
}

bool TypeContext::occurs(int id, const TypeRef& t) const {
  TypeRef cur = shallow(t);
  switch (cur->tag) {
    case Type::Tag::Var:
      return cur->id == id;
    case Type::Tag::Con:
      for (const auto& a : cur->args)
        if (occurs(id, a)) return true;
      return false;
    case Type::Tag::Arrow:
      return occurs(id, cur->lhs) || occurs(id, cur->rhs);
  }
  return false;
}

bool TypeContext::unify(const TypeRef& a, const TypeRef& b) {
  TypeRef x = shallow(a), y = shallow(b);
  if (x->is_var() && y->is_var() && x->id == y->id) return true;
  if (x->is_var()) {
    if (occurs(x->id, y)) return false;
    bind_[x->id] = y;
    return true;
  }
  if (y->is_var()) {
    if (occurs(y->id, x)) return false;
    bind_[y->id] = x;
    return true;
  }
  if (x->tag != y->tag) return false;
  if (x->tag == Type::Tag::Con) {
    if (x->name != y->name || x->args.size() != y->args.size()) return false;
    for (size_t i = 0; i < x->args.size(); ++i)
      if (!unify(x->args[i], y->args[i])) return false;
    return true;
  }
  return unify(x->lhs, y->lhs) && unify(x->rhs, y->rhs);
}

TypeRef TypeContext::instantiate(const Polytype& p) {
  if (p.quantified.empty()) return p.body;
  std::unordered_map<int, TypeRef> remap;
  remap.reserve(p.quantified.size());
  for (int q : p.quantified) remap[q] = fresh();

  // Substitute quantified vars only; free vars of the polytype pass through.
  std::function<TypeRef(const TypeRef&)> go = [&](const TypeRef& t) -> TypeRef {
    switch (t->tag) {
      case Type::Tag::Var: {
        auto it = remap.find(t->id);
        return it == remap.end() ? t : it->second;
      }
      case Type::Tag::Con: {
        if (t->args.empty()) return t;
        std::vector<TypeRef> args;
        args.reserve(t->args.size());
        for (const auto& a : t->args) args.push_back(go(a));
        return Type::con(t->name, std::move(args));
      }
      case Type::Tag::Arrow:
        return Type::arrow(go(t->lhs), go(t->rhs));
    }
    return t;
  };
  return go(p.body);
}

void TypeContext::reserve_ids(int upto) { next_ = std::max(next_, upto); }

std::optional<std::unordered_map<int, TypeRef>> unify_types(const TypeRef& a,
                                                            const TypeRef& b) {
  TypeContext K;
  std::vector<int> vars;
  free_type_vars(a, vars);
  free_type_vars(b, vars);
  for (int v : vars) K.reserve_ids(v + 1);
  if (!K.unify(a, b)) return std::nullopt;
  std::unordered_map<int, TypeRef> sub;
  for (int v : vars) {
    TypeRef r = K.resolve(Type::var(v));
    if (!(r->is_var() && r->id == v)) sub[v] = r;
  }
  return sub;
}

namespace {
TypeRef canon_rec(const TypeRef& t, std::unordered_map<int, int>& seen) {
  switch (t->tag) {
    case Type::Tag::Var: {
      auto it = seen.find(t->id);
      if (it == seen.end()) it = seen.emplace(t->id, static_cast<int>(seen.size())).first;
      return Type::var(it->second);
    }
    case Type::Tag::Con: {
      if (t->args.empty()) return t;
      std::vector<TypeRef> args;
      args.reserve(t->args.size());
      for (const auto& a : t->args) args.push_back(canon_rec(a, seen));
      return Type::con(t->name, std::move(args));
    }
    case Type::Tag::Arrow:
      return Type::arrow(canon_rec(t->lhs, seen), canon_rec(t->rhs, seen));
  }
  return t;
}
}  // namespace

TypeRef canonical_type(const TypeRef& t) {
  std::unordered_map<int, int> seen;
  return canon_rec(t, seen);
}

void strip_arrows(const TypeContext& K, const TypeRef& t, std::vector<TypeRef>& args,
                  TypeRef& result) {
  TypeRef cur = K.resolve(t);
  while (cur->is_arrow()) {
    args.push_back(cur->lhs);
    cur = cur->rhs;
  }
  result = cur;
}

}  // namespace ddc
