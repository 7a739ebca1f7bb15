#include "ddc/expr.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace ddc {

ExprRef Expr::prim(std::string name) {
  auto e = std::make_shared<Expr>();
  e->tag = Tag::Prim;
  e->prim_name = std::move(name);
  return e;
}

ExprRef Expr::ix(int index) {
  auto e = std::make_shared<Expr>();
  e->tag = Tag::Index;
  e->index = index;
  return e;
}

ExprRef Expr::apply(ExprRef fn, ExprRef arg) {
  auto e = std::make_shared<Expr>();
  e->tag = Tag::Apply;
  e->fn = std::move(fn);
  e->arg = std::move(arg);
  return e;
}

ExprRef Expr::lambda(ExprRef body) {
  auto e = std::make_shared<Expr>();
  e->tag = Tag::Lambda;
  e->body = std::move(body);
  return e;
}

ExprRef Expr::hole(int id) {
  auto e = std::make_shared<Expr>();
  e->tag = Tag::Hole;
  e->hole_id = id;
  return e;
}

ExprRef app(ExprRef fn, const std::vector<ExprRef>& args) {
  ExprRef cur = std::move(fn);
  for (const auto& a : args) cur = Expr::apply(cur, a);
  return cur;
}

void spine(const ExprRef& e, ExprRef& head, std::vector<ExprRef>& args) {
  args.clear();
  ExprRef cur = e;
  while (cur->is(Expr::Tag::Apply)) {
    args.push_back(cur->arg);
    cur = cur->fn;
  }
  std::reverse(args.begin(), args.end());
  head = cur;
}

bool expr_equal(const ExprRef& a, const ExprRef& b) {
  if (a.get() == b.get()) return true;
  if (a->tag != b->tag) return false;
  switch (a->tag) {
    case Expr::Tag::Prim:
      return a->prim_name == b->prim_name;
    case Expr::Tag::Index:
      return a->index == b->index;
    case Expr::Tag::Apply:
      return expr_equal(a->fn, b->fn) && expr_equal(a->arg, b->arg);
    case Expr::Tag::Lambda:
      return expr_equal(a->body, b->body);
    case Expr::Tag::Hole:
      return a->hole_id == b->hole_id;
  }
  return false;
}

int expr_size(const ExprRef& e) {
  switch (e->tag) {
    case Expr::Tag::Prim:
    case Expr::Tag::Index:
      return 1;
    case Expr::Tag::Apply:
      return expr_size(e->fn) + expr_size(e->arg);
    case Expr::Tag::Lambda:
      return expr_size(e->body);
    case Expr::Tag::Hole:
      return 0;
  }
  return 0;
}

namespace {

void render_rec(const ExprRef& e, std::ostringstream& out) {
  switch (e->tag) {
    case Expr::Tag::Prim:
      out << e->prim_name;
      break;
    case Expr::Tag::Index:
      out << '$' << e->index;
      break;
    case Expr::Tag::Lambda:
      out << "(lambda ";
      render_rec(e->body, out);
      out << ')';
      break;
    case Expr::Tag::Apply: {
      ExprRef head;
      std::vector<ExprRef> args;
      spine(e, head, args);
      out << '(';
      render_rec(head, out);
      for (const auto& a : args) {
        out << ' ';
        render_rec(a, out);
      }
      out << ')';
      break;
    }
    case Expr::Tag::Hole:
      out << '?';
      break;
  }
}

struct ExprParser {
  const std::string& s;
  size_t pos = 0;

  explicit ExprParser(const std::string& text) : s(text) {}

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw std::runtime_error("expression parse error: " + msg + " near '" +
                             s.substr(pos, 12) + "'");
  }

  std::string token() {
    skip_ws();
    size_t start = pos;
    while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])) &&
           s[pos] != '(' && s[pos] != ')')
      ++pos;
    if (start == pos) fail("expected token");
    return s.substr(start, pos - start);
  }

  ExprRef expr() {
    skip_ws();
    if (pos >= s.size()) fail("unexpected end");
    if (s[pos] == '(') {
      ++pos;
      skip_ws();
      ExprRef result;
      if (s.compare(pos, 7, "lambda ") == 0 || s.compare(pos, 7, "lambda(") == 0) {
        pos += 6;
        result = Expr::lambda(expr());
      } else {
        result = expr();
        skip_ws();
        while (pos < s.size() && s[pos] != ')') {
          result = Expr::apply(result, expr());
          skip_ws();
        }
      }
      skip_ws();
      if (pos >= s.size() || s[pos] != ')') fail("expected ')'");
      ++pos;
      return result;
    }
    std::string tok = token();
    if (tok[0] == '$') {
      try {
        return Expr::ix(std::stoi(tok.substr(1)));
      } catch (const std::exception&) {
        fail("bad index " + tok);
      }
    }
    if (tok == "?") return Expr::hole(-1);
    return Expr::prim(tok);
  }
};

}  // namespace

std::string render_expr(const ExprRef& e) {
  std::ostringstream out;
  render_rec(e, out);
  return out.str();
}

ExprRef parse_expr(const std::string& text) {
  ExprParser p(text);
  ExprRef e = p.expr();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  return e;
}

ExprRef shift(const ExprRef& e, int delta, int cutoff) {
  switch (e->tag) {
    case Expr::Tag::Prim:
    case Expr::Tag::Hole:
      return e;
    case Expr::Tag::Index:
      return e->index >= cutoff ? Expr::ix(e->index + delta) : e;
    case Expr::Tag::Apply: {
      ExprRef f = shift(e->fn, delta, cutoff), a = shift(e->arg, delta, cutoff);
      if (f.get() == e->fn.get() && a.get() == e->arg.get()) return e;
      return Expr::apply(std::move(f), std::move(a));
    }
    case Expr::Tag::Lambda: {
      ExprRef b = shift(e->body, delta, cutoff + 1);
      return b.get() == e->body.get() ? e : Expr::lambda(std::move(b));
    }
  }
  return e;
}

ExprRef substitute(const ExprRef& e, int target, const ExprRef& value) {
  switch (e->tag) {
    case Expr::Tag::Prim:
    case Expr::Tag::Hole:
      return e;
    case Expr::Tag::Index:
      if (e->index == target) return value;
      // Removing the binder for `target` renumbers deeper free indexes.
      return e->index > target ? Expr::ix(e->index - 1) : e;
    case Expr::Tag::Apply:
      return Expr::apply(substitute(e->fn, target, value),
                         substitute(e->arg, target, value));
    case Expr::Tag::Lambda:
      return Expr::lambda(substitute(e->body, target + 1, shift(value, 1)));
  }
  return e;
}

namespace {
// One normal-order step; returns nullptr when already in normal form.
ExprRef step(const ExprRef& e) {
  switch (e->tag) {
    case Expr::Tag::Prim:
    case Expr::Tag::Index:
    case Expr::Tag::Hole:
      return nullptr;
    case Expr::Tag::Apply: {
      if (e->fn->is(Expr::Tag::Lambda))
        return substitute(e->fn->body, 0, e->arg);
      if (ExprRef f = step(e->fn)) return Expr::apply(std::move(f), e->arg);
      if (ExprRef a = step(e->arg)) return Expr::apply(e->fn, std::move(a));
      return nullptr;
    }
    case Expr::Tag::Lambda: {
      if (ExprRef b = step(e->body)) return Expr::lambda(std::move(b));
      return nullptr;
    }
  }
  return nullptr;
}
}  // namespace

ExprRef beta_normalize(const ExprRef& e, int fuel) {
  ExprRef cur = e;
  while (fuel-- > 0) {
    ExprRef next = step(cur);
    if (!next) return cur;
    cur = std::move(next);
  }
  return nullptr;
}

int free_index_bound(const ExprRef& e) {
  switch (e->tag) {
    case Expr::Tag::Prim:
    case Expr::Tag::Hole:
      return 0;
    case Expr::Tag::Index:
      return e->index + 1;
    case Expr::Tag::Apply:
      return std::max(free_index_bound(e->fn), free_index_bound(e->arg));
    case Expr::Tag::Lambda:
      return std::max(0, free_index_bound(e->body) - 1);
  }
  return 0;
}

bool contains_prim(const ExprRef& e, const std::string& name) {
  switch (e->tag) {
    case Expr::Tag::Prim:
      return e->prim_name == name;
    case Expr::Tag::Apply:
      return contains_prim(e->fn, name) || contains_prim(e->arg, name);
    case Expr::Tag::Lambda:
      return contains_prim(e->body, name);
    default:
      return false;
  }
}

bool contains_hole(const ExprRef& e) {
  switch (e->tag) {
    case Expr::Tag::Hole:
      return true;
    case Expr::Tag::Apply:
      return contains_hole(e->fn) || contains_hole(e->arg);
    case Expr::Tag::Lambda:
      return contains_hole(e->body);
    default:
      return false;
  }
}

void visit(const ExprRef& e, const std::function<void(const ExprRef&)>& f) {
  f(e);
  switch (e->tag) {
    case Expr::Tag::Apply:
      visit(e->fn, f);
      visit(e->arg, f);
      break;
    case Expr::Tag::Lambda:
      visit(e->body, f);
      break;
    default:
      break;
  }
}

}  // namespace ddc
