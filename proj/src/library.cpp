#include "ddc/library.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ddc/util.hpp"

namespace ddc {

using json = nlohmann::json;

void Library::add_builtin(std::string name, const std::string& type, BuiltinFn fn,
                          bool lazy_branches) {
  add_builtin(std::move(name), Polytype::generalize(parse_type(type)), std::move(fn),
              lazy_branches);
}

void Library::add_builtin(std::string name, Polytype poly, BuiltinFn fn,
                          bool lazy_branches) {
  if (byname_.count(name)) throw std::invalid_argument("duplicate primitive " + name);
  Primitive p;
  p.name = name;
  p.poly = std::move(poly);
  p.origin = Primitive::Origin::Builtin;
  p.builtin = std::move(fn);
  p.lazy_branches = lazy_branches;
  byname_[p.name] = prims_.size();
  prims_.push_back(std::move(p));
  set_uniform_theta();
}

const Primitive* Library::find(const std::string& name) const {
  auto it = byname_.find(name);
  return it == byname_.end() ? nullptr : &prims_[it->second];
}

const Primitive& Library::at(const std::string& name) const {
  const Primitive* p = find(name);
  if (!p) throw std::out_of_range("no primitive named " + name);
  return *p;
}

double Library::theta(const std::string& name) const {
  auto it = theta_.find(name);
  if (it == theta_.end()) throw std::out_of_range("no theta for " + name);
  return it->second;
}

void Library::set_uniform_theta() {
  double w = -std::log(static_cast<double>(prims_.size()) + 1.0);
  for (const auto& p : prims_) theta_[p.name] = w;
  variable_weight_ = w;
}

void Library::set_theta(const std::string& name, double log_w) {
  if (!byname_.count(name)) throw std::out_of_range("no primitive named " + name);
  theta_[name] = log_w;
}

std::pair<Library, std::string> Library::install_chunk(const ExprRef& f,
                                                       int cycle) const {
  if (!f || contains_hole(f) || !is_closed(f))
    throw std::invalid_argument("chunk definition must be a closed expression");
  TypeRef ty = infer_type(*this, f);  // throws TypeError when ill-typed

  ExprRef norm = inline_expr(f);
  for (const auto& p : prims_) {
    if (p.origin != Primitive::Origin::Chunk) continue;
    if (expr_equal(norm, inline_expr(p.definition))) throw DuplicateChunkError(p.name);
  }

  Library next = *this;
  std::string name;
  do {
    name = "g" + std::to_string(next.next_chunk_++);
  } while (next.byname_.count(name));

  // New chunks start at the mean of the existing primitive weights.
  double mean_w = 0.0;
  for (const auto& p : prims_) mean_w += std::exp(theta(p.name));
  mean_w /= static_cast<double>(prims_.size());

  Primitive p;
  p.name = name;
  p.poly = Polytype::generalize(canonical_type(ty));
  p.origin = Primitive::Origin::Chunk;
  p.definition = f;
  p.installed_cycle = cycle;
  next.byname_[name] = next.prims_.size();
  next.prims_.push_back(std::move(p));
  next.theta_[name] = std::log(mean_w);
  return {std::move(next), std::move(name)};
}

ExprRef Library::expand_chunks(const ExprRef& e) const {
  switch (e->tag) {
    case Expr::Tag::Prim: {
      const Primitive* p = find(e->prim_name);
      if (p && p->origin == Primitive::Origin::Chunk)
        return expand_chunks(p->definition);
      return e;
    }
    case Expr::Tag::Apply:
      return Expr::apply(expand_chunks(e->fn), expand_chunks(e->arg));
    case Expr::Tag::Lambda:
      return Expr::lambda(expand_chunks(e->body));
    default:
      return e;
  }
}

ExprRef Library::inline_expr(const ExprRef& e) const {
  ExprRef norm = beta_normalize(expand_chunks(e));
  if (!norm) throw std::runtime_error("inlining did not normalize: " + render_expr(e));
  return norm;
}

Library Library::fit_theta(const std::vector<ExprRef>& programs) const {
  std::map<std::string, long> counts;
  for (const auto& p : prims_) counts[p.name] = 0;
  long var_count = 0, total = 0;
  for (const auto& prog : programs) {
    visit(prog, [&](const ExprRef& e) {
      if (e->is(Expr::Tag::Prim)) {
        auto it = counts.find(e->prim_name);
        if (it == counts.end())
          throw std::out_of_range("program uses unknown primitive " + e->prim_name);
        ++it->second;
        ++total;
      } else if (e->is(Expr::Tag::Index)) {
        ++var_count;
        ++total;
      }
    });
  }
  // Laplace smoothing, pseudo-count 1 per primitive and for the variable
  // pseudo-component; the smoothed frequencies sum to 1 by construction.
  double denom = static_cast<double>(total + static_cast<long>(prims_.size()) + 1);
  Library next = *this;
  for (const auto& [name, c] : counts)
    next.theta_[name] = std::log(static_cast<double>(c + 1) / denom);
  next.variable_weight_ = std::log(static_cast<double>(var_count + 1) / denom);
  return next;
}

std::string Library::to_json_text() const {
  json doc;
  doc["version"] = 1;
  doc["next_chunk"] = next_chunk_;
  doc["variable_weight"] = variable_weight_;
  json arr = json::array();
  for (const auto& p : prims_) {
    json entry;
    entry["name"] = p.name;
    entry["type"] = p.poly.render();
    entry["theta"] = theta(p.name);
    if (p.origin == Primitive::Origin::Chunk) {
      entry["kind"] = "chunk";
      entry["definition"] = render_expr(p.definition);
      entry["cycle"] = p.installed_cycle;
    } else {
      entry["kind"] = "builtin";
    }
    arr.push_back(std::move(entry));
  }
  doc["primitives"] = std::move(arr);
  return doc.dump(2) + "\n";
}

Library Library::from_json_text(const std::string& text, const Library& builtins) {
  json doc = json::parse(text);
  if (!doc.contains("version") || doc["version"].get<int>() != 1)
    throw std::runtime_error("unsupported library file version");
  Library lib;
  for (const auto& entry : doc["primitives"]) {
    std::string name = entry["name"].get<std::string>();
    std::string kind = entry["kind"].get<std::string>();
    if (kind == "builtin") {
      const Primitive* src = builtins.find(name);
      if (!src) throw std::runtime_error("no builtin registered for " + name);
      lib.byname_[name] = lib.prims_.size();
      lib.prims_.push_back(*src);
    } else {
      Primitive p;
      p.name = name;
      p.poly = Polytype::generalize(parse_type(entry["type"].get<std::string>()));
      p.origin = Primitive::Origin::Chunk;
      p.definition = parse_expr(entry["definition"].get<std::string>());
      p.installed_cycle = entry.value("cycle", -1);
      lib.byname_[name] = lib.prims_.size();
      lib.prims_.push_back(std::move(p));
    }
    lib.theta_[name] = entry["theta"].get<double>();
  }
  lib.variable_weight_ = doc["variable_weight"].get<double>();
  lib.next_chunk_ = doc["next_chunk"].get<int>();
  return lib;
}

}  // namespace ddc
