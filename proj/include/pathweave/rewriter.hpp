#pragma once

// Cost-directed rewriting of path expressions.
//
// Rules are written in the expression syntax with metavariables. Hadamard
// and sum chains are matched modulo associativity and commutativity: a rule
// whose left side is `P & Q` (or `P + Q`) is tried against every ordered
// pair of factors of a flattened chain.
//
// simplify() applies the cheapest cost-reducing Auto rule until none helps;
// Enabling rules are only taken when an Auto rule right after them lowers the
// cost below the starting point. Manual rules are never applied by simplify().

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pathweave/error.hpp"
#include "pathweave/evaluator.hpp"
#include "pathweave/expr.hpp"
#include "pathweave/graph_store.hpp"
#include "pathweave/path_matrix.hpp"
#include "pathweave/syntax.hpp"

namespace pathweave {

struct Substitution {
  std::map<std::string, Expr> exprs;
  std::map<std::string, std::string> names;
  std::map<std::string, double> scalars;
  std::map<std::string, std::uint64_t> thresholds;
};

namespace detail {

inline bool bind_vertex(const VertexRef& p, const VertexRef& v, Substitution& s) {
  if (!p.meta) return !v.meta && p.name == v.name;
  if (v.meta) return false;
  auto [it, inserted] = s.names.emplace(p.name, v.name);
  return inserted || it->second == v.name;
}

inline bool match(const Expr& pat, const Expr& e, Substitution& s) {
  const Node& p = *pat;
  if (p.kind == NodeKind::Meta) {
    auto [it, inserted] = s.exprs.emplace(p.label, e);
    return inserted || it->second == e;
  }
  const Node& x = *e;
  if (p.kind != x.kind || p.children.size() != x.children.size()) return false;
  switch (p.kind) {
    case NodeKind::SliceRef:
      if (p.label != x.label) return false;
      break;
    case NodeKind::Filter:
      if (p.filter.kind != x.filter.kind || !bind_vertex(p.filter.first, x.filter.first, s) ||
          !bind_vertex(p.filter.second, x.filter.second, s))
        return false;
      break;
    case NodeKind::Scale:
      if (!x.param_meta.empty()) return false;
      if (p.param_meta.empty()) {
        if (p.lambda != x.lambda) return false;
      } else {
        auto [it, inserted] = s.scalars.emplace(p.param_meta, x.lambda);
        if (!inserted && it->second != x.lambda) return false;
      }
      break;
    case NodeKind::VOut:
    case NodeKind::VIn:
      if (!x.param_meta.empty()) return false;
      if (p.param_meta.empty()) {
        if (p.threshold != x.threshold) return false;
      } else {
        auto [it, inserted] = s.thresholds.emplace(p.param_meta, x.threshold);
        if (!inserted && it->second != x.threshold) return false;
      }
      break;
    default:
      break;
  }
  for (std::size_t i = 0; i < p.children.size(); ++i)
    if (!match(p.children[i], x.children[i], s)) return false;
  return true;
}

inline VertexRef instantiate_vertex(const VertexRef& v, const Substitution& s) {
  if (!v.meta) return v;
  auto it = s.names.find(v.name);
  if (it == s.names.end()) throw DomainError("pattern uses unbound vertex ?" + v.name);
  return {it->second, false};
}

inline Expr instantiate(const Expr& pat, const Substitution& s) {
  const Node& p = *pat;
  if (p.kind == NodeKind::Meta) {
    auto it = s.exprs.find(p.label);
    if (it == s.exprs.end()) throw DomainError("pattern uses unbound ?" + p.label);
    return it->second;
  }
  Node n = p;
  n.children.clear();
  for (const auto& c : p.children) n.children.push_back(instantiate(c, s));
  if (n.kind == NodeKind::Filter) {
    n.filter.first = instantiate_vertex(n.filter.first, s);
    n.filter.second = instantiate_vertex(n.filter.second, s);
  }
  if (!n.param_meta.empty()) {
    if (n.kind == NodeKind::Scale) {
      auto it = s.scalars.find(n.param_meta);
      if (it == s.scalars.end()) throw DomainError("pattern uses unbound ?" + n.param_meta);
      n.lambda = it->second;
    } else {
      auto it = s.thresholds.find(n.param_meta);
      if (it == s.thresholds.end()) throw DomainError("pattern uses unbound ?" + n.param_meta);
      n.threshold = it->second;
    }
    n.param_meta.clear();
  }
  return make(std::move(n));
}

inline bool is_chain_kind(NodeKind k) { return k == NodeKind::Hadamard || k == NodeKind::Add; }

inline void flatten(const Expr& e, NodeKind kind, std::vector<Expr>& out) {
  if (e->kind == kind) {
    flatten(e->children[0], kind, out);
    flatten(e->children[1], kind, out);
  } else {
    out.push_back(e);
  }
}

inline Expr rebuild(NodeKind kind, const std::vector<Expr>& factors) {
  Expr acc = factors.front();
  for (std::size_t i = 1; i < factors.size(); ++i) acc = ex::binary(kind, acc, factors[i]);
  return acc;
}

}  // namespace detail

// Rebuilds every Hadamard and sum chain left-associated, keeping factor order.
inline Expr normalize_chains(const Expr& e) {
  std::vector<Expr> kids;
  if (detail::is_chain_kind(e->kind)) {
    std::vector<Expr> factors;
    detail::flatten(e, e->kind, factors);
    for (auto& f : factors) f = normalize_chains(f);
    return detail::rebuild(e->kind, factors);
  }
  if (e->children.empty()) return e;
  for (const auto& c : e->children) kids.push_back(normalize_chains(c));
  return with_children(e, std::move(kids));
}

enum class RuleMode : std::uint8_t { Auto, Enabling, Manual };

// One left/right pair of a rule. `boolean` names metavariables that must be
// syntactically {0,1}-valued; `distinct` names vertex metavariables that must
// bind different names.
struct RuleForm {
  Expr lhs;
  Expr rhs;
  std::function<Expr(const Substitution&)> build;
  std::vector<std::string> boolean;
  std::vector<std::pair<std::string, std::string>> distinct;

  bool pairwise() const { return detail::is_chain_kind(lhs->kind); }

  bool guard(const Substitution& s) const {
    for (const auto& m : boolean)
      if (!is_boolean(s.exprs.at(m))) return false;
    for (const auto& [a, b] : distinct)
      if (s.names.at(a) == s.names.at(b)) return false;
    return true;
  }

  Expr rewrite(const Substitution& s) const {
    return build ? build(s) : detail::instantiate(rhs, s);
  }
};

struct RewriteRule {
  std::string name;
  std::string justification;
  RuleMode mode = RuleMode::Auto;
  std::vector<RuleForm> forms;
};

namespace detail {

inline RuleForm form(std::string_view lhs, std::string_view rhs,
                     std::vector<std::string> boolean = {},
                     std::vector<std::pair<std::string, std::string>> distinct = {}) {
  return {parse_pattern(lhs), parse_pattern(rhs), {}, std::move(boolean), std::move(distinct)};
}

inline std::vector<RewriteRule> build_standard_rules() {
  using M = RuleMode;
  std::vector<RewriteRule> r;
  auto add = [&](std::string name, std::string why, M mode, std::vector<RuleForm> forms) {
    r.push_back({std::move(name), std::move(why), mode, std::move(forms)});
  };

  add("had-unit", "A ∘ 1 = A", M::Auto, {form("?A & ONES", "?A")});
  add("had-zero", "A ∘ 0 = 0", M::Auto, {form("?A & ZERO", "ZERO")});
  add("had-idempotent", "A ∘ A = A", M::Auto, {form("?A & ?A", "?A", {"A"})});
  add("had-complement", "A ∘ n(A) = 0", M::Auto, {form("?A & not(?A)", "ZERO")});
  add("had-commute", "A ∘ B = B ∘ A", M::Auto, {form("?A & ?B", "?B & ?A")});
  add("had-transpose-fuse", "Aᵀ ∘ Bᵀ = (A ∘ B)ᵀ", M::Auto, {form("?A' & ?B'", "(?A & ?B)'")});
  add("had-transpose-filter", "R_i = C_iᵀ, E_i,j = E_j,iᵀ, Iᵀ = I and Aᵀ ∘ Bᵀ = (A ∘ B)ᵀ",
      M::Auto,
      {form("?A' & R(?i)", "(?A & C(?i))'"), form("R(?i) & ?A'", "(C(?i) & ?A)'"),
       form("?A' & C(?i)", "(?A & R(?i))'"), form("C(?i) & ?A'", "(R(?i) & ?A)'"),
       form("?A' & E(?i, ?j)", "(?A & E(?j, ?i))'"),
       form("E(?i, ?j) & ?A'", "(E(?j, ?i) & ?A)'"), form("?A' & I", "(?A & I)'"),
       form("I & ?A'", "(I & ?A)'")});
  add("distribute", "A ∘ (B + C) = (A ∘ B) + (A ∘ C)", M::Enabling,
      {form("?A & (?B + ?C)", "?A & ?B + ?A & ?C"),
       form("(?B + ?C) & ?A", "?B & ?A + ?C & ?A")});
  add("scalar-pull", "A ∘ λB = λ(A ∘ B)", M::Enabling,
      {form("?A & ?k * ?B", "?k * (?A & ?B)"), form("?k * ?B & ?A", "?k * (?B & ?A)")});
  add("factor-hadamard", "(A ∘ C) + (B ∘ C) = (A + B) ∘ C and λ(A ∘ C) = (λA) ∘ C", M::Auto,
      {form("?k * (?A & ?F) + ?l * (?B & ?F)", "(?k * ?A + ?l * ?B) & ?F"),
       form("?k * (?F & ?A) + ?l * (?F & ?B)", "?F & (?k * ?A + ?l * ?B)"),
       form("?k * (?A & ?F) + ?B & ?F", "(?k * ?A + ?B) & ?F"),
       form("?k * (?F & ?A) + ?F & ?B", "?F & (?k * ?A + ?B)"),
       form("?A & ?F + ?B & ?F", "(?A + ?B) & ?F"), form("?F & ?A + ?F & ?B", "?F & (?A + ?B)")});

  add("double-not", "n(n(A)) = A", M::Auto, {form("not(not(?A))", "?A")});
  add("clip-not", "c(n(A)) = n(A)", M::Auto, {form("clip(not(?A))", "not(?A)")});
  add("clip-not-intro", "n(A) = c(n(A))", M::Manual, {form("not(?A)", "clip(not(?A))")});
  add("clip-boolean", "c(A) = A", M::Auto, {form("clip(?A)", "?A", {"A"})});
  add("clip-merge", "c(Y) ∘ c(Z) = c(Y ∘ Z)", M::Auto,
      {form("clip(?Y) & clip(?Z)", "clip(?Y & ?Z)")});
  add("clip-split", "c(Y ∘ Z) = c(Y) ∘ c(Z)", M::Enabling,
      {form("clip(?Y & ?Z)", "clip(?Y) & clip(?Z)")});
  add("de-morgan-hadamard", "c(n(A) + n(B)) = n(A ∘ B)", M::Manual,
      {form("clip(not(?A) + not(?B))", "not(?A & ?B)", {"A", "B"})});
  add("de-morgan-hadamard-expand", "n(A ∘ B) = c(n(A) + n(B))", M::Manual,
      {form("not(?A & ?B)", "clip(not(?A) + not(?B))", {"A", "B"})});
  add("de-morgan-sum", "n(c(A + B)) = n(A) ∘ n(B)", M::Manual,
      {form("not(clip(?A + ?B))", "not(?A) & not(?B)", {"A", "B"})});
  add("de-morgan-sum-fold", "n(A) ∘ n(B) = n(c(A + B))", M::Manual,
      {form("not(?A) & not(?B)", "not(clip(?A + ?B))", {"A", "B"})});
  add("filter-absorption",
      "n(c(Y ∘ F)) ∘ F = n(c(Y)) ∘ F for boolean F, via c(Y ∘ Z) = c(Y) ∘ c(Z), "
      "n(A ∘ B) = c(n(A) + n(B)), A ∘ (B + C) = (A ∘ B) + (A ∘ C) and A ∘ n(A) = 0",
      M::Auto,
      {form("not(clip(?Y & ?F)) & ?F", "not(clip(?Y)) & ?F", {"F"}),
       form("not(clip(?F & ?Y)) & ?F", "not(clip(?Y)) & ?F", {"F"}),
       form("not(?Y & ?F) & ?F", "not(?Y) & ?F", {"Y", "F"}),
       form("not(?F & ?Y) & ?F", "not(?Y) & ?F", {"Y", "F"})});

  add("filter-rows", "R_i ∘ R_j = 0 for i ≠ j", M::Auto,
      {form("R(?i) & R(?j)", "ZERO", {}, {{"i", "j"}})});
  add("filter-cols", "C_i ∘ C_j = 0 for i ≠ j", M::Auto,
      {form("C(?i) & C(?j)", "ZERO", {}, {{"i", "j"}})});
  add("filter-row-col", "R_i ∘ C_j = E_i,j", M::Auto, {form("R(?i) & C(?j)", "E(?i, ?j)")});
  add("filter-transpose", "R_i = C_iᵀ, E_i,j = E_j,iᵀ, Iᵀ = I", M::Auto,
      {form("R(?i)'", "C(?i)"), form("C(?i)'", "R(?i)"), form("E(?i, ?j)'", "E(?j, ?i)"),
       form("I'", "I"), form("ONES'", "ONES"), form("ZERO'", "ZERO")});
  add("not-filter", "n(0) = 1", M::Auto,
      {form("not(ZERO)", "ONES"), form("not(ONES)", "ZERO")});

  add("vertex-row", "v⁻(R_i) = R_i and v⁺(C_i) = C_i", M::Auto,
      {form("vout(R(?i))", "R(?i)"), form("vin(C(?i))", "C(?i)")});
  add("vertex-entry", "v⁺(E_i,j) ∘ v⁻(E_i,j) = E_i,j", M::Auto,
      {form("vin(E(?i, ?j)) & vout(E(?i, ?j))", "E(?i, ?j)")});
  add("vertex-transpose", "v⁺(Zᵀ, p) = v⁻(Z, p)ᵀ and v⁻(Zᵀ, p) = v⁺(Z, p)ᵀ", M::Auto,
      {form("vin(?Z', ?p)", "vout(?Z, ?p)'"), form("vout(?Z', ?p)", "vin(?Z, ?p)'")});
  add("vertex-hadamard", "v⁻(Z ∘ R_i) = v⁻(Z) ∘ R_i and v⁺(Z ∘ C_i) = v⁺(Z) ∘ C_i",
      M::Manual,
      {form("vout(?Z & R(?i), ?p)", "vout(?Z, ?p) & R(?i)"),
       form("vin(?Z & C(?i), ?p)", "vin(?Z, ?p) & C(?i)")});

  add("transpose-involution", "(Aᵀ)ᵀ = A", M::Auto, {form("?A''", "?A")});
  add("transpose-product", "(A · B)ᵀ = Bᵀ · Aᵀ", M::Auto, {form("?B' . ?A'", "(?A . ?B)'")});
  add("transpose-pull", "n(Aᵀ) = n(A)ᵀ, c(Aᵀ) = c(A)ᵀ, λAᵀ = (λA)ᵀ, Aᵀ + Bᵀ = (A + B)ᵀ",
      M::Auto,
      {form("not(?A')", "not(?A)'"), form("clip(?A')", "clip(?A)'"),
       form("?k * ?A'", "(?k * ?A)'"), form("?A' + ?B'", "(?A + ?B)'")});

  add("row-filter-push", "(A · B) ∘ F = (A ∘ F) · B for a row selecting F", M::Manual,
      {form("(?A . ?B) & R(?i)", "(?A & R(?i)) . ?B"),
       form("(?A . ?B) & vout(?Z, ?p)", "(?A & vout(?Z, ?p)) . ?B")});
  add("col-filter-push", "(A · B) ∘ F = A · (B ∘ F) for a column selecting F", M::Manual,
      {form("(?A . ?B) & C(?i)", "?A . (?B & C(?i))"),
       form("(?A . ?B) & vin(?Z, ?p)", "?A . (?B & vin(?Z, ?p))")});

  add("scale-unit", "1A = A", M::Auto, {form("1 * ?A", "?A")});
  add("scale-zero", "0A = 0 and λ0 = 0", M::Auto,
      {form("0 * ?A", "ZERO"), form("?k * ZERO", "ZERO")});
  RuleForm nested;
  nested.lhs = parse_pattern("?k * (?l * ?A)");
  nested.build = [](const Substitution& s) {
    return ex::scale(s.scalars.at("k") * s.scalars.at("l"), s.exprs.at("A"));
  };
  add("scale-nested", "λ(μA) = (λμ)A", M::Auto, {nested});
  add("add-zero", "A + 0 = A", M::Auto, {form("?A + ZERO", "?A")});
  add("matmul-zero", "A · 0 = 0 · A = 0", M::Auto,
      {form("?A . ZERO", "ZERO"), form("ZERO . ?A", "ZERO")});
  add("matmul-identity", "A · I = I · A = A", M::Auto,
      {form("?A . I", "?A"), form("I . ?A", "?A")});
  return r;
}

}  // namespace detail

inline const std::vector<RewriteRule>& standard_rules() {
  static const std::vector<RewriteRule> rules = detail::build_standard_rules();
  return rules;
}

inline const RewriteRule& find_rule(std::string_view name) {
  for (const auto& r : standard_rules())
    if (r.name == name) return r;
  throw DomainError("unknown rule '" + std::string(name) + "'");
}

// Which factors of a chain a pairwise form was applied to.
using FactorPair = std::pair<std::size_t, std::size_t>;

struct TraceStep {
  std::string rule;
  std::string justification;
  ExprPath path;
  std::size_t form = 0;
  std::optional<FactorPair> pair;
  Expr before;  // subexpression at `path` before the step
  Expr after;   // and after it
  Expr result;  // whole expression after the step
};

struct RuleTrace {
  std::vector<TraceStep> steps;
};

struct SimplifyResult {
  Expr expr;
  RuleTrace trace;
};

// Weighted node count (MatMul 4, Hadamard 2, others 1).
inline std::size_t weight_of(NodeKind k) {
  switch (k) {
    case NodeKind::MatMul: return 4;
    case NodeKind::Hadamard: return 2;
    default: return 1;
  }
}

inline std::size_t tree_cost(const Expr& e) {
  std::size_t c = weight_of(e->kind);
  for (const auto& ch : e->children) c += tree_cost(ch);
  return c;
}

// Weighted count over distinct subterms: repeated subexpressions are paid
// once, as the evaluator computes them once.
inline std::size_t dag_cost(const Expr& e) {
  std::unordered_set<Expr, ExprHash> seen;
  std::size_t total = 0;
  std::vector<Expr> stack{e};
  while (!stack.empty()) {
    Expr cur = stack.back();
    stack.pop_back();
    if (!seen.insert(cur).second) continue;
    total += weight_of(cur->kind);
    for (const auto& ch : cur->children) stack.push_back(ch);
  }
  return total;
}

struct CostKey {
  std::size_t dag = 0;
  std::size_t tree = 0;
  std::size_t transpose_depth = 0;  // sum of depths of transpose nodes
  auto operator<=>(const CostKey&) const = default;
};

namespace detail {

// Chain factors all sit one level below the chain, whatever the nesting.
inline std::size_t transpose_depth(const Expr& e, std::size_t d) {
  std::size_t s = e->kind == NodeKind::Transpose ? d : 0;
  if (is_chain_kind(e->kind)) {
    std::vector<Expr> factors;
    flatten(e, e->kind, factors);
    for (const auto& f : factors) s += transpose_depth(f, d + 1);
    return s;
  }
  for (const auto& ch : e->children) s += transpose_depth(ch, d + 1);
  return s;
}

}  // namespace detail

inline CostKey cost_key(const Expr& e) {
  return {dag_cost(e), tree_cost(e), detail::transpose_depth(e, 0)};
}

namespace detail {

// Applies one form at `node`. For pairwise forms `pair` selects the factors.
inline std::optional<Expr> apply_form_here(const Expr& node, const RuleForm& f,
                                           const std::optional<FactorPair>& pair) {
  if (!f.pairwise()) {
    Substitution s;
    if (!match(f.lhs, node, s) || !f.guard(s)) return std::nullopt;
    return f.rewrite(s);
  }
  if (node->kind != f.lhs->kind || !pair) return std::nullopt;
  std::vector<Expr> factors;
  flatten(node, node->kind, factors);
  auto [i, j] = *pair;
  if (i == j || i >= factors.size() || j >= factors.size()) return std::nullopt;
  Substitution s;
  if (!match(f.lhs->children[0], factors[i], s) || !match(f.lhs->children[1], factors[j], s) ||
      !f.guard(s))
    return std::nullopt;
  Expr rhs = f.rewrite(s);
  std::vector<Expr> out;
  for (std::size_t k = 0; k < factors.size(); ++k) {
    if (k == j) continue;
    if (k == i)
      flatten(rhs, node->kind, out);
    else
      out.push_back(factors[k]);
  }
  return rebuild(node->kind, out);
}

struct Position {
  ExprPath path;
  Expr node;
  bool chain_interior;  // inside a chain of the same kind; the chain top handles pairs
};

inline void collect_positions(const Expr& e, ExprPath& path, bool interior,
                              std::vector<Position>& out) {
  out.push_back({path, e, interior});
  for (std::size_t i = 0; i < e->children.size(); ++i) {
    path.push_back(i);
    bool child_interior = is_chain_kind(e->kind) && e->children[i]->kind == e->kind;
    collect_positions(e->children[i], path, child_interior, out);
    path.pop_back();
  }
}

struct Candidate {
  const RewriteRule* rule = nullptr;
  std::size_t form = 0;
  ExprPath path;
  std::optional<FactorPair> pair;
  Expr before;
  Expr after;
  Expr result;
};

template <typename Visit>
void for_each_application(const Expr& e, const std::vector<RewriteRule>& rules, RuleMode mode,
                          Visit&& visit) {
  std::vector<Position> positions;
  ExprPath path;
  collect_positions(e, path, false, positions);
  for (const auto& pos : positions) {
    std::size_t chain_len = 0;
    for (const auto& rule : rules) {
      if (rule.mode != mode) continue;
      for (std::size_t fi = 0; fi < rule.forms.size(); ++fi) {
        const RuleForm& f = rule.forms[fi];
        auto emit = [&](const std::optional<FactorPair>& pair) {
          auto local = apply_form_here(pos.node, f, pair);
          if (!local) return;
          Candidate c{&rule, fi, pos.path, pair, pos.node, *local,
                      replace_at(e, pos.path, *local)};
          visit(c);
        };
        if (!f.pairwise()) {
          if (f.lhs->kind == pos.node->kind) emit(std::nullopt);
          continue;
        }
        if (pos.chain_interior || pos.node->kind != f.lhs->kind) continue;
        if (chain_len == 0) {
          std::vector<Expr> factors;
          flatten(pos.node, pos.node->kind, factors);
          chain_len = factors.size();
        }
        for (std::size_t i = 0; i < chain_len; ++i)
          for (std::size_t j = 0; j < chain_len; ++j)
            if (i != j) emit(FactorPair{i, j});
      }
    }
  }
}

inline bool improves(const CostKey& next, const CostKey& cur) {
  return next < cur && next.tree <= cur.tree;
}

inline std::optional<std::pair<Candidate, CostKey>> best_auto(
    const Expr& e, const std::vector<RewriteRule>& rules, const CostKey& bound) {
  std::optional<std::pair<Candidate, CostKey>> best;
  for_each_application(e, rules, RuleMode::Auto, [&](const Candidate& c) {
    CostKey k = cost_key(c.result);
    if (!improves(k, bound)) return;
    if (!best || k < best->second) best = std::make_pair(c, k);
  });
  return best;
}

inline TraceStep to_step(const Candidate& c) {
  return {c.rule->name, c.rule->justification, c.path, c.form, c.pair, c.before, c.after, c.result};
}

}  // namespace detail

// Applies `rule` (form `form`) at `path`. Returns nullopt when it does not
// match there or its guard fails.
inline std::optional<Expr> apply_rule(const Expr& e, const RewriteRule& rule, const ExprPath& path,
                                      std::size_t form = 0,
                                      std::optional<FactorPair> pair = std::nullopt) {
  if (form >= rule.forms.size()) return std::nullopt;
  const Expr* node = &e;
  for (std::size_t i : path) {
    if (i >= (*node)->children.size()) return std::nullopt;
    node = &(*node)->children[i];
  }
  auto local = detail::apply_form_here(*node, rule.forms[form], pair);
  if (!local) return std::nullopt;
  return replace_at(e, path, *local);
}

// Tries every form (and every factor pair) of `rule` at `path`; returns the
// first result equal to `expected` after chain normalization, or the first
// application when `expected` is empty.
inline std::optional<Expr> apply_rule_any(const Expr& e, const RewriteRule& rule,
                                          const ExprPath& path,
                                          const std::optional<Expr>& expected = std::nullopt) {
  const Expr& node = subexpr(e, path);
  std::size_t len = 1;
  if (detail::is_chain_kind(node->kind)) {
    std::vector<Expr> f;
    detail::flatten(node, node->kind, f);
    len = f.size();
  }
  Expr want = expected ? normalize_chains(*expected) : Expr();
  for (std::size_t fi = 0; fi < rule.forms.size(); ++fi) {
    std::vector<std::optional<FactorPair>> pairs{std::nullopt};
    if (rule.forms[fi].pairwise())
      for (std::size_t i = 0; i < len; ++i)
        for (std::size_t j = 0; j < len; ++j)
          if (i != j) pairs.emplace_back(FactorPair{i, j});
    for (const auto& p : pairs) {
      auto r = apply_rule(e, rule, path, fi, p);
      if (!r) continue;
      if (!expected || normalize_chains(*r) == want) return r;
    }
  }
  return std::nullopt;
}

inline SimplifyResult simplify(const Expr& e,
                               const std::vector<RewriteRule>& rules = standard_rules()) {
  SimplifyResult out{e, {}};
  const std::size_t nodes = node_count(e);
  const std::size_t budget = std::max<std::size_t>(16, nodes * nodes);
  CostKey key = cost_key(e);
  std::size_t applied = 0;
  while (applied < budget) {
    if (auto best = detail::best_auto(out.expr, rules, key)) {
      out.trace.steps.push_back(detail::to_step(best->first));
      out.expr = best->first.result;
      key = best->second;
      ++applied;
      continue;
    }
    // Two-step lookahead through an enabling rule.
    std::optional<std::pair<detail::Candidate, detail::Candidate>> best_pair;
    CostKey best_key = key;
    detail::for_each_application(out.expr, rules, RuleMode::Enabling,
                                 [&](const detail::Candidate& first) {
                                   auto second = detail::best_auto(first.result, rules, key);
                                   if (!second || !(second->second < best_key)) return;
                                   best_key = second->second;
                                   best_pair = std::make_pair(first, second->first);
                                 });
    if (!best_pair || applied + 2 > budget) break;
    out.trace.steps.push_back(detail::to_step(best_pair->first));
    out.trace.steps.push_back(detail::to_step(best_pair->second));
    out.expr = best_pair->second.result;
    key = best_key;
    applied += 2;
  }
  return out;
}

// Re-applies a trace to its input. Throws DomainError if a step no longer
// applies.
inline Expr replay(const Expr& e, const RuleTrace& trace) {
  Expr cur = e;
  for (const auto& s : trace.steps) {
    auto next = apply_rule(cur, find_rule(s.rule), s.path, s.form, s.pair);
    if (!next) throw DomainError("trace step '" + s.rule + "' does not apply");
    cur = *next;
  }
  return cur;
}

// Two-column derivation: each line is the whole expression and the identity
// that produced it.
inline std::string derivation_table(const Expr& input, const RuleTrace& trace) {
  std::vector<std::pair<std::string, std::string>> rows;
  rows.emplace_back(format(input), "");
  for (const auto& s : trace.steps) rows.emplace_back(format(s.result), s.rule + ": " + s.justification);
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.first.size());
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out += i == 0 ? "  " : "= ";
    out += rows[i].first;
    if (!rows[i].second.empty()) {
      out += std::string(width - rows[i].first.size(), ' ');
      out += " | " + rows[i].second;
    }
    out += '\n';
  }
  return out;
}

// ---- empirical soundness ----

struct VerifyReport {
  bool ok = true;
  std::size_t compared = 0;  // cases where the left side evaluated
  std::string counterexample;
};

namespace detail {

struct PatternVars {
  std::set<std::string> exprs;
  std::set<std::string> names;
  std::set<std::string> scalars;
  std::set<std::string> thresholds;
  std::set<std::string> under_not;
};

inline void collect_vars(const Expr& e, bool under_not, PatternVars& v) {
  const Node& n = *e;
  if (n.kind == NodeKind::Meta) {
    v.exprs.insert(n.label);
    if (under_not) v.under_not.insert(n.label);
    return;
  }
  if (n.kind == NodeKind::Filter) {
    if (n.filter.first.meta) v.names.insert(n.filter.first.name);
    if (n.filter.second.meta) v.names.insert(n.filter.second.name);
  }
  if (!n.param_meta.empty())
    (n.kind == NodeKind::Scale ? v.scalars : v.thresholds).insert(n.param_meta);
  for (const auto& c : n.children) collect_vars(c, under_not || n.kind == NodeKind::Not, v);
}

inline MultiRelTensor vertex_only_tensor(std::size_t n) {
  VertexDictionary dict;
  for (std::size_t i = 0; i < n; ++i) dict.intern("v" + std::to_string(i));
  return MultiRelTensor(std::move(dict), {});
}

inline PathMatrix random_matrix(std::size_t n, bool boolean, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int kind = boolean ? 0 : static_cast<int>(rng() % 3);
  double density = 0.15 + 0.5 * u(rng);
  std::vector<MatrixEntry> entries;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (u(rng) >= density) continue;
      double v = 1.0;
      if (kind == 1) v = static_cast<double>(1 + rng() % 4);
      if (kind == 2) v = 0.1 + 3.0 * u(rng);
      entries.push_back({static_cast<VertexId>(i), static_cast<VertexId>(j), v});
    }
  return PathMatrix::from_entries(n, std::move(entries));
}

inline PathMatrix matrix_from_bits(std::size_t n, unsigned bits) {
  std::vector<MatrixEntry> entries;
  for (std::size_t k = 0; k < n * n; ++k)
    if (bits & (1u << k))
      entries.push_back({static_cast<VertexId>(k / n), static_cast<VertexId>(k % n), 1.0});
  return PathMatrix::from_entries(n, std::move(entries));
}

inline bool same_value(const PathMatrix& a, const PathMatrix& b) {
  if (a.is_integral() && b.is_integral()) return a == b;
  return approx_equal(a, b, 1e-9);
}

// Evaluates both sides of `f` under one assignment. Returns false only on a
// disagreement (or when the right side fails while the left succeeds).
inline bool check_case(const RuleForm& f, const MultiRelTensor& t, const Bindings& b,
                       const Substitution& s, VerifyReport& report) {
  for (const auto& [x, y] : f.distinct)
    if (s.names.at(x) == s.names.at(y)) return true;
  Expr lhs = instantiate(f.lhs, s);
  Expr rhs = f.rewrite(s);
  std::optional<PathMatrix> l;
  try {
    l = evaluate(lhs, t, &b);
  } catch (const DomainError&) {
    return true;
  }
  ++report.compared;
  try {
    PathMatrix r = evaluate(rhs, t, &b);
    if (same_value(*l, r)) return true;
  } catch (const DomainError&) {
  }
  std::string desc = format(lhs) + " vs " + format(rhs) + " with";
  for (const auto& [name, m] : b) {
    desc += " ?" + name + "=[";
    bool first = true;
    m.for_each_nonzero([&](VertexId i, VertexId j, double v) {
      if (!first) desc += ' ';
      first = false;
      desc += std::to_string(i) + "," + std::to_string(j) + ":" + format_number(v);
    });
    desc += "]";
  }
  report.ok = false;
  report.counterexample = desc + " (n=" + std::to_string(t.n()) + ")";
  return false;
}

inline Substitution identity_substitution(const PatternVars& v) {
  Substitution s;
  for (const auto& x : v.exprs) s.exprs[x] = ex::meta(x);
  return s;
}

}  // namespace detail

// Checks every form of `rule` empirically: exhaustively over 2x2 boolean
// matrices when a form has at most two expression metavariables, then on
// `trials` random assignments with n <= 8. Metavariables under `not` or in a
// boolean guard get {0,1} matrices. Cases where the left side itself fails to
// evaluate are skipped.
inline VerifyReport verify_rule_report(const RewriteRule& rule, std::size_t trials,
                                       std::uint64_t seed = 1) {
  VerifyReport report;
  std::mt19937_64 rng(seed);
  const std::vector<double> scalar_choices{0.0, 1.0, 0.6, 2.5};
  for (const auto& f : rule.forms) {
    detail::PatternVars vars;
    detail::collect_vars(f.lhs, false, vars);
    if (f.rhs) detail::collect_vars(f.rhs, false, vars);
    std::set<std::string> boolean(vars.under_not);
    boolean.insert(f.boolean.begin(), f.boolean.end());
    std::vector<std::string> exprs(vars.exprs.begin(), vars.exprs.end());
    std::vector<std::string> names(vars.names.begin(), vars.names.end());
    std::vector<std::string> scalars(vars.scalars.begin(), vars.scalars.end());
    std::vector<std::string> thresholds(vars.thresholds.begin(), vars.thresholds.end());

    if (exprs.size() <= 2) {
      const std::size_t n = 2;
      auto t = detail::vertex_only_tensor(n);
      std::size_t combos = std::size_t{1} << (4 * exprs.size());
      std::size_t name_combos = std::size_t{1} << names.size();
      std::size_t scalar_combos = 1;
      for (std::size_t k = 0; k < scalars.size(); ++k) scalar_combos *= scalar_choices.size();
      std::size_t threshold_combos = 1;
      for (std::size_t k = 0; k < thresholds.size(); ++k) threshold_combos *= 3;
      for (std::size_t c = 0; c < combos; ++c)
        for (std::size_t nc = 0; nc < name_combos; ++nc)
          for (std::size_t sc = 0; sc < scalar_combos; ++sc)
            for (std::size_t tc = 0; tc < threshold_combos; ++tc) {
              Bindings b;
              for (std::size_t k = 0; k < exprs.size(); ++k)
                b.emplace(exprs[k], detail::matrix_from_bits(n, (c >> (4 * k)) & 0xF));
              Substitution s = detail::identity_substitution(vars);
              for (std::size_t k = 0; k < names.size(); ++k)
                s.names[names[k]] = "v" + std::to_string((nc >> k) & 1);
              std::size_t rest = sc;
              for (const auto& x : scalars) {
                s.scalars[x] = scalar_choices[rest % scalar_choices.size()];
                rest /= scalar_choices.size();
              }
              rest = tc;
              for (const auto& x : thresholds) {
                s.thresholds[x] = rest % 3;
                rest /= 3;
              }
              if (!detail::check_case(f, t, b, s, report)) return report;
            }
    }

    for (std::size_t trial = 0; trial < trials; ++trial) {
      std::size_t n = 1 + rng() % 8;
      auto t = detail::vertex_only_tensor(n);
      Bindings b;
      for (const auto& x : exprs) b.emplace(x, detail::random_matrix(n, boolean.count(x) > 0, rng));
      Substitution s = detail::identity_substitution(vars);
      for (const auto& x : names) s.names[x] = "v" + std::to_string(rng() % n);
      for (const auto& x : scalars) {
        std::uniform_real_distribution<double> u(0.0, 3.0);
        s.scalars[x] = (rng() % 4 == 0) ? scalar_choices[rng() % scalar_choices.size()] : u(rng);
      }
      for (const auto& x : thresholds) s.thresholds[x] = rng() % 4;
      if (!detail::check_case(f, t, b, s, report)) return report;
    }
  }
  if (report.compared == 0) {
    report.ok = false;
    report.counterexample = "no case where the left side evaluates";
  }
  return report;
}

inline bool verify_rule(const RewriteRule& rule, std::size_t trials, std::uint64_t seed = 1) {
  return verify_rule_report(rule, trials, seed).ok;
}

}  // namespace pathweave
