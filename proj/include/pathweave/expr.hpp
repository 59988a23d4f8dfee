#pragma once

// Path expressions: immutable trees over slice references, filters and the
// eight operations. Nodes are shared, so copying an Expr is cheap.
//
// Metavariables (`?X`) appear only in rewrite-rule patterns. A pattern may
// also use metavariables in place of a vertex name (`R(?i)`), a scale factor
// (`?k * ?A`) or a vertex threshold (`vout(?Z, ?p)`).

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pathweave {

enum class NodeKind : std::uint8_t {
  SliceRef,
  Filter,
  MatMul,
  Transpose,
  Hadamard,
  Not,
  Clip,
  VOut,
  VIn,
  Scale,
  Add,
  Meta,
};

enum class FilterKind : std::uint8_t { Row, Col, Entry, Identity, Ones, Zeros };

// A vertex name in an expression, or a metavariable standing for one.
struct VertexRef {
  std::string name;
  bool meta = false;
  bool operator==(const VertexRef&) const = default;
};

struct FilterRef {
  FilterKind kind = FilterKind::Zeros;
  VertexRef first;
  VertexRef second;
  bool operator==(const FilterRef&) const = default;
};

struct Node;

class Expr {
 public:
  Expr() = default;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  const Node& operator*() const { return *node_; }
  const Node* operator->() const { return node_.get(); }
  const Node* get() const { return node_.get(); }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<const Node> node_;
};

struct Node {
  NodeKind kind = NodeKind::Meta;
  std::string label;             // SliceRef label or Meta name
  FilterRef filter;              // Filter
  double lambda = 1.0;           // Scale
  std::uint64_t threshold = 0;   // VOut / VIn
  std::string param_meta;        // Scale / VOut / VIn metavariable, if any
  std::vector<Expr> children;
  std::size_t hash = 0;
};

namespace detail {

inline void hash_combine(std::size_t& seed, std::size_t v) {
  seed ^= v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
}

inline std::size_t hash_node(const Node& n) {
  std::size_t h = std::hash<int>{}(static_cast<int>(n.kind));
  hash_combine(h, std::hash<std::string>{}(n.label));
  hash_combine(h, static_cast<std::size_t>(n.filter.kind));
  hash_combine(h, std::hash<std::string>{}(n.filter.first.name));
  hash_combine(h, n.filter.first.meta);
  hash_combine(h, std::hash<std::string>{}(n.filter.second.name));
  hash_combine(h, n.filter.second.meta);
  hash_combine(h, std::hash<double>{}(n.lambda));
  hash_combine(h, std::hash<std::uint64_t>{}(n.threshold));
  hash_combine(h, std::hash<std::string>{}(n.param_meta));
  for (const auto& c : n.children) hash_combine(h, c->hash);
  return h;
}

inline Expr make(Node n) {
  n.hash = hash_node(n);
  return Expr(std::make_shared<const Node>(std::move(n)));
}

}  // namespace detail

// Structural equality.
inline bool operator==(const Expr& a, const Expr& b) {
  if (a.get() == b.get()) return true;
  if (!a || !b) return false;
  const Node& x = *a;
  const Node& y = *b;
  if (x.hash != y.hash || x.kind != y.kind || x.children.size() != y.children.size())
    return false;
  if (x.label != y.label || !(x.filter == y.filter) || x.lambda != y.lambda ||
      x.threshold != y.threshold || x.param_meta != y.param_meta)
    return false;
  for (std::size_t i = 0; i < x.children.size(); ++i)
    if (!(x.children[i] == y.children[i])) return false;
  return true;
}

struct ExprHash {
  std::size_t operator()(const Expr& e) const { return e->hash; }
};

namespace ex {

inline Expr slice(std::string label) {
  Node n;
  n.kind = NodeKind::SliceRef;
  n.label = std::move(label);
  return detail::make(std::move(n));
}

inline Expr filter(FilterRef f) {
  Node n;
  n.kind = NodeKind::Filter;
  n.filter = std::move(f);
  return detail::make(std::move(n));
}

inline Expr identity() { return filter({FilterKind::Identity, {}, {}}); }
inline Expr ones() { return filter({FilterKind::Ones, {}, {}}); }
inline Expr zeros() { return filter({FilterKind::Zeros, {}, {}}); }
inline Expr row(std::string v) { return filter({FilterKind::Row, {std::move(v)}, {}}); }
inline Expr col(std::string v) { return filter({FilterKind::Col, {std::move(v)}, {}}); }
inline Expr entry(std::string i, std::string j) {
  return filter({FilterKind::Entry, {std::move(i)}, {std::move(j)}});
}

inline Expr unary(NodeKind k, Expr e) {
  Node n;
  n.kind = k;
  n.children = {std::move(e)};
  return detail::make(std::move(n));
}

inline Expr binary(NodeKind k, Expr l, Expr r) {
  Node n;
  n.kind = k;
  n.children = {std::move(l), std::move(r)};
  return detail::make(std::move(n));
}

inline Expr matmul(Expr l, Expr r) { return binary(NodeKind::MatMul, std::move(l), std::move(r)); }
inline Expr hadamard(Expr l, Expr r) { return binary(NodeKind::Hadamard, std::move(l), std::move(r)); }
inline Expr add(Expr l, Expr r) { return binary(NodeKind::Add, std::move(l), std::move(r)); }
inline Expr transpose(Expr e) { return unary(NodeKind::Transpose, std::move(e)); }
inline Expr not_(Expr e) { return unary(NodeKind::Not, std::move(e)); }
inline Expr clip(Expr e) { return unary(NodeKind::Clip, std::move(e)); }

inline Expr vout(Expr e, std::uint64_t p = 0, std::string meta = {}) {
  Node n;
  n.kind = NodeKind::VOut;
  n.threshold = p;
  n.param_meta = std::move(meta);
  n.children = {std::move(e)};
  return detail::make(std::move(n));
}

inline Expr vin(Expr e, std::uint64_t p = 0, std::string meta = {}) {
  Node n;
  n.kind = NodeKind::VIn;
  n.threshold = p;
  n.param_meta = std::move(meta);
  n.children = {std::move(e)};
  return detail::make(std::move(n));
}

inline Expr scale(double lambda, Expr e, std::string meta = {}) {
  Node n;
  n.kind = NodeKind::Scale;
  n.lambda = lambda;
  n.param_meta = std::move(meta);
  n.children = {std::move(e)};
  return detail::make(std::move(n));
}

inline Expr meta(std::string name) {
  Node n;
  n.kind = NodeKind::Meta;
  n.label = std::move(name);
  return detail::make(std::move(n));
}

}  // namespace ex

// Copy of `e` with its children replaced.
inline Expr with_children(const Expr& e, std::vector<Expr> children) {
  Node n = *e;
  n.children = std::move(children);
  return detail::make(std::move(n));
}

inline bool is_binary(NodeKind k) {
  return k == NodeKind::MatMul || k == NodeKind::Hadamard || k == NodeKind::Add;
}

inline bool is_filter(const Expr& e, FilterKind k) {
  return e->kind == NodeKind::Filter && e->filter.kind == k;
}

// Syntactic {0,1}-valuedness: slices, filters, not, clip, vertex functions,
// and transposes or Hadamard products of those. Products and sums of
// booleans are not boolean. Conservative: a metavariable is never boolean.
inline bool is_boolean(const Expr& e) {
  switch (e->kind) {
    case NodeKind::SliceRef:
    case NodeKind::Filter:
    case NodeKind::Not:
    case NodeKind::Clip:
    case NodeKind::VOut:
    case NodeKind::VIn:
      return true;
    case NodeKind::Transpose:
      return is_boolean(e->children[0]);
    case NodeKind::Hadamard:
      return is_boolean(e->children[0]) && is_boolean(e->children[1]);
    case NodeKind::Scale:
      return e->param_meta.empty() && e->lambda == 1.0 && is_boolean(e->children[0]);
    default:
      return false;
  }
}

inline std::size_t node_count(const Expr& e) {
  std::size_t c = 1;
  for (const auto& ch : e->children) c += node_count(ch);
  return c;
}

inline std::size_t depth(const Expr& e) {
  std::size_t d = 0;
  for (const auto& ch : e->children) d = std::max(d, depth(ch));
  return d + 1;
}

// Child-index path from the root.
using ExprPath = std::vector<std::size_t>;

inline const Expr& subexpr(const Expr& e, const ExprPath& path) {
  const Expr* cur = &e;
  for (std::size_t i : path) cur = &(*cur)->children.at(i);
  return *cur;
}

inline Expr replace_at(const Expr& e, const ExprPath& path, const Expr& replacement,
                       std::size_t from = 0) {
  if (from == path.size()) return replacement;
  auto children = e->children;
  children.at(path[from]) = replace_at(children[path[from]], path, replacement, from + 1);
  return with_children(e, std::move(children));
}

}  // namespace pathweave
