#pragma once

// Evaluation of path expressions against a tensor.
//
// plan() lowers an expression to a list of steps: identical subtrees are
// computed once, row/column selecting filters are pushed below products,
// clip(a + b) is fused into a support union, and products of integer-valued
// chains are re-associated by dynamic programming over nnz profiles. Real
// chains keep their written association so results stay bit-identical to
// naive recursive evaluation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "pathweave/error.hpp"
#include "pathweave/expr.hpp"
#include "pathweave/graph_store.hpp"
#include "pathweave/kernels.hpp"
#include "pathweave/path_matrix.hpp"
#include "pathweave/syntax.hpp"

namespace pathweave {

// Matrices bound to pattern metavariables (`?X`).
using Bindings = std::map<std::string, PathMatrix>;

enum class StepOp : std::uint8_t {
  Slice,
  Filter,
  Bound,
  MatMul,
  Transpose,
  Hadamard,
  Not,
  Clip,
  ClipAdd,
  VOut,
  VIn,
  Scale,
  Add,
};

inline const char* to_string(StepOp op) {
  switch (op) {
    case StepOp::Slice: return "slice";
    case StepOp::Filter: return "filter";
    case StepOp::Bound: return "bound";
    case StepOp::MatMul: return "matmul";
    case StepOp::Transpose: return "transpose";
    case StepOp::Hadamard: return "hadamard";
    case StepOp::Not: return "not";
    case StepOp::Clip: return "clip";
    case StepOp::ClipAdd: return "clip-add";
    case StepOp::VOut: return "vout";
    case StepOp::VIn: return "vin";
    case StepOp::Scale: return "scale";
    case StepOp::Add: return "add";
  }
  return "?";
}

struct PlanStep {
  StepOp op = StepOp::Filter;
  std::vector<std::size_t> inputs;
  std::string label;  // slice label or metavariable name
  FilterSpec filter;
  double lambda = 1.0;
  std::uint64_t threshold = 0;
  Repr repr = Repr::Sparse;     // predicted representation
  bool integral = true;         // predicted integer-valued
  double est_nnz = 0.0;
  double est_flops = 0.0;
};

struct EvalPlan {
  std::size_t n = 0;
  std::vector<PlanStep> steps;
  std::size_t root = 0;
  double estimated_flops = 0.0;
  // Same estimate with every product chain associated left to right.
  double naive_flops = 0.0;

  std::string describe() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const auto& s = steps[i];
      os << '%' << i << " = " << to_string(s.op);
      if (s.op == StepOp::Slice || s.op == StepOp::Bound) os << ' ' << s.label;
      if (s.op == StepOp::Scale) os << ' ' << s.lambda;
      if (s.op == StepOp::VOut || s.op == StepOp::VIn) os << " p=" << s.threshold;
      for (auto in : s.inputs) os << " %" << in;
      os << "  [" << to_string(s.repr) << ", nnz~" << s.est_nnz << ", flops~" << s.est_flops
         << "]\n";
    }
    os << "estimated flops " << estimated_flops << " (left-assoc " << naive_flops << ")\n";
    return os.str();
  }
};

namespace detail {

inline bool is_row_selector(const Expr& e) {
  return is_filter(e, FilterKind::Row) || e->kind == NodeKind::VOut;
}

inline bool is_col_selector(const Expr& e) {
  return is_filter(e, FilterKind::Col) || e->kind == NodeKind::VIn;
}

// (A . B) & F -> (A & F) . B for row selectors F, A . (B & F) for column
// selectors. Both sides compute identical entries.
inline Expr push_filters(const Expr& e) {
  std::vector<Expr> kids;
  kids.reserve(e->children.size());
  for (const auto& c : e->children) kids.push_back(push_filters(c));
  Expr cur = kids.empty() ? e : with_children(e, kids);
  if (cur->kind != NodeKind::Hadamard) return cur;
  for (int side = 0; side < 2; ++side) {
    const Expr& prod = cur->children[side];
    const Expr& f = cur->children[1 - side];
    if (prod->kind != NodeKind::MatMul) continue;
    auto combine = [&](const Expr& x) {
      return side == 0 ? ex::hadamard(x, f) : ex::hadamard(f, x);
    };
    if (is_row_selector(f))
      return ex::matmul(push_filters(combine(prod->children[0])), prod->children[1]);
    if (is_col_selector(f))
      return ex::matmul(prod->children[0], push_filters(combine(prod->children[1])));
  }
  return cur;
}

struct Profile {
  std::vector<double> rows;
  std::vector<double> cols;
  double nnz = 0.0;
};

inline Profile profile_of(const PathMatrix& m) {
  Profile p;
  std::size_t n = m.n();
  p.rows.assign(n, 0.0);
  p.cols.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) p.rows[i] = static_cast<double>(m.row_stored(i));
  for (VertexId c : m.cols()) p.cols[c] += 1.0;
  if (m.is_complement()) {
    for (auto& r : p.rows) r = static_cast<double>(n) - r;
    for (auto& c : p.cols) c = static_cast<double>(n) - c;
  }
  p.nnz = static_cast<double>(m.nnz());
  return p;
}

inline double product_flops(const std::vector<double>& left_cols,
                            const std::vector<double>& right_rows) {
  double f = 0.0;
  for (std::size_t l = 0; l < left_cols.size(); ++l) f += left_cols[l] * right_rows[l];
  return f;
}

class Planner {
 public:
  Planner(const MultiRelTensor* tensor, const Bindings* bindings, std::size_t n)
      : tensor_(tensor), bindings_(bindings), n_(n) {
    plan_.n = n;
  }

  EvalPlan build(const Expr& e) {
    plan_.root = lower(push_filters(e));
    for (const auto& s : plan_.steps) plan_.estimated_flops += s.est_flops;
    plan_.naive_flops = plan_.estimated_flops + naive_excess_;
    return std::move(plan_);
  }

 private:
  double nd() const { return static_cast<double>(n_); }

  VertexId resolve(const VertexRef& v) const {
    if (v.meta) throw DomainError("unbound vertex metavariable ?" + v.name);
    if (!tensor_) throw DomainError("vertex '" + v.name + "' cannot be resolved without a tensor");
    auto id = tensor_->vertices().find(v.name);
    if (!id) throw DomainError("unknown vertex '" + v.name + "'");
    return *id;
  }

  std::size_t emit(PlanStep s, Profile p) {
    s.est_nnz = p.nnz;
    plan_.steps.push_back(std::move(s));
    profiles_.push_back(std::move(p));
    return plan_.steps.size() - 1;
  }

  const PlanStep& step(std::size_t i) const { return plan_.steps[i]; }
  const Profile& prof(std::size_t i) const { return profiles_[i]; }

  std::size_t lower(const Expr& e) {
    if (auto it = memo_.find(e); it != memo_.end()) return it->second;
    std::size_t id = lower_uncached(e);
    memo_.emplace(e, id);
    return id;
  }

  std::size_t lower_leaf_matrix(PlanStep s, const PathMatrix& m) {
    s.repr = m.repr();
    s.integral = m.is_integral();
    s.est_flops = 0.0;
    return emit(std::move(s), profile_of(m));
  }

  std::size_t lower_uncached(const Expr& e) {
    const Node& node = *e;
    PlanStep s;
    switch (node.kind) {
      case NodeKind::SliceRef: {
        if (!tensor_) throw DomainError("slice '" + node.label + "' needs a tensor");
        const auto& slice = tensor_->slice(node.label);
        s.op = StepOp::Slice;
        s.label = node.label;
        Profile p;
        p.rows.assign(n_, 0.0);
        p.cols.assign(n_, 0.0);
        for (auto [i, j] : slice.pairs) {
          p.rows[i] += 1.0;
          p.cols[j] += 1.0;
        }
        p.nnz = static_cast<double>(slice.pairs.size());
        s.repr = Repr::Sparse;
        return emit(std::move(s), std::move(p));
      }
      case NodeKind::Filter: {
        s.op = StepOp::Filter;
        const auto& f = node.filter;
        switch (f.kind) {
          case FilterKind::Row: s.filter = FilterSpec::row(resolve(f.first)); break;
          case FilterKind::Col: s.filter = FilterSpec::col(resolve(f.first)); break;
          case FilterKind::Entry:
            s.filter = FilterSpec::entry(resolve(f.first), resolve(f.second));
            break;
          case FilterKind::Identity: s.filter = FilterSpec::identity(); break;
          case FilterKind::Ones: s.filter = FilterSpec::ones(); break;
          case FilterKind::Zeros: s.filter = FilterSpec::zeros(); break;
        }
        return lower_leaf_matrix(std::move(s), materialize_filter(s.filter, n_));
      }
      case NodeKind::Meta: {
        if (!bindings_) throw DomainError("unbound metavariable ?" + node.label);
        auto it = bindings_->find(node.label);
        if (it == bindings_->end()) throw DomainError("unbound metavariable ?" + node.label);
        if (it->second.n() != n_)
          throw DomainError("metavariable ?" + node.label + " has the wrong order");
        s.op = StepOp::Bound;
        s.label = node.label;
        return lower_leaf_matrix(std::move(s), it->second);
      }
      case NodeKind::MatMul:
        return lower_chain(e);
      case NodeKind::Transpose: {
        std::size_t a = lower(node.children[0]);
        s.op = StepOp::Transpose;
        s.inputs = {a};
        s.repr = step(a).repr;
        s.integral = step(a).integral;
        s.est_flops = prof(a).nnz;
        Profile p{prof(a).cols, prof(a).rows, prof(a).nnz};
        return emit(std::move(s), std::move(p));
      }
      case NodeKind::Hadamard: {
        std::size_t a = lower(node.children[0]);
        std::size_t b = lower(node.children[1]);
        s.op = StepOp::Hadamard;
        s.inputs = {a, b};
        bool both_comp = step(a).repr == Repr::BoolComplement &&
                         step(b).repr == Repr::BoolComplement;
        s.repr = both_comp ? Repr::BoolComplement : Repr::Sparse;
        s.integral = step(a).integral && step(b).integral;
        Profile p;
        p.rows.resize(n_);
        p.cols.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
          p.rows[i] = std::min(prof(a).rows[i], prof(b).rows[i]);
          p.cols[i] = std::min(prof(a).cols[i], prof(b).cols[i]);
        }
        p.nnz = std::min(prof(a).nnz, prof(b).nnz);
        s.est_flops = std::min(prof(a).nnz, prof(b).nnz);
        return emit(std::move(s), std::move(p));
      }
      case NodeKind::Add: {
        std::size_t a = lower(node.children[0]);
        std::size_t b = lower(node.children[1]);
        s.op = StepOp::Add;
        s.inputs = {a, b};
        s.repr = Repr::Sparse;
        s.integral = step(a).integral && step(b).integral;
        return emit_sum(std::move(s), a, b);
      }
      case NodeKind::Clip: {
        const Expr& inner = node.children[0];
        if (inner->kind == NodeKind::Add) {
          std::size_t a = lower(inner->children[0]);
          std::size_t b = lower(inner->children[1]);
          s.op = StepOp::ClipAdd;
          s.inputs = {a, b};
          bool any_comp = step(a).repr == Repr::BoolComplement ||
                          step(b).repr == Repr::BoolComplement;
          s.repr = any_comp ? Repr::BoolComplement : Repr::Sparse;
          return emit_sum(std::move(s), a, b);
        }
        std::size_t a = lower(inner);
        s.op = StepOp::Clip;
        s.inputs = {a};
        s.repr = step(a).repr;
        s.est_flops = prof(a).nnz;
        return emit(std::move(s), prof(a));
      }
      case NodeKind::Not: {
        std::size_t a = lower(node.children[0]);
        s.op = StepOp::Not;
        s.inputs = {a};
        s.repr = step(a).repr == Repr::Sparse ? Repr::BoolComplement : Repr::Sparse;
        Profile p = prof(a);
        for (auto& r : p.rows) r = nd() - r;
        for (auto& c : p.cols) c = nd() - c;
        p.nnz = nd() * nd() - p.nnz;
        s.est_flops = prof(a).nnz;
        return emit(std::move(s), std::move(p));
      }
      case NodeKind::VOut:
      case NodeKind::VIn: {
        if (!node.param_meta.empty())
          throw DomainError("unbound threshold metavariable ?" + node.param_meta);
        std::size_t a = lower(node.children[0]);
        bool out = node.kind == NodeKind::VOut;
        s.op = out ? StepOp::VOut : StepOp::VIn;
        s.inputs = {a};
        s.threshold = node.threshold;
        const auto& src = out ? prof(a).rows : prof(a).cols;
        double selected = 0.0;
        std::vector<double> full(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i)
          if (src[i] > 0.0) {
            full[i] = nd();
            selected += 1.0;
          }
        Profile p;
        p.rows = out ? full : std::vector<double>(n_, selected);
        p.cols = out ? std::vector<double>(n_, selected) : full;
        p.nnz = selected * nd();
        s.repr = 2.0 * selected > nd() ? Repr::BoolComplement : Repr::Sparse;
        s.est_flops = prof(a).nnz + p.nnz;
        return emit(std::move(s), std::move(p));
      }
      case NodeKind::Scale: {
        if (!node.param_meta.empty())
          throw DomainError("unbound scalar metavariable ?" + node.param_meta);
        std::size_t a = lower(node.children[0]);
        s.op = StepOp::Scale;
        s.inputs = {a};
        s.lambda = node.lambda;
        s.repr = node.lambda == 1.0 ? step(a).repr : Repr::Sparse;
        s.integral = step(a).integral && node.lambda == std::floor(node.lambda);
        s.est_flops = prof(a).nnz;
        return emit(std::move(s), prof(a));
      }
    }
    throw DomainError("unsupported expression node");
  }

  std::size_t emit_sum(PlanStep s, std::size_t a, std::size_t b) {
    Profile p;
    p.rows.resize(n_);
    p.cols.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      p.rows[i] = std::min(nd(), prof(a).rows[i] + prof(b).rows[i]);
      p.cols[i] = std::min(nd(), prof(a).cols[i] + prof(b).cols[i]);
    }
    p.nnz = std::min(nd() * nd(), prof(a).nnz + prof(b).nnz);
    s.est_flops = prof(a).nnz + prof(b).nnz;
    return emit(std::move(s), std::move(p));
  }

  void flatten_chain(const Expr& e, std::vector<Expr>& out) {
    if (e->kind == NodeKind::MatMul) {
      flatten_chain(e->children[0], out);
      flatten_chain(e->children[1], out);
    } else {
      out.push_back(e);
    }
  }

  std::size_t emit_product(std::size_t a, std::size_t b, Profile p, double flops) {
    PlanStep s;
    s.op = StepOp::MatMul;
    s.inputs = {a, b};
    s.repr = Repr::Sparse;
    s.integral = step(a).integral && step(b).integral;
    s.est_flops = flops;
    return emit(std::move(s), std::move(p));
  }

  // Product of two profiles: exact flop count from the shared dimension,
  // fan-out scaled row/column counts for the result.
  Profile compose(const Profile& a, const Profile& b, double& flops) const {
    flops = product_flops(a.cols, b.rows);
    Profile p;
    p.rows.resize(n_);
    p.cols.resize(n_);
    double row_fan = a.nnz > 0.0 ? flops / a.nnz : 0.0;
    double col_fan = b.nnz > 0.0 ? flops / b.nnz : 0.0;
    double rs = 0.0, cs = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      p.rows[i] = std::min(nd(), a.rows[i] * row_fan);
      p.cols[i] = std::min(nd(), b.cols[i] * col_fan);
      rs += p.rows[i];
      cs += p.cols[i];
    }
    p.nnz = std::min({flops, rs, cs, nd() * nd()});
    return p;
  }

  std::size_t lower_chain(const Expr& e) {
    std::vector<Expr> factors;
    flatten_chain(e, factors);
    std::vector<std::size_t> leaves;
    for (const auto& f : factors) leaves.push_back(lower(f));
    bool integral = std::all_of(leaves.begin(), leaves.end(),
                                [&](std::size_t id) { return step(id).integral; });
    const std::size_t k = leaves.size();
    if (!integral || k > kMaxChain) {
      // Keep the written association.
      std::size_t a = lower(e->children[0]);
      std::size_t b = lower(e->children[1]);
      double flops = 0.0;
      Profile p = compose(prof(a), prof(b), flops);
      return emit_product(a, b, std::move(p), flops);
    }

    // seg[i][j]: left-assoc profile of factors i..j, independent of the split
    // so every association is costed against the same estimates.
    std::vector<std::vector<Profile>> seg(k, std::vector<Profile>(k));
    for (std::size_t i = 0; i < k; ++i) {
      seg[i][i] = prof(leaves[i]);
      for (std::size_t j = i + 1; j < k; ++j) {
        double f = 0.0;
        seg[i][j] = compose(seg[i][j - 1], prof(leaves[j]), f);
      }
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> cost(k, std::vector<double>(k, 0.0));
    std::vector<std::vector<std::size_t>> split(k, std::vector<std::size_t>(k, 0));
    for (std::size_t len = 2; len <= k; ++len) {
      for (std::size_t i = 0; i + len <= k; ++i) {
        std::size_t j = i + len - 1;
        cost[i][j] = inf;
        // Ties prefer the rightmost split, i.e. left association.
        for (std::size_t s = i; s < j; ++s) {
          double c = cost[i][s] + cost[s + 1][j] +
                     product_flops(seg[i][s].cols, seg[s + 1][j].rows);
          if (c <= cost[i][j]) {
            cost[i][j] = c;
            split[i][j] = s;
          }
        }
      }
    }
    double left_assoc = 0.0;
    for (std::size_t j = 1; j < k; ++j)
      left_assoc += product_flops(seg[0][j - 1].cols, seg[j][j].rows);
    naive_excess_ += left_assoc - cost[0][k - 1];
    return emit_segment(leaves, seg, split, 0, k - 1);
  }

  std::size_t emit_segment(const std::vector<std::size_t>& leaves,
                           const std::vector<std::vector<Profile>>& seg,
                           const std::vector<std::vector<std::size_t>>& split, std::size_t i,
                           std::size_t j) {
    if (i == j) return leaves[i];
    std::size_t s = split[i][j];
    std::size_t a = emit_segment(leaves, seg, split, i, s);
    std::size_t b = emit_segment(leaves, seg, split, s + 1, j);
    double flops = product_flops(seg[i][s].cols, seg[s + 1][j].rows);
    return emit_product(a, b, seg[i][j], flops);
  }

  static constexpr std::size_t kMaxChain = 16;

  const MultiRelTensor* tensor_;
  const Bindings* bindings_;
  std::size_t n_;
  EvalPlan plan_;
  std::vector<Profile> profiles_;
  std::unordered_map<Expr, std::size_t, ExprHash> memo_;
  double naive_excess_ = 0.0;
};

inline std::size_t order_of(const MultiRelTensor* t, const Bindings* b) {
  if (t) return t->n();
  if (b && !b->empty()) return b->begin()->second.n();
  throw DomainError("cannot determine matrix order without a tensor or bindings");
}

}  // namespace detail

inline EvalPlan plan(const Expr& e, const MultiRelTensor& t, const Bindings* bindings = nullptr) {
  return detail::Planner(&t, bindings, t.n()).build(e);
}

inline EvalPlan plan(const Expr& e, const Bindings& bindings) {
  return detail::Planner(nullptr, &bindings, detail::order_of(nullptr, &bindings)).build(e);
}

inline PathMatrix execute(const EvalPlan& p, const MultiRelTensor* t,
                          const Bindings* bindings = nullptr) {
  std::vector<std::size_t> uses(p.steps.size(), 0);
  for (const auto& s : p.steps)
    for (auto in : s.inputs) ++uses[in];
  std::vector<std::optional<PathMatrix>> values(p.steps.size());
  for (std::size_t i = 0; i < p.steps.size(); ++i) {
    const auto& s = p.steps[i];
    auto arg = [&](std::size_t k) -> const PathMatrix& { return *values[s.inputs[k]]; };
    PathMatrix out;
    switch (s.op) {
      case StepOp::Slice: out = slice_matrix(*t, s.label); break;
      case StepOp::Filter: out = materialize_filter(s.filter, p.n); break;
      case StepOp::Bound: out = bindings->at(s.label); break;
      case StepOp::MatMul: out = matmul(arg(0), arg(1)); break;
      case StepOp::Transpose: out = transpose(arg(0)); break;
      case StepOp::Hadamard: out = hadamard(arg(0), arg(1)); break;
      case StepOp::Not: out = not_(arg(0)); break;
      case StepOp::Clip: out = clip(arg(0)); break;
      case StepOp::ClipAdd: out = clip_add(arg(0), arg(1)); break;
      case StepOp::VOut: out = vertex_out(arg(0), s.threshold); break;
      case StepOp::VIn: out = vertex_in(arg(0), s.threshold); break;
      case StepOp::Scale: out = scale(arg(0), s.lambda); break;
      case StepOp::Add: out = add(arg(0), arg(1)); break;
    }
    values[i] = std::move(out);
    for (auto in : s.inputs)
      if (--uses[in] == 0 && in != p.root) values[in].reset();
  }
  return std::move(*values[p.root]);
}

// Evaluates `e` through the planner.
inline PathMatrix evaluate(const Expr& e, const MultiRelTensor& t,
                           const Bindings* bindings = nullptr) {
  return execute(plan(e, t, bindings), &t, bindings);
}

inline PathMatrix evaluate(const Expr& e, const Bindings& bindings) {
  return execute(plan(e, bindings), nullptr, &bindings);
}

// Direct recursive evaluation following the tree as written: no sharing, no
// fusion, no re-association. Reference semantics for the planner.
inline PathMatrix evaluate_naive(const Expr& e, const MultiRelTensor* t, const Bindings* bindings,
                                 std::size_t n) {
  const Node& node = *e;
  auto child = [&](std::size_t k) { return evaluate_naive(node.children[k], t, bindings, n); };
  auto resolve = [&](const VertexRef& v) -> VertexId {
    if (v.meta || !t) throw DomainError("cannot resolve vertex '" + v.name + "'");
    auto id = t->vertices().find(v.name);
    if (!id) throw DomainError("unknown vertex '" + v.name + "'");
    return *id;
  };
  switch (node.kind) {
    case NodeKind::SliceRef:
      if (!t) throw DomainError("slice '" + node.label + "' needs a tensor");
      return slice_matrix(*t, node.label);
    case NodeKind::Filter: {
      const auto& f = node.filter;
      FilterSpec spec;
      switch (f.kind) {
        case FilterKind::Row: spec = FilterSpec::row(resolve(f.first)); break;
        case FilterKind::Col: spec = FilterSpec::col(resolve(f.first)); break;
        case FilterKind::Entry: spec = FilterSpec::entry(resolve(f.first), resolve(f.second)); break;
        case FilterKind::Identity: spec = FilterSpec::identity(); break;
        case FilterKind::Ones: spec = FilterSpec::ones(); break;
        case FilterKind::Zeros: spec = FilterSpec::zeros(); break;
      }
      return materialize_filter(spec, n);
    }
    case NodeKind::Meta: {
      if (!bindings || !bindings->count(node.label))
        throw DomainError("unbound metavariable ?" + node.label);
      return bindings->at(node.label);
    }
    case NodeKind::MatMul: return matmul(child(0), child(1));
    case NodeKind::Transpose: return transpose(child(0));
    case NodeKind::Hadamard: return hadamard(child(0), child(1));
    case NodeKind::Not: return not_(child(0));
    case NodeKind::Clip: return clip(child(0));
    case NodeKind::VOut: return vertex_out(child(0), node.threshold);
    case NodeKind::VIn: return vertex_in(child(0), node.threshold);
    case NodeKind::Scale: return scale(child(0), node.lambda);
    case NodeKind::Add: return add(child(0), child(1));
  }
  throw DomainError("unsupported expression node");
}

inline PathMatrix evaluate_naive(const Expr& e, const MultiRelTensor& t) {
  return evaluate_naive(e, &t, nullptr, t.n());
}

}  // namespace pathweave
