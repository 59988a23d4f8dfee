#pragma once

// Domain/range checking of path expressions against per-label signatures.
// Violations are reported as data; ill-typed expressions still evaluate (to
// zero paths where the types do not meet).

#include <optional>
#include <string>
#include <vector>

#include "pathweave/expr.hpp"
#include "pathweave/graph_store.hpp"
#include "pathweave/syntax.hpp"

namespace pathweave {

struct SignatureViolation {
  std::string subexpression;
  std::string expected;
  std::string found;
};

// Unknown classes are represented by nullopt (filters are polymorphic).
struct DerivedSignature {
  std::optional<std::string> domain;
  std::optional<std::string> range;
  bool known() const { return domain.has_value() || range.has_value(); }
};

struct SignatureReport {
  bool ok = true;
  DerivedSignature derived;
  std::vector<SignatureViolation> violations;
};

namespace detail {

class SignatureChecker {
 public:
  explicit SignatureChecker(const MultiRelTensor& t) : tensor_(t) {}

  DerivedSignature check(const Expr& e) {
    const Node& n = *e;
    switch (n.kind) {
      case NodeKind::SliceRef: {
        auto it = tensor_.slices().find(n.label);
        if (it == tensor_.slices().end() || !it->second.signature) return {};
        return {it->second.signature->domain, it->second.signature->range};
      }
      case NodeKind::Filter:
      case NodeKind::Meta:
        return {};
      case NodeKind::Transpose: {
        auto s = check(n.children[0]);
        return {s.range, s.domain};
      }
      case NodeKind::Not:
      case NodeKind::Clip:
      case NodeKind::Scale:
        return check(n.children[0]);
      // A full row (column) spans every vertex, so only one side keeps its class.
      case NodeKind::VOut:
        return {check(n.children[0]).domain, std::nullopt};
      case NodeKind::VIn:
        return {std::nullopt, check(n.children[0]).range};
      case NodeKind::MatMul: {
        auto l = check(n.children[0]);
        auto r = check(n.children[1]);
        if (l.range && r.domain && *l.range != *r.domain)
          violations_.push_back({format(e), *l.range, *r.domain});
        return {l.domain, r.range};
      }
      case NodeKind::Hadamard:
      case NodeKind::Add: {
        auto l = check(n.children[0]);
        auto r = check(n.children[1]);
        return {unify(e, "domain", l.domain, r.domain), unify(e, "range", l.range, r.range)};
      }
    }
    return {};
  }

  std::vector<SignatureViolation> take_violations() { return std::move(violations_); }

 private:
  std::optional<std::string> unify(const Expr& e, const char* what,
                                   const std::optional<std::string>& a,
                                   const std::optional<std::string>& b) {
    if (a && b && *a != *b) {
      violations_.push_back({format(e) + " (" + what + ")", *a, *b});
      return a;
    }
    return a ? a : b;
  }

  const MultiRelTensor& tensor_;
  std::vector<SignatureViolation> violations_;
};

}  // namespace detail

// MatMul(l, r) needs range(l) = domain(r); Hadamard and Add need matching
// (domain, range); transpose swaps; vout keeps the domain, vin the range;
// the other unary operations preserve both.
inline SignatureReport check_signatures(const Expr& e, const MultiRelTensor& t) {
  detail::SignatureChecker checker(t);
  SignatureReport report;
  report.derived = checker.check(e);
  report.violations = checker.take_violations();
  report.ok = report.violations.empty();
  return report;
}

}  // namespace pathweave
