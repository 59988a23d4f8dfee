#pragma once

// Concrete syntax for path expressions.
//
//   expr    := had { '+' had }                      merge (loosest)
//   had     := mul { '&' mul }                      Hadamard filter
//   mul     := unary { '.' unary }                  matrix product
//   unary   := NUMBER '*' unary | postfix           weight
//   postfix := primary { '\'' }                     transpose
//   primary := A[label] | I | ONES | ZERO | R(v) | C(v) | E(v,v)
//            | not(e) | clip(e) | vout(e[,p]) | vin(e[,p]) | '(' e ')'
//
// All binary operators are left-associative. Labels and vertex names are
// bare words or double-quoted strings. `#` starts a comment.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <system_error>

#include "pathweave/error.hpp"
#include "pathweave/expr.hpp"

namespace pathweave {

namespace detail {

inline bool is_word_char(char c) {
  auto u = static_cast<unsigned char>(c);
  if (u <= 0x20 || u == 0x7f) return false;
  switch (c) {
    case '[': case ']': case '(': case ')': case ',': case '\'': case '&':
    case '+': case '.': case '*': case '#': case '"': case '?': case ';':
    case '=': case '\\':
      return false;
    default:
      return true;
  }
}

inline bool is_ident_start(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}

inline bool is_ident_char(char c) {
  return is_ident_start(c) || (c >= '0' && c <= '9');
}

inline bool is_keyword(std::string_view w) {
  return w == "A" || w == "I" || w == "ONES" || w == "ZERO" || w == "R" || w == "C" ||
         w == "E" || w == "not" || w == "clip" || w == "vout" || w == "vin" || w == "let";
}

class Parser {
 public:
  Parser(std::string_view text, bool pattern_mode)
      : text_(text), pattern_(pattern_mode) {}

  Expr parse_single() {
    Expr e = parse_expr();
    skip_ws();
    if (!at_end()) fail("unexpected '" + std::string(1, peek()) + "'");
    return e;
  }

  Expr parse_program() {
    std::optional<Expr> result;
    while (true) {
      skip_ws();
      if (at_end()) break;
      if (at_let()) {
        pos_ += 3;
        skip_ws();
        std::size_t name_pos = pos_;
        std::string name = read_ident();
        if (name.empty()) fail("expected binding name after 'let'");
        if (is_keyword(name)) fail_at(name_pos, "'" + name + "' is reserved");
        expect('=');
        Expr value = parse_expr();
        bindings_[name] = value;
        result = value;
        skip_ws();
        if (!at_end() && peek() == ';') ++pos_;
        continue;
      }
      Expr e = parse_expr();
      skip_ws();
      if (!at_end() && peek() == ';') ++pos_;
      skip_ws();
      if (!at_end()) fail("unexpected '" + std::string(1, peek()) + "'");
      result = e;
      break;
    }
    if (!result) fail("empty expression");
    return *result;
  }

 private:
  static constexpr std::size_t kMaxDepth = 200;

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(pos_, msg); }
  [[noreturn]] void fail_at(std::size_t at, const std::string& msg) const {
    throw ParseError(at, msg);
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  void skip_ws() {
    while (!at_end()) {
      char c = peek();
      if (c == '#') {
        while (!at_end() && peek() != '\n') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  bool at_let() const {
    if (text_.compare(pos_, 3, "let") != 0) return false;
    std::size_t after = pos_ + 3;
    return after < text_.size() && !is_ident_char(text_[after]);
  }

  bool accept(char c) {
    skip_ws();
    if (!at_end() && peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    skip_ws();
    if (at_end()) fail(std::string("expected '") + c + "' but reached end of input");
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string read_ident() {
    std::size_t start = pos_;
    if (at_end() || !is_ident_start(peek())) return {};
    while (!at_end() && is_ident_char(peek())) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  // Bare word or quoted string.
  std::string read_word(const char* what) {
    skip_ws();
    if (at_end()) fail(std::string("expected ") + what + " but reached end of input");
    if (peek() == '"') {
      std::size_t start = pos_++;
      std::string out;
      while (true) {
        if (at_end()) fail_at(start, "unterminated string");
        char c = text_[pos_++];
        if (c == '"') break;
        if (c == '\\') {
          if (at_end()) fail_at(start, "unterminated string");
          c = text_[pos_++];
        }
        out.push_back(c);
      }
      return out;
    }
    std::size_t start = pos_;
    while (!at_end() && is_word_char(peek())) ++pos_;
    if (pos_ == start) fail(std::string("expected ") + what);
    return std::string(text_.substr(start, pos_ - start));
  }

  VertexRef read_vertex() {
    skip_ws();
    if (!at_end() && peek() == '?') {
      if (!pattern_) fail("metavariables are only allowed in patterns");
      ++pos_;
      std::string name = read_ident();
      if (name.empty()) fail("expected metavariable name");
      return {name, true};
    }
    return {read_word("vertex name"), false};
  }

  struct DepthGuard {
    Parser& p;
    explicit DepthGuard(Parser& parser) : p(parser) {
      if (++p.depth_ > kMaxDepth) p.fail("expression nested too deeply");
    }
    ~DepthGuard() { --p.depth_; }
  };

  Expr parse_expr() {
    DepthGuard guard(*this);
    Expr lhs = parse_had();
    while (accept('+')) lhs = ex::add(lhs, parse_had());
    return lhs;
  }

  Expr parse_had() {
    Expr lhs = parse_mul();
    while (accept('&')) lhs = ex::hadamard(lhs, parse_mul());
    return lhs;
  }

  Expr parse_mul() {
    Expr lhs = parse_unary();
    while (accept('.')) lhs = ex::matmul(lhs, parse_unary());
    return lhs;
  }

  Expr parse_unary() {
    DepthGuard guard(*this);
    skip_ws();
    if (at_end()) fail("expected an expression but reached end of input");
    char c = peek();
    if (c >= '0' && c <= '9') {
      std::size_t start = pos_;
      double lambda = read_number();
      if (!std::isfinite(lambda)) fail_at(start, "scale factor must be finite");
      expect('*');
      return ex::scale(lambda, parse_unary());
    }
    if (c == '?' && pattern_) {
      // `?k * e` is a scalar metavariable; a bare `?X` is an expression one.
      std::size_t save = pos_;
      ++pos_;
      std::string name = read_ident();
      if (name.empty()) fail("expected metavariable name");
      skip_ws();
      if (!at_end() && peek() == '*') {
        ++pos_;
        return ex::scale(1.0, parse_unary(), name);
      }
      pos_ = save;
    }
    return parse_postfix();
  }

  double read_number() {
    std::size_t start = pos_;
    while (!at_end() && peek() >= '0' && peek() <= '9') ++pos_;
    if (!at_end() && peek() == '.' && pos_ + 1 < text_.size() && text_[pos_ + 1] >= '0' &&
        text_[pos_ + 1] <= '9') {
      ++pos_;
      while (!at_end() && peek() >= '0' && peek() <= '9') ++pos_;
    }
    if (!at_end() && (peek() == 'e' || peek() == 'E')) {
      std::size_t save = pos_++;
      if (!at_end() && (peek() == '+' || peek() == '-')) ++pos_;
      if (at_end() || peek() < '0' || peek() > '9') {
        pos_ = save;
      } else {
        while (!at_end() && peek() >= '0' && peek() <= '9') ++pos_;
      }
    }
    double v = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != text_.data() + pos_)
      fail_at(start, "malformed number");
    return v;
  }

  std::uint64_t read_threshold(std::string& meta) {
    skip_ws();
    if (!at_end() && peek() == '?') {
      if (!pattern_) fail("metavariables are only allowed in patterns");
      ++pos_;
      meta = read_ident();
      if (meta.empty()) fail("expected metavariable name");
      return 0;
    }
    std::size_t start = pos_;
    while (!at_end() && peek() >= '0' && peek() <= '9') ++pos_;
    if (pos_ == start) fail("expected a nonnegative integer threshold");
    std::uint64_t v = 0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc()) fail_at(start, "threshold out of range");
    return v;
  }

  Expr parse_postfix() {
    Expr e = parse_primary();
    while (accept('\'')) e = ex::transpose(e);
    return e;
  }

  Expr parse_primary() {
    skip_ws();
    if (at_end()) fail("expected an expression but reached end of input");
    std::size_t start = pos_;
    char c = peek();
    if (c == '(') {
      ++pos_;
      Expr e = parse_expr();
      expect(')');
      return e;
    }
    if (c == '?') {
      if (!pattern_) fail("metavariables are only allowed in patterns");
      ++pos_;
      std::string name = read_ident();
      if (name.empty()) fail("expected metavariable name");
      return ex::meta(name);
    }
    std::string word = read_ident();
    if (word.empty()) fail("unexpected '" + std::string(1, c) + "'");
    skip_ws();
    bool call = !at_end() && peek() == '(';
    if (word == "A" && !at_end() && peek() == '[') {
      ++pos_;
      std::string label = read_word("slice label");
      expect(']');
      return ex::slice(label);
    }
    if (word == "I") return ex::identity();
    if (word == "ONES") return ex::ones();
    if (word == "ZERO") return ex::zeros();
    if (call && (word == "R" || word == "C")) {
      ++pos_;
      VertexRef v = read_vertex();
      expect(')');
      return ex::filter({word == "R" ? FilterKind::Row : FilterKind::Col, v, {}});
    }
    if (call && word == "E") {
      ++pos_;
      VertexRef a = read_vertex();
      expect(',');
      VertexRef b = read_vertex();
      expect(')');
      return ex::filter({FilterKind::Entry, a, b});
    }
    if (call && (word == "not" || word == "clip")) {
      ++pos_;
      Expr e = parse_expr();
      expect(')');
      return word == "not" ? ex::not_(e) : ex::clip(e);
    }
    if (call && (word == "vout" || word == "vin")) {
      ++pos_;
      Expr e = parse_expr();
      std::uint64_t p = 0;
      std::string meta;
      if (accept(',')) p = read_threshold(meta);
      expect(')');
      return word == "vout" ? ex::vout(e, p, meta) : ex::vin(e, p, meta);
    }
    if (auto it = bindings_.find(word); it != bindings_.end() && !call) return it->second;
    if (call) fail_at(start, "unknown function '" + word + "'");
    fail_at(start, "unknown name '" + word + "'");
  }

  std::string_view text_;
  bool pattern_;
  std::size_t pos_ = 0;
  std::size_t depth_ = 0;
  std::map<std::string, Expr> bindings_;
};

}  // namespace detail

// Parses a single path expression.
inline Expr parse(std::string_view text) {
  return detail::Parser(text, false).parse_single();
}

// Parses an expression file: `let name = expr` bindings followed by an
// optional final expression. Without a final expression the last binding is
// the result.
inline Expr parse_program(std::string_view text) {
  return detail::Parser(text, false).parse_program();
}

// Parses a rewrite-rule pattern (metavariables allowed).
inline Expr parse_pattern(std::string_view text) {
  return detail::Parser(text, true).parse_single();
}

namespace detail {

inline std::string quote_word(const std::string& s) {
  bool bare = !s.empty();
  for (char c : s) bare = bare && is_word_char(c);
  if (bare) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string format_vertex(const VertexRef& v) {
  return v.meta ? "?" + v.name : quote_word(v.name);
}

inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline int precedence(const Expr& e) {
  switch (e->kind) {
    case NodeKind::Add: return 1;
    case NodeKind::Hadamard: return 2;
    case NodeKind::MatMul: return 3;
    case NodeKind::Scale: return 4;
    default: return 5;
  }
}

}  // namespace detail

// Inverse of parse: parse(format(e)) == e.
inline std::string format(const Expr& e) {
  using detail::precedence;
  auto wrap = [](const Expr& child, bool parens) {
    return parens ? "(" + format(child) + ")" : format(child);
  };
  const Node& n = *e;
  switch (n.kind) {
    case NodeKind::SliceRef:
      return "A[" + detail::quote_word(n.label) + "]";
    case NodeKind::Filter:
      switch (n.filter.kind) {
        case FilterKind::Identity: return "I";
        case FilterKind::Ones: return "ONES";
        case FilterKind::Zeros: return "ZERO";
        case FilterKind::Row: return "R(" + detail::format_vertex(n.filter.first) + ")";
        case FilterKind::Col: return "C(" + detail::format_vertex(n.filter.first) + ")";
        case FilterKind::Entry:
          return "E(" + detail::format_vertex(n.filter.first) + "," +
                 detail::format_vertex(n.filter.second) + ")";
      }
      return "?";
    case NodeKind::Meta:
      return "?" + n.label;
    case NodeKind::Transpose:
      return wrap(n.children[0], precedence(n.children[0]) < 5) + "'";
    case NodeKind::Not:
      return "not(" + format(n.children[0]) + ")";
    case NodeKind::Clip:
      return "clip(" + format(n.children[0]) + ")";
    case NodeKind::VOut:
    case NodeKind::VIn: {
      std::string out = n.kind == NodeKind::VOut ? "vout(" : "vin(";
      out += format(n.children[0]);
      if (!n.param_meta.empty()) {
        out += ", ?" + n.param_meta;
      } else if (n.threshold != 0) {
        out += ", " + std::to_string(n.threshold);
      }
      return out + ")";
    }
    case NodeKind::Scale: {
      std::string factor =
          n.param_meta.empty() ? detail::format_number(n.lambda) : "?" + n.param_meta;
      return factor + " * " + wrap(n.children[0], precedence(n.children[0]) < 4);
    }
    case NodeKind::MatMul:
    case NodeKind::Hadamard:
    case NodeKind::Add: {
      const char* op = n.kind == NodeKind::MatMul ? " . " : n.kind == NodeKind::Hadamard ? " & " : " + ";
      int p = precedence(e);
      return wrap(n.children[0], precedence(n.children[0]) < p) + op +
             wrap(n.children[1], precedence(n.children[1]) <= p);
    }
  }
  return "?";
}

}  // namespace pathweave
