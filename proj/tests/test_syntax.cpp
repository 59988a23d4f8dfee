#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "pathweave/syntax.hpp"
#include "support/generators.hpp"

using namespace pathweave;
namespace ex = pathweave::ex;

namespace {

std::string read_sample(const std::string& name) {
  std::ifstream in(std::string(PATHWEAVE_SAMPLES_DIR) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Any tree, untyped, with awkward names and weights.
class TreeGen {
 public:
  explicit TreeGen(gen::Rng& rng) : rng_(rng) {}

  Expr tree(std::size_t depth) {
    if (depth == 0 || gen::coin(rng_, 0.15)) return leaf();
    switch (gen::uniform(rng_, 0, 9)) {
      case 0: return ex::matmul(tree(depth - 1), tree(depth - 1));
      case 1: return ex::hadamard(tree(depth - 1), tree(depth - 1));
      case 2: return ex::add(tree(depth - 1), tree(depth - 1));
      case 3: return ex::transpose(tree(depth - 1));
      case 4: return ex::not_(tree(depth - 1));
      case 5: return ex::clip(tree(depth - 1));
      case 6: return ex::vout(tree(depth - 1), gen::uniform(rng_, 0, 3));
      case 7: return ex::vin(tree(depth - 1), gen::uniform(rng_, 0, 3));
      default: return ex::scale(weight(), tree(depth - 1));
    }
  }

 private:
  std::string name() {
    static const char* names[] = {"h1", "marko", "J. Informetrics", "a\"b", "x\\y", "ü-ß",
                                  "socsci", "1st", "with,comma", "tab\there"};
    return names[gen::uniform(rng_, 0, 9)];
  }

  double weight() {
    switch (gen::uniform(rng_, 0, 3)) {
      case 0: return 0.6;
      case 1: return static_cast<double>(gen::uniform(rng_, 0, 5));
      case 2: return 1e-7;
      default: return std::uniform_real_distribution<double>(0.0, 100.0)(rng_);
    }
  }

  Expr leaf() {
    switch (gen::uniform(rng_, 0, 7)) {
      case 0: return ex::identity();
      case 1: return ex::ones();
      case 2: return ex::zeros();
      case 3: return ex::row(name());
      case 4: return ex::col(name());
      case 5: return ex::entry(name(), name());
      default: return ex::slice(name());
    }
  }

  gen::Rng& rng_;
};

}  // namespace

TEST(Parse, Coauthorship) {
  auto e = parse("A[authored] . A[authored]' & not(I)");
  ASSERT_EQ(e->kind, NodeKind::Hadamard);
  const auto& prod = e->children[0];
  ASSERT_EQ(prod->kind, NodeKind::MatMul);
  EXPECT_EQ(prod->children[0], ex::slice("authored"));
  EXPECT_EQ(prod->children[1], ex::transpose(ex::slice("authored")));
  EXPECT_EQ(e->children[1], ex::not_(ex::identity()));
}

TEST(Parse, WeightedMerge) {
  auto e = parse(
      "0.6 * (A[authored] . A[authored]' & not(I)) + 0.4 * (A[developed] . A[developed]' & not(I))");
  ASSERT_EQ(e->kind, NodeKind::Add);
  ASSERT_EQ(e->children[0]->kind, NodeKind::Scale);
  ASSERT_EQ(e->children[1]->kind, NodeKind::Scale);
  EXPECT_EQ(e->children[0]->lambda, 0.6);
  EXPECT_EQ(e->children[1]->lambda, 0.4);
  EXPECT_EQ(e->children[0]->children[0], parse("A[authored] . A[authored]' & not(I)"));
}

TEST(Parse, SyntaxErrorOffset) {
  try {
    parse("A[authored .");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 11u);
    EXPECT_NE(std::string(e.what()).find("offset 11"), std::string::npos);
  }
}

TEST(Parse, UnknownFunction) {
  try {
    parse("A[x] & foo(I)");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 7u);
    EXPECT_NE(e.message().find("unknown function 'foo'"), std::string::npos);
  }
}

TEST(Parse, Precedence) {
  EXPECT_EQ(parse("A[a] . A[b] & A[c] + A[d]"),
            ex::add(ex::hadamard(ex::matmul(ex::slice("a"), ex::slice("b")), ex::slice("c")),
                    ex::slice("d")));
  EXPECT_EQ(parse("A[a] . A[b] . A[c]"),
            ex::matmul(ex::matmul(ex::slice("a"), ex::slice("b")), ex::slice("c")));
  EXPECT_EQ(parse("2 * A[a] . A[b]"),
            ex::matmul(ex::scale(2.0, ex::slice("a")), ex::slice("b")));
  EXPECT_EQ(parse("A[a]''"), ex::transpose(ex::transpose(ex::slice("a"))));
  EXPECT_EQ(parse("vout(A[a], 2)"), ex::vout(ex::slice("a"), 2));
  EXPECT_EQ(parse("vin(A[a])"), ex::vin(ex::slice("a"), 0));
  EXPECT_EQ(parse("E(\"J. Inf\", x)"), ex::entry("J. Inf", "x"));
}

TEST(Parse, CommentsAndWhitespace) {
  EXPECT_EQ(parse("# leading\n A[a] # trailing\n . I"), ex::matmul(ex::slice("a"), ex::identity()));
}

TEST(Parse, RejectsMetavariablesOutsidePatterns) {
  EXPECT_THROW(parse("?A & I"), ParseError);
  EXPECT_EQ(parse_pattern("?A & I"), ex::hadamard(ex::meta("A"), ex::identity()));
}

TEST(Parse, Programs) {
  auto e = parse_program(read_sample("has_cited.path"));
  auto want = parse(
      "A[authored] . A[cites] . A[authored]' & not(clip(A[authored] . A[authored]' & not(I))) & "
      "not(I)");
  EXPECT_EQ(e, want);
  EXPECT_EQ(parse_program("let x = A[a]\nlet y = x . x"), parse("A[a] . A[a]"));
  EXPECT_EQ(parse_program(read_sample("coauthorship.path")),
            parse("A[authored] . A[authored]' & not(I)"));
  EXPECT_THROW(parse_program("# nothing"), ParseError);
  EXPECT_THROW(parse_program("let not = I"), ParseError);
  EXPECT_THROW(parse_program("y . I"), ParseError);
}

TEST(Parse, RejectsBadNumbersAndThresholds) {
  EXPECT_THROW(parse("1e999 * A[a]"), ParseError);
  EXPECT_THROW(parse("vout(A[a], x)"), ParseError);
  EXPECT_THROW(parse("0.5 A[a]"), ParseError);
}

TEST(Parse, DeepNestingIsAnErrorNotACrash) {
  std::string text(5000, '(');
  text += "I";
  text += std::string(5000, ')');
  EXPECT_THROW(parse(text), ParseError);
}

TEST(Format, Examples) {
  EXPECT_EQ(format(ex::identity()), "I");
  EXPECT_EQ(format(parse("A[authored] . A[authored]' & not(I)")),
            "A[authored] . A[authored]' & not(I)");
  auto nested = ex::scale(0.5, ex::matmul(ex::scale(2.0, ex::slice("a")), ex::slice("b")));
  EXPECT_EQ(format(nested), "0.5 * (2 * A[a] . A[b])");
  EXPECT_EQ(parse(format(nested)), nested);
  auto right = ex::matmul(ex::slice("a"), ex::matmul(ex::slice("b"), ex::slice("c")));
  EXPECT_EQ(format(right), "A[a] . (A[b] . A[c])");
  EXPECT_EQ(format(ex::transpose(ex::scale(3.0, ex::slice("a")))), "(3 * A[a])'");
  EXPECT_EQ(format(ex::row("J. Inf")), "R(\"J. Inf\")");
}

TEST(Format, RoundTripsWorkedExpressions) {
  for (const char* s :
       {"A[authored] . A[authored]' & not(I)",
        "0.6 * (A[authored] . A[authored]' & not(I)) + 0.4 * (A[developed] . A[developed]' & not(I))"}) {
    auto e = parse(s);
    EXPECT_EQ(parse(format(e)), e) << s;
  }
}

TEST(Format, RoundTripsRandomTrees) {
  gen::Rng rng(99);
  TreeGen g(rng);
  for (int k = 0; k < 1000; ++k) {
    auto e = g.tree(gen::uniform(rng, 0, 8));
    std::string text = format(e);
    Expr back;
    ASSERT_NO_THROW(back = parse(text)) << text;
    ASSERT_EQ(back, e) << text;
    EXPECT_EQ(format(back), text);
  }
}

TEST(Fuzz, RandomBytesNeverCrash) {
  gen::Rng rng(2024);
  const std::string alphabet = "A[]().,'&+*#\"?;= \n\t0123456789eE-IRCEnotclipvoutinZEROONESletxyz\\";
  std::size_t trees = 0, errors = 0;
  for (int k = 0; k < 100000; ++k) {
    std::size_t len = gen::uniform(rng, 0, 40);
    std::string s;
    for (std::size_t i = 0; i < len; ++i) {
      if (gen::coin(rng, 0.1)) s.push_back(static_cast<char>(gen::uniform(rng, 0, 255)));
      else s.push_back(alphabet[gen::uniform(rng, 0, alphabet.size() - 1)]);
    }
    try {
      auto e = parse(s);
      ++trees;
      ASSERT_EQ(parse(format(e)), e) << s;
    } catch (const ParseError& e) {
      ++errors;
      ASSERT_LE(e.offset(), s.size());
    }
  }
  EXPECT_EQ(trees + errors, 100000u);
}

TEST(Fuzz, MutatedValidExpressions) {
  gen::Rng rng(77);
  const std::string base =
      "clip( ((C(marko) & A[authored]') . A[authored] & I) . (A[cites] & "
      "not(vout(C(marko) & A[authored]')')) . (vin(R(joi) & A[contains]) & I) )";
  for (int k = 0; k < 20000; ++k) {
    std::string s = base;
    std::size_t edits = gen::uniform(rng, 1, 4);
    for (std::size_t e = 0; e < edits && !s.empty(); ++e) {
      std::size_t at = gen::uniform(rng, 0, s.size() - 1);
      switch (gen::uniform(rng, 0, 2)) {
        case 0: s.erase(at, 1); break;
        case 1: s.insert(at, 1, base[gen::uniform(rng, 0, base.size() - 1)]); break;
        default: s[at] = base[gen::uniform(rng, 0, base.size() - 1)]; break;
      }
    }
    try {
      auto e = parse(s);
      ASSERT_EQ(parse(format(e)), e) << s;
    } catch (const ParseError& e) {
      ASSERT_LE(e.offset(), s.size());
    }
  }
}
