#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pathweave/cli.hpp"

namespace {

std::string sample(const std::string& name) { return std::string(PATHWEAVE_SAMPLES_DIR) + "/" + name; }

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = pathweave::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Writes `text` to a fresh file under the system temp directory.
std::string temp_file(const std::string& name, const std::string& text) {
  auto path = std::filesystem::temp_directory_path() / ("pathweave_test_" + name);
  std::ofstream(path) << text;
  return path.string();
}

}  // namespace

TEST(Cli, EvalCoauthorship) {
  auto r = run({"eval", "--graph", sample("fixture1.tsv"), "--expr-file", sample("coauthorship.path")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "h1\th2\t1\nh2\th1\t1\n");
}

TEST(Cli, EvalJson) {
  auto r = run({"eval", "--graph", sample("fixture1.tsv"), "--expr", "A[authored] . A[cites] . A[authored]'",
                "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["n"], 7);
  ASSERT_EQ(j["entries"].size(), 1u);
  EXPECT_EQ(j["entries"][0][0], "h1");
  EXPECT_EQ(j["entries"][0][1], "h2");
  EXPECT_EQ(j["entries"][0][2], 1.0);
}

TEST(Cli, SimplifiedEvaluationGivesTheSameMatrix) {
  std::vector<std::string> base{"eval", "--graph", sample("fixture1.tsv"), "--expr-file", sample("has_cited.path")};
  auto plain = run(base);
  base.push_back("--simplify");
  auto simplified = run(base);
  ASSERT_EQ(plain.code, 0) << plain.err;
  ASSERT_EQ(simplified.code, 0) << simplified.err;
  EXPECT_EQ(plain.out, simplified.out);
  EXPECT_NE(simplified.err.find("| "), std::string::npos);
}

TEST(Cli, PlanGoesToStderr) {
  auto r = run({"eval", "--graph", sample("fixture1.tsv"), "--expr", "A[authored] . A[authored]'", "--plan"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("matmul"), std::string::npos);
  EXPECT_EQ(r.out.find("matmul"), std::string::npos);
}

TEST(Cli, SimplifyCommand) {
  auto r = run({"simplify", "--expr", "not(not(A[a]))"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("result\tA[a]"), std::string::npos);
  auto j = run({"simplify", "--expr", "not(not(A[a]))", "--format", "json"});
  auto doc = nlohmann::json::parse(j.out);
  EXPECT_EQ(doc["output"], "A[a]");
  EXPECT_EQ(doc["steps"][0]["rule"], "double-not");
}

TEST(Cli, PageRankOnCycle) {
  auto r = run({"pagerank", "--graph", sample("cycle3.tsv"), "--epsilon", "1e-12"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("rank\tx\t0.333333333333\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("rank\ty\t0.333333333333\n"), std::string::npos);
  EXPECT_NE(r.out.find("rank\tz\t0.333333333333\n"), std::string::npos);
}

TEST(Cli, PageRankRejectsBadDelta) {
  EXPECT_EQ(run({"pagerank", "--graph", sample("cycle3.tsv"), "--delta", "0"}).code, 1);
}

TEST(Cli, GeodesicOnCites) {
  auto r = run({"geodesic", "--graph", sample("fixture1.tsv"), "--expr", "A[cites]"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("distance\ta1\ta3\t1\n"), std::string::npos) << r.out;
  EXPECT_EQ(r.out.find("distance\ta3\ta1"), std::string::npos);
  EXPECT_NE(r.out.find("diameter\tNA\n"), std::string::npos);
}

TEST(Cli, GeodesicJsonOnCycle) {
  auto r = run({"geodesic", "--graph", sample("cycle3.tsv"), "--format", "json"});
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["scalars"]["diameter"], 2.0);
  EXPECT_EQ(j["per_vertex"]["closeness"]["x"], 1.5);
}

TEST(Cli, SpreadFromSeed) {
  auto r = run({"spread", "--graph", sample("cycle3.tsv"), "--seed", "x", "--steps", "2", "--decay", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("flow\tx\t1\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("flow\ty\t0.5\n"), std::string::npos);
  EXPECT_NE(r.out.find("flow\tz\t0.25\n"), std::string::npos);
  EXPECT_EQ(run({"spread", "--graph", sample("cycle3.tsv"), "--seed", "nobody"}).code, 1);
  EXPECT_EQ(run({"spread", "--graph", sample("cycle3.tsv"), "--seed", "x=abc"}).code, 2);
}

TEST(Cli, AssortativityScalar) {
  auto graph = temp_file("assort.tsv", "a\tknows\tb\nb\tknows\ta\nc\tknows\td\nd\tknows\tc\n");
  auto prop = temp_file("assort_prop.tsv", "a\t1\nb\t1\nc\t2\nd\t2\n");
  auto r = run({"assort", "--graph", graph, "--property", prop});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("r\t1\n"), std::string::npos) << r.out;
  auto cats = temp_file("assort_cat.tsv", "a\tx\nb\ty\nc\tx\nd\ty\n");
  auto c = run({"assort", "--graph", graph, "--property", cats, "--kind", "categorical"});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_NE(c.out.find("r\t-1\n"), std::string::npos) << c.out;
  auto flat = temp_file("assort_flat.tsv", "a\t3\nb\t3\nc\t3\nd\t3\n");
  auto d = run({"assort", "--graph", graph, "--property", flat});
  EXPECT_EQ(d.code, 1);
  EXPECT_NE(d.err.find("degenerate property"), std::string::npos);
  auto bad = temp_file("assort_bad.tsv", "a\tone\n");
  EXPECT_EQ(run({"assort", "--graph", graph, "--property", bad}).code, 2);
}

TEST(Cli, LoadCheck) {
  auto r = run({"load-check", "--graph", sample("fixture1.tsv"), "--signatures", sample("signatures.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("vertices\t7\n"), std::string::npos);
  EXPECT_NE(r.out.find("slice\tauthored\t4\tH\tA\n"), std::string::npos) << r.out;
  EXPECT_NE(r.err.find("developed"), std::string::npos);
}

TEST(Cli, SignatureMismatchIsAWarning) {
  auto r = run({"eval", "--graph", sample("fixture1.tsv"), "--signatures", sample("signatures.tsv"), "--expr",
                "A[cites] . A[authored]"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("warning: type mismatch"), std::string::npos);
  EXPECT_EQ(r.out, "");
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({"eval", "--graph", "/nonexistent/graph.tsv", "--expr", "I"}).code, 2);
  auto syntax = run({"eval", "--graph", sample("fixture1.tsv"), "--expr", "A[authored"});
  EXPECT_EQ(syntax.code, 2);
  EXPECT_NE(syntax.err.find("offset"), std::string::npos);
  EXPECT_EQ(run({"eval", "--graph", sample("fixture1.tsv"), "--expr", "I", "--bogus"}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"eval", "--graph", sample("fixture1.tsv"), "--expr", "I", "--format", "xml"}).code, 2);
  auto domain = run({"eval", "--graph", sample("fixture1.tsv"), "--expr", "A[knows]"});
  EXPECT_EQ(domain.code, 1);
  EXPECT_NE(domain.err.find("knows"), std::string::npos);
  EXPECT_EQ(run({"eval", "--graph", sample("fixture1.tsv"), "--expr", "not(A[authored] . A[authored]')"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, OutputIsDeterministic) {
  std::vector<std::string> args{"pagerank", "--graph", sample("fixture1.tsv"), "--format", "json"};
  auto a = run(args), b = run(args);
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, SocialScienceJournalCitations) {
  std::vector<std::string> args{"eval", "--graph", sample("journals.tsv"), "--expr-file",
                                sample("socsci_citations.path")};
  auto r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "j1\tj2\t2\nj2\tj1\t1\n");
  args.push_back("--simplify");
  EXPECT_EQ(run(args).out, r.out);
}
