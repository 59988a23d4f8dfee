#pragma once

// The `pathweave` command line. run() takes the argument list without the
// program name and returns the process exit status: 0 on success, 1 for
// evaluation or analysis failures, 2 for I/O, syntax and usage errors.

#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pathweave/analysis.hpp"
#include "pathweave/error.hpp"
#include "pathweave/evaluator.hpp"
#include "pathweave/graph_store.hpp"
#include "pathweave/io.hpp"
#include "pathweave/rewriter.hpp"
#include "pathweave/signatures.hpp"
#include "pathweave/syntax.hpp"

namespace pathweave::cli {

struct RunConfig {
  std::string graph;
  std::string signatures;
  std::string expr;
  std::string expr_file;
  std::string format = "tsv";
  bool simplify = false;
  bool show_plan = false;
  double delta = 0.85;
  double epsilon = 1e-9;
  std::size_t max_iters = 1000;
  std::size_t steps = 3;
  double decay = 1.0;
  double threshold = 0.0;
  std::vector<std::string> seeds;
  std::string property;
  std::string kind = "scalar";
};

namespace detail {

inline std::string read_file(const std::string& path) {
  auto in = open_input(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Parses the configured expression. Without one, analysis commands use the
// support of all slices together.
inline Expr load_expression(const RunConfig& cfg, const MultiRelTensor* tensor) {
  if (!cfg.expr.empty() && !cfg.expr_file.empty())
    throw InputError("give either --expr or --expr-file, not both");
  try {
    if (!cfg.expr_file.empty()) return parse_program(read_file(cfg.expr_file));
    if (!cfg.expr.empty()) return parse_program(cfg.expr);
  } catch (const ParseError& e) {
    throw InputError((cfg.expr_file.empty() ? std::string("--expr") : cfg.expr_file) + ": " +
                     e.what());
  }
  if (!tensor) throw InputError("an expression is required (--expr or --expr-file)");
  Expr acc;
  for (const auto& label : tensor->labels()) {
    Expr s = ex::slice(label);
    acc = acc ? ex::add(acc, s) : s;
  }
  return tensor->m() == 1 ? acc : ex::clip(acc);
}

inline MultiRelTensor load_graph(const RunConfig& cfg) {
  std::optional<std::string> sig;
  if (!cfg.signatures.empty()) sig = cfg.signatures;
  return load_tensor(cfg.graph, sig);
}

inline void warn_signatures(const RunConfig& cfg, const Expr& e, const MultiRelTensor& t,
                            std::ostream& err) {
  if (cfg.signatures.empty()) return;
  auto report = check_signatures(e, t);
  for (const auto& v : report.violations)
    err << "warning: type mismatch in " << v.subexpression << ": " << v.expected << " vs "
        << v.found << " (evaluates to no paths)\n";
}

// Evaluates the configured expression, simplifying first when asked.
inline PathMatrix compute(const RunConfig& cfg, const MultiRelTensor& t, std::ostream& err) {
  Expr e = load_expression(cfg, &t);
  warn_signatures(cfg, e, t, err);
  if (cfg.simplify) {
    auto s = simplify(e);
    err << derivation_table(e, s.trace);
    e = s.expr;
  }
  EvalPlan p = plan(e, t);
  if (cfg.show_plan) err << p.describe();
  return execute(p, &t);
}

inline void emit(const RunConfig& cfg, const Report& r, const MultiRelTensor& t,
                 std::ostream& out) {
  if (cfg.format == "json")
    write_report_json(out, r, t.vertices());
  else
    write_report_tsv(out, r, t.vertices());
}

inline int cmd_load_check(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto t = load_graph(cfg);
  out << "vertices\t" << t.n() << '\n' << "slices\t" << t.m() << '\n';
  for (const auto& [label, s] : t.slices()) {
    out << "slice\t" << label << '\t' << s.pairs.size();
    if (s.signature) out << '\t' << s.signature->domain << '\t' << s.signature->range;
    out << '\n';
  }
  if (!cfg.signatures.empty()) {
    auto in = open_input(cfg.signatures);
    for (const auto& [label, _] : read_signatures(in))
      if (!t.has_slice(label)) err << "warning: signature for unused label '" << label << "'\n";
  }
  return 0;
}

inline int cmd_eval(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto t = load_graph(cfg);
  PathMatrix z = compute(cfg, t, err);
  if (cfg.format == "json")
    write_matrix_json(out, z, t.vertices());
  else
    write_matrix_tsv(out, z, t.vertices());
  return 0;
}

inline int cmd_simplify(const RunConfig& cfg, std::ostream& out) {
  Expr e = load_expression(cfg, nullptr);
  auto s = simplify(e);
  if (cfg.format == "json") {
    nlohmann::ordered_json j;
    j["input"] = format(e);
    j["output"] = format(s.expr);
    auto& steps = j["steps"] = nlohmann::ordered_json::array();
    for (const auto& st : s.trace.steps)
      steps.push_back({{"rule", st.rule},
                       {"justification", st.justification},
                       {"before", format(st.before)},
                       {"after", format(st.after)},
                       {"expression", format(st.result)}});
    j["cost_before"] = tree_cost(e);
    j["cost_after"] = tree_cost(s.expr);
    out << j.dump(2) << '\n';
    return 0;
  }
  out << derivation_table(e, s.trace);
  out << "result\t" << format(s.expr) << '\n';
  return 0;
}

inline int cmd_pagerank(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  PageRankConfig pc{cfg.delta, cfg.epsilon, cfg.max_iters};
  pc.validate();
  auto t = load_graph(cfg);
  auto res = pagerank(compute(cfg, t, err), pc);
  Report r;
  r.metric = "pagerank";
  r.per_vertex.push_back({"rank", {res.rank.begin(), res.rank.end()}});
  r.scalars.push_back({"iterations", static_cast<double>(res.iterations)});
  emit(cfg, r, t, out);
  return 0;
}

inline int cmd_geodesic(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto t = load_graph(cfg);
  auto g = shortest_paths(compute(cfg, t, err));
  Report r;
  r.metric = "geodesic";
  std::vector<std::optional<double>> ecc(g.n), close(g.n), reach(g.n);
  for (std::size_t v = 0; v < g.n; ++v) {
    if (g.eccentricity[v]) ecc[v] = *g.eccentricity[v];
    close[v] = g.closeness[v];
    reach[v] = static_cast<double>(g.reach[v]);
  }
  r.per_vertex = {{"eccentricity", ecc}, {"closeness", close}, {"reach", reach}};
  auto opt = [](const std::optional<std::uint32_t>& x) -> std::optional<double> {
    if (!x) return std::nullopt;
    return static_cast<double>(*x);
  };
  r.scalars = {{"radius", opt(g.radius)}, {"diameter", opt(g.diameter)}};
  r.pair_series = "distance";
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = 0; j < g.n; ++j)
      if (i != j)
        if (auto d = g.distance(i, j))
          r.pairs.emplace_back(static_cast<VertexId>(i), static_cast<VertexId>(j),
                               static_cast<double>(*d));
  emit(cfg, r, t, out);
  return 0;
}

inline std::vector<double> parse_seeds(const RunConfig& cfg, const MultiRelTensor& t) {
  if (cfg.seeds.empty()) throw InputError("spread needs at least one --seed vertex[=energy]");
  std::vector<double> seed(t.n(), 0.0);
  for (const auto& s : cfg.seeds) {
    auto eq = s.find('=');
    std::string name = s.substr(0, eq);
    double energy = 1.0;
    if (eq != std::string::npos) {
      std::size_t used = 0;
      try {
        energy = std::stod(s.substr(eq + 1), &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != s.size() - eq - 1)
        throw InputError("--seed '" + s + "': energy is not a number");
    }
    seed[t.vertices().id_of(name)] += energy;
  }
  return seed;
}

inline int cmd_spread(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto t = load_graph(cfg);
  auto seed = parse_seeds(cfg, t);
  auto flow =
      spreading_activation(compute(cfg, t, err), seed, {cfg.steps, cfg.decay, cfg.threshold});
  Report r;
  r.metric = "spread";
  r.per_vertex.push_back({"flow", {flow.begin(), flow.end()}});
  emit(cfg, r, t, out);
  return 0;
}

inline int cmd_assort(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.property.empty()) throw InputError("assort needs --property FILE");
  auto t = load_graph(cfg);
  auto kind = cfg.kind == "categorical" ? VertexProperty::Kind::Categorical
                                        : VertexProperty::Kind::Scalar;
  VertexProperty prop;
  try {
    prop = load_property(cfg.property, t.vertices(), kind);
  } catch (const IoError&) {
    throw;
  } catch (const InputError& e) {
    throw InputError(cfg.property + ": " + e.what());
  }
  PathMatrix z = compute(cfg, t, err);
  double r = kind == VertexProperty::Kind::Categorical ? assortativity_categorical(z, prop)
                                                       : assortativity_scalar(z, prop);
  Report rep;
  rep.metric = kind == VertexProperty::Kind::Categorical ? "assortativity-categorical"
                                                         : "assortativity-scalar";
  rep.scalars = {{"r", r}, {"paths", static_cast<double>(z.nnz())}};
  emit(cfg, rep, t, out);
  return 0;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Path algebra over multi-relational networks", "pathweave"};
  app.require_subcommand(1);

  auto graph_opts = [&](CLI::App* sc) {
    sc->add_option("--graph", cfg.graph, "triple file: tail<TAB>label<TAB>head")->required();
    sc->add_option("--signatures", cfg.signatures, "signature file: label<TAB>domain<TAB>range");
  };
  auto expr_opts = [&](CLI::App* sc) {
    auto* e = sc->add_option("--expr", cfg.expr, "path expression");
    auto* f = sc->add_option("--expr-file", cfg.expr_file, "file holding a path expression");
    e->excludes(f);
  };
  auto output_opts = [&](CLI::App* sc) {
    sc->add_option("--format", cfg.format, "output format")
        ->check(CLI::IsMember({"tsv", "json"}));
    sc->add_flag("--simplify", cfg.simplify, "simplify before evaluating; derivation on stderr");
    sc->add_flag("--plan", cfg.show_plan, "print the evaluation plan on stderr");
  };

  auto* load = app.add_subcommand("load-check", "load a graph and report its slices");
  graph_opts(load);

  auto* eval = app.add_subcommand("eval", "evaluate an expression to a path matrix");
  graph_opts(eval);
  expr_opts(eval);
  output_opts(eval);

  auto* simp = app.add_subcommand("simplify", "print the derivation of a simplified expression");
  expr_opts(simp);
  simp->add_option("--format", cfg.format, "output format")->check(CLI::IsMember({"tsv", "json"}));

  auto* pr = app.add_subcommand("pagerank", "PageRank over the path matrix");
  graph_opts(pr);
  expr_opts(pr);
  output_opts(pr);
  pr->add_option("--delta", cfg.delta, "weight of the path matrix against teleportation");
  pr->add_option("--epsilon", cfg.epsilon, "L2 convergence tolerance");
  pr->add_option("--max-iters", cfg.max_iters, "iteration limit");

  auto* geo = app.add_subcommand("geodesic", "hop-count distances and derived metrics");
  graph_opts(geo);
  expr_opts(geo);
  output_opts(geo);

  auto* spread = app.add_subcommand("spread", "spreading activation from seed vertices");
  graph_opts(spread);
  expr_opts(spread);
  output_opts(spread);
  spread->add_option("--seed", cfg.seeds, "seed vertex, optionally vertex=energy (repeatable)");
  spread->add_option("--steps", cfg.steps, "propagation steps");
  spread->add_option("--decay", cfg.decay, "energy kept per step, in [0, 1]");
  spread->add_option("--threshold", cfg.threshold, "energies below this are dropped each step");

  auto* assort = app.add_subcommand("assort", "assortative mixing over the path matrix");
  graph_opts(assort);
  expr_opts(assort);
  output_opts(assort);
  assort->add_option("--property", cfg.property, "property file: vertex<TAB>value")->required();
  assort->add_option("--kind", cfg.kind, "property kind")
      ->check(CLI::IsMember({"scalar", "categorical"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "pathweave: " << e.what() << '\n';
    return 2;
  }

  try {
    if (load->parsed()) return detail::cmd_load_check(cfg, out, err);
    if (eval->parsed()) return detail::cmd_eval(cfg, out, err);
    if (simp->parsed()) return detail::cmd_simplify(cfg, out);
    if (pr->parsed()) return detail::cmd_pagerank(cfg, out, err);
    if (geo->parsed()) return detail::cmd_geodesic(cfg, out, err);
    if (spread->parsed()) return detail::cmd_spread(cfg, out, err);
    if (assort->parsed()) return detail::cmd_assort(cfg, out, err);
  } catch (const Error& e) {
    err << "pathweave: error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::bad_alloc&) {
    err << "pathweave: error: out of memory\n";
    return 1;
  }
  return 2;
}

}  // namespace pathweave::cli
