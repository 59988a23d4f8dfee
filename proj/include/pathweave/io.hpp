#pragma once

// Text output for path matrices and analysis results. Numbers are printed
// with 12 significant digits so output is byte-stable across runs.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pathweave/analysis.hpp"
#include "pathweave/error.hpp"
#include "pathweave/graph_store.hpp"
#include "pathweave/path_matrix.hpp"

namespace pathweave {

inline std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace detail {

// The double that %.12g prints, so JSON and TSV agree.
inline double rounded(double v) { return std::stod(format_value(v)); }

inline void check_export_size(const PathMatrix& z) {
  if (z.nnz() > kMaxMaterializedEntries)
    throw DomainError("path matrix has " + std::to_string(z.nnz()) +
                      " nonzero entries; too many to print");
}

}  // namespace detail

// `tail<TAB>head<TAB>weight`, row-major by vertex id.
inline void write_matrix_tsv(std::ostream& os, const PathMatrix& z, const VertexDictionary& dict) {
  detail::check_export_size(z);
  z.for_each_nonzero([&](VertexId i, VertexId j, double v) {
    os << dict.name(i) << '\t' << dict.name(j) << '\t' << format_value(v) << '\n';
  });
}

inline void write_matrix_json(std::ostream& os, const PathMatrix& z, const VertexDictionary& dict) {
  detail::check_export_size(z);
  nlohmann::ordered_json j;
  j["metric"] = "path-matrix";
  j["n"] = z.n();
  j["representation"] = to_string(z.repr());
  auto& entries = j["entries"] = nlohmann::ordered_json::array();
  z.for_each_nonzero([&](VertexId i, VertexId k, double v) {
    entries.push_back({dict.name(i), dict.name(k), detail::rounded(v)});
  });
  os << j.dump(2) << '\n';
}

// Result of an analysis command: named per-vertex series, named scalars and
// an optional list of vertex pairs with values.
struct Report {
  std::string metric;
  std::vector<std::pair<std::string, std::vector<std::optional<double>>>> per_vertex;
  std::vector<std::pair<std::string, std::optional<double>>> scalars;
  std::string pair_series;
  std::vector<std::tuple<VertexId, VertexId, double>> pairs;
};

// JSON object {metric, per_vertex: {series: {vertex: value}}, scalars}.
// Absent per-vertex values are omitted; absent scalars are null.
inline void write_report_json(std::ostream& os, const Report& r, const VertexDictionary& dict) {
  nlohmann::ordered_json j;
  j["metric"] = r.metric;
  auto& pv = j["per_vertex"] = nlohmann::ordered_json::object();
  for (const auto& [series, values] : r.per_vertex) {
    auto& obj = pv[series] = nlohmann::ordered_json::object();
    for (std::size_t v = 0; v < values.size(); ++v)
      if (values[v]) obj[dict.name(static_cast<VertexId>(v))] = detail::rounded(*values[v]);
  }
  auto& sc = j["scalars"] = nlohmann::ordered_json::object();
  for (const auto& [name, value] : r.scalars)
    sc[name] = value ? nlohmann::ordered_json(detail::rounded(*value)) : nlohmann::ordered_json();
  if (!r.pair_series.empty()) {
    auto& arr = j[r.pair_series] = nlohmann::ordered_json::array();
    for (const auto& [a, b, v] : r.pairs)
      arr.push_back({dict.name(a), dict.name(b), detail::rounded(v)});
  }
  os << j.dump(2) << '\n';
}

// One record per line, first field naming the series:
//   series<TAB>vertex<TAB>value, scalar<TAB>value, pairs<TAB>tail<TAB>head<TAB>value.
inline void write_report_tsv(std::ostream& os, const Report& r, const VertexDictionary& dict) {
  for (const auto& [series, values] : r.per_vertex)
    for (std::size_t v = 0; v < values.size(); ++v)
      if (values[v])
        os << series << '\t' << dict.name(static_cast<VertexId>(v)) << '\t'
           << format_value(*values[v]) << '\n';
  for (const auto& [name, value] : r.scalars)
    os << name << '\t' << (value ? format_value(*value) : std::string("NA")) << '\n';
  for (const auto& [a, b, v] : r.pairs)
    os << r.pair_series << '\t' << dict.name(a) << '\t' << dict.name(b) << '\t' << format_value(v)
       << '\n';
}

// `vertex<TAB>value` lines; `#` comments and blank lines skipped. Vertices
// not in the dictionary are ignored since they cannot occur in any path.
inline VertexProperty read_property(std::istream& in, const VertexDictionary& dict,
                                    VertexProperty::Kind kind) {
  VertexProperty p;
  p.kind = kind;
  p.scalar.assign(kind == VertexProperty::Kind::Scalar ? dict.size() : 0, std::nullopt);
  p.category.assign(kind == VertexProperty::Kind::Categorical ? dict.size() : 0, std::nullopt);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto view = detail::strip_cr(line);
    if (detail::is_blank_or_comment(view)) continue;
    auto fields = detail::split_tabs(view);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
      throw InputError("line " + std::to_string(lineno) + ": expected vertex<TAB>value");
    auto id = dict.find(fields[0]);
    if (!id) continue;
    if (kind == VertexProperty::Kind::Categorical) {
      p.category[*id] = fields[1];
      continue;
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(fields[1], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != fields[1].size() || !std::isfinite(v))
      throw InputError("line " + std::to_string(lineno) + ": '" + fields[1] + "' is not a number");
    p.scalar[*id] = v;
  }
  return p;
}

inline VertexProperty load_property(const std::string& path, const VertexDictionary& dict,
                                    VertexProperty::Kind kind) {
  auto in = open_input(path);
  return read_property(in, dict, kind);
}

}  // namespace pathweave
