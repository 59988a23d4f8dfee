#pragma once

// Multi-relational network storage: one vertex dictionary shared by m
// boolean adjacency slices, one slice per edge label.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pathweave/error.hpp"

namespace pathweave {

using VertexId = std::uint32_t;

class VertexDictionary {
 public:
  // Returns the id for `name`, assigning the next dense id on first sight.
  VertexId intern(std::string_view name) {
    auto it = index_.find(std::string(name));
    if (it != index_.end()) return it->second;
    auto id = static_cast<VertexId>(names_.size());
    names_.emplace_back(name);
    index_.emplace(names_.back(), id);
    return id;
  }

  std::optional<VertexId> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  VertexId id_of(std::string_view name) const {
    if (auto id = find(name)) return *id;
    throw DomainError("unknown vertex '" + std::string(name) + "'");
  }

  const std::string& name(VertexId id) const { return names_.at(id); }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, VertexId> index_;
};

// Domain and range classes of a relation, e.g. authored : H -> A.
struct Signature {
  std::string domain;
  std::string range;
  bool operator==(const Signature&) const = default;
};

struct EdgeSlice {
  std::string label;
  // Sorted by (tail, head), no duplicates.
  std::vector<std::pair<VertexId, VertexId>> pairs;
  std::optional<Signature> signature;

  bool contains(VertexId tail, VertexId head) const {
    return std::binary_search(pairs.begin(), pairs.end(),
                              std::pair{tail, head});
  }
};

struct Triple {
  std::string tail;
  std::string label;
  std::string head;
  bool operator==(const Triple&) const = default;
  auto operator<=>(const Triple&) const = default;
};

// Immutable after construction; safe to share between readers.
class MultiRelTensor {
 public:
  MultiRelTensor(VertexDictionary vertices, std::map<std::string, EdgeSlice> slices)
      : vertices_(std::move(vertices)), slices_(std::move(slices)) {}

  const VertexDictionary& vertices() const { return vertices_; }
  std::size_t n() const { return vertices_.size(); }
  std::size_t m() const { return slices_.size(); }
  const std::map<std::string, EdgeSlice>& slices() const { return slices_; }

  bool has_slice(std::string_view label) const {
    return slices_.find(std::string(label)) != slices_.end();
  }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (const auto& [label, _] : slices_) out.push_back(label);
    return out;
  }

  const EdgeSlice& slice(std::string_view label) const {
    auto it = slices_.find(std::string(label));
    if (it == slices_.end()) {
      std::string available;
      for (const auto& [l, _] : slices_) {
        if (!available.empty()) available += ", ";
        available += l;
      }
      throw DomainError("unknown slice '" + std::string(label) +
                        "'; available: " + available);
    }
    return it->second;
  }

 private:
  VertexDictionary vertices_;
  std::map<std::string, EdgeSlice> slices_;
};

// Builds a tensor from labeled triples. Vertex ids follow first appearance
// across all labels; duplicate triples collapse to one edge. Line numbers in
// errors are 1-based positions in `triples`.
inline MultiRelTensor ingest_triples(
    std::span<const Triple> triples,
    const std::map<std::string, Signature>& signatures = {}) {
  if (triples.empty()) throw InputError("no edges");
  VertexDictionary dict;
  std::map<std::string, EdgeSlice> slices;
  for (std::size_t k = 0; k < triples.size(); ++k) {
    const auto& t = triples[k];
    if (t.tail.empty() || t.label.empty() || t.head.empty())
      throw InputError("line " + std::to_string(k + 1) +
                       ": triple needs nonempty tail, label and head");
    VertexId tail = dict.intern(t.tail);
    VertexId head = dict.intern(t.head);
    auto& s = slices[t.label];
    s.label = t.label;
    s.pairs.emplace_back(tail, head);
  }
  for (auto& [label, s] : slices) {
    std::sort(s.pairs.begin(), s.pairs.end());
    s.pairs.erase(std::unique(s.pairs.begin(), s.pairs.end()), s.pairs.end());
    if (auto it = signatures.find(label); it != signatures.end())
      s.signature = it->second;
  }
  return MultiRelTensor(std::move(dict), std::move(slices));
}

// Inverse of ingest_triples: every edge as a triple, ordered by label then
// (tail id, head id).
inline std::vector<Triple> export_triples(const MultiRelTensor& t) {
  std::vector<Triple> out;
  const auto& dict = t.vertices();
  for (const auto& [label, s] : t.slices())
    for (auto [i, j] : s.pairs) out.push_back({dict.name(i), label, dict.name(j)});
  return out;
}

namespace detail {

inline std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

inline bool is_blank_or_comment(std::string_view line) {
  if (!line.empty() && line.front() == '#') return true;
  return line.find_first_not_of(" \t") == std::string_view::npos;
}

}  // namespace detail

// Reads `tail<TAB>label<TAB>head` lines; `#` lines and blank lines are
// skipped. Errors carry the 1-based physical line number.
inline std::vector<Triple> read_triples(std::istream& in) {
  std::vector<Triple> out;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto line = detail::strip_cr(raw);
    if (detail::is_blank_or_comment(line)) continue;
    auto f = detail::split_tabs(line);
    if (f.size() != 3 || f[0].empty() || f[1].empty() || f[2].empty())
      throw InputError("line " + std::to_string(lineno) +
                       ": expected tail<TAB>label<TAB>head");
    out.push_back({f[0], f[1], f[2]});
  }
  return out;
}

inline std::map<std::string, Signature> read_signatures(std::istream& in) {
  std::map<std::string, Signature> out;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto line = detail::strip_cr(raw);
    if (detail::is_blank_or_comment(line)) continue;
    auto f = detail::split_tabs(line);
    if (f.size() != 3 || f[0].empty() || f[1].empty() || f[2].empty())
      throw InputError("line " + std::to_string(lineno) +
                       ": expected label<TAB>domainClass<TAB>rangeClass");
    out[f[0]] = Signature{f[1], f[2]};
  }
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

inline MultiRelTensor load_tensor(const std::string& triple_path,
                                  const std::optional<std::string>& signature_path = {}) {
  auto in = open_input(triple_path);
  std::vector<Triple> triples;
  try {
    triples = read_triples(in);
  } catch (const InputError& e) {
    throw InputError(triple_path + ": " + e.what());
  }
  std::map<std::string, Signature> sigs;
  if (signature_path) {
    auto sin = open_input(*signature_path);
    try {
      sigs = read_signatures(sin);
    } catch (const InputError& e) {
      throw InputError(*signature_path + ": " + e.what());
    }
  }
  if (triples.empty()) throw InputError(triple_path + ": no edges");
  return ingest_triples(triples, sigs);
}

}  // namespace pathweave
