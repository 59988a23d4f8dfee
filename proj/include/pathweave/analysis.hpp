#pragma once

// Single-relational algorithms over path matrices: hop-count geodesics,
// PageRank, spreading activation and assortative mixing.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pathweave/error.hpp"
#include "pathweave/parallel.hpp"
#include "pathweave/path_matrix.hpp"

namespace pathweave {

// ---- geodesics ----

struct GeodesicResult {
  static constexpr std::uint32_t kUnreachable = std::numeric_limits<std::uint32_t>::max();

  std::size_t n = 0;
  std::vector<std::uint32_t> distances;  // row-major; kUnreachable when no path
  // Absent when some other vertex is unreachable.
  std::vector<std::optional<std::uint32_t>> eccentricity;
  std::optional<std::uint32_t> radius;
  std::optional<std::uint32_t> diameter;
  // Mean distance over reachable targets; absent when nothing is reachable.
  std::vector<std::optional<double>> closeness;
  std::vector<std::size_t> reach;  // reachable targets, self excluded

  std::optional<std::uint32_t> distance(std::size_t i, std::size_t j) const {
    std::uint32_t d = distances[i * n + j];
    if (d == kUnreachable) return std::nullopt;
    return d;
  }
};

namespace detail {

// Hop counts from `source` over the support of z. Complement rows list
// non-edges, so their neighbours are the unvisited vertices not listed.
inline void bfs_row(const PathMatrix& z, std::size_t source, std::uint32_t* dist,
                    std::vector<std::uint32_t>& frontier, std::vector<std::uint32_t>& next,
                    std::vector<std::uint32_t>& unvisited) {
  const std::size_t n = z.n();
  std::fill(dist, dist + n, GeodesicResult::kUnreachable);
  dist[source] = 0;
  frontier.assign(1, static_cast<std::uint32_t>(source));
  const bool comp = z.is_complement();
  if (comp) {
    unvisited.clear();
    for (std::size_t v = 0; v < n; ++v)
      if (v != source) unvisited.push_back(static_cast<std::uint32_t>(v));
  }
  for (std::uint32_t level = 1; !frontier.empty(); ++level) {
    next.clear();
    for (std::uint32_t u : frontier) {
      auto cols = z.row_cols(u);
      if (!comp) {
        for (VertexId v : cols)
          if (dist[v] == GeodesicResult::kUnreachable) {
            dist[v] = level;
            next.push_back(v);
          }
        continue;
      }
      std::size_t keep = 0;
      for (std::uint32_t v : unvisited) {
        if (std::binary_search(cols.begin(), cols.end(), v)) {
          unvisited[keep++] = v;
        } else {
          dist[v] = level;
          next.push_back(v);
        }
      }
      unvisited.resize(keep);
    }
    std::sort(next.begin(), next.end());
    frontier.swap(next);
  }
}

}  // namespace detail

// Breadth-first search from every vertex over clip(z).
inline GeodesicResult shortest_paths(const PathMatrix& z) {
  const std::size_t n = z.n();
  if (static_cast<std::uint64_t>(n) * n > kMaxMaterializedEntries)
    throw DomainError("all-pairs distances for n=" + std::to_string(n) + " exceed the memory guard");
  GeodesicResult r;
  r.n = n;
  r.distances.assign(n * n, GeodesicResult::kUnreachable);
  parallel_for(
      n,
      [&](std::size_t begin, std::size_t end) {
        std::vector<std::uint32_t> frontier, next, unvisited;
        for (std::size_t s = begin; s < end; ++s)
          detail::bfs_row(z, s, r.distances.data() + s * n, frontier, next, unvisited);
      },
      64);
  r.eccentricity.resize(n);
  r.closeness.resize(n);
  r.reach.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t ecc = 0;
    bool all = true;
    std::uint64_t total = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      std::uint32_t d = r.distances[i * n + j];
      if (d == GeodesicResult::kUnreachable) {
        all = false;
        continue;
      }
      ecc = std::max(ecc, d);
      total += d;
      ++r.reach[i];
    }
    if (all) r.eccentricity[i] = ecc;
    if (r.reach[i] > 0)
      r.closeness[i] = static_cast<double>(total) / static_cast<double>(r.reach[i]);
    if (r.eccentricity[i]) {
      if (!r.radius || ecc < *r.radius) r.radius = ecc;
      if (!r.diameter || ecc > *r.diameter) r.diameter = ecc;
    }
  }
  return r;
}

// ---- PageRank ----

struct PageRankConfig {
  double delta = 0.85;
  double epsilon = 1e-9;
  std::size_t max_iters = 1000;

  void validate() const {
    if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("delta must lie in (0, 1]");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw DomainError("epsilon must be positive");
    if (max_iters == 0) throw DomainError("max-iters must be at least 1");
  }
};

struct PageRankResult {
  std::vector<double> rank;
  std::size_t iterations = 0;
  double residual = 0.0;
};

// Dense delta * P1 + (1 - delta) * P2, where P1 row-normalizes z by weighted
// out-sum (empty rows become uniform) and P2 is uniform. For checking only.
inline std::vector<double> merged_transition_matrix(const PathMatrix& z, double delta) {
  const std::size_t n = z.n();
  if (n == 0 || n > 4096) throw DomainError("merged matrix is limited to 1 <= n <= 4096");
  std::vector<double> m(n * n, 0.0);
  const double uniform = 1.0 / static_cast<double>(n);
  auto sums = z.row_sums();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m[i * n + j] = (1.0 - delta) * uniform;
  z.for_each_nonzero([&](VertexId i, VertexId j, double v) {
    m[i * n + j] += delta * (v / sums[i]);
  });
  for (std::size_t i = 0; i < n; ++i)
    if (sums[i] <= 0.0)
      for (std::size_t j = 0; j < n; ++j) m[i * n + j] += delta * uniform;
  return m;
}

// Power iteration on the merged chain starting from the uniform vector.
// Stops when the L2 change drops below epsilon.
inline PageRankResult pagerank(const PathMatrix& z, const PageRankConfig& cfg) {
  cfg.validate();
  const std::size_t n = z.n();
  if (n == 0) throw DomainError("pagerank needs at least one vertex");
  const double nd = static_cast<double>(n);
  auto sums = z.row_sums();
  std::vector<double> pi(n, 1.0 / nd), next(n), scratch(n);
  PageRankResult out;
  for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    // Mass spread over every column: dangling rows and complement rows.
    for (std::size_t i = 0; i < n; ++i) scratch[i] = sums[i] <= 0.0 ? pi[i] / nd : 0.0;
    double broadcast = pairwise_sum(scratch);
    for (std::size_t i = 0; i < n; ++i) {
      if (sums[i] <= 0.0) continue;
      double share = pi[i] / sums[i];
      auto cols = z.row_cols(i);
      if (z.is_complement()) {
        scratch[i] = share;
        for (VertexId j : cols) next[j] -= share;
      } else {
        auto vals = z.row_vals(i);
        for (std::size_t k = 0; k < cols.size(); ++k) next[cols[k]] += share * vals[k];
      }
    }
    if (z.is_complement()) {
      for (std::size_t i = 0; i < n; ++i)
        if (sums[i] <= 0.0) scratch[i] = 0.0;
      broadcast += pairwise_sum(scratch);
    }
    double total = pairwise_sum(pi);
    for (std::size_t j = 0; j < n; ++j)
      next[j] = cfg.delta * (next[j] + broadcast) + (1.0 - cfg.delta) * total / nd;
    double norm = pairwise_sum(next);
    for (auto& v : next) v /= norm;
    for (std::size_t j = 0; j < n; ++j) scratch[j] = (next[j] - pi[j]) * (next[j] - pi[j]);
    out.residual = std::sqrt(pairwise_sum(scratch));
    pi.swap(next);
    out.iterations = it;
    if (out.residual < cfg.epsilon) {
      out.rank = std::move(pi);
      return out;
    }
  }
  throw DomainError("pagerank did not converge in " + std::to_string(cfg.max_iters) +
                    " iterations; residual " + std::to_string(out.residual));
}

// ---- spreading activation ----

struct SpreadConfig {
  std::size_t steps = 3;
  double decay = 1.0;
  double threshold = 0.0;
};

// Each step moves the energy vector one hop along the row-normalized path
// matrix, multiplies by `decay` and zeroes entries below `threshold`.
// Returns the total energy that passed through each vertex, seed included.
// Energy reaching a vertex without outgoing paths stops there.
inline std::vector<double> spreading_activation(const PathMatrix& z,
                                                const std::vector<double>& seed,
                                                const SpreadConfig& cfg) {
  const std::size_t n = z.n();
  if (seed.size() != n) throw DomainError("seed vector has the wrong length");
  for (double v : seed)
    if (!std::isfinite(v) || v < 0.0) throw DomainError("seed energy must be finite and nonnegative");
  if (!(cfg.decay >= 0.0 && cfg.decay <= 1.0)) throw DomainError("decay must lie in [0, 1]");
  if (!(cfg.threshold >= 0.0) || !std::isfinite(cfg.threshold))
    throw DomainError("threshold must be nonnegative");
  auto sums = z.row_sums();
  std::vector<double> pi = seed, total = seed, next(n);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    std::fill(next.begin(), next.end(), 0.0);
    double broadcast = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pi[i] == 0.0 || sums[i] <= 0.0) continue;
      double share = pi[i] / sums[i];
      auto cols = z.row_cols(i);
      if (z.is_complement()) {
        broadcast += share;
        for (VertexId j : cols) next[j] -= share;
      } else {
        auto vals = z.row_vals(i);
        for (std::size_t k = 0; k < cols.size(); ++k) next[cols[k]] += share * vals[k];
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      double v = cfg.decay * (next[j] + broadcast);
      if (v < cfg.threshold || v < 0.0) v = 0.0;
      next[j] = v;
      total[j] += v;
    }
    pi.swap(next);
  }
  return total;
}

// ---- assortativity ----

// A per-vertex attribute, indexed by vertex id. Missing values are nullopt.
struct VertexProperty {
  enum class Kind : std::uint8_t { Scalar, Categorical };
  Kind kind = Kind::Scalar;
  std::vector<std::optional<double>> scalar;
  std::vector<std::optional<std::string>> category;

  static VertexProperty scalars(const std::vector<double>& values) {
    VertexProperty p;
    p.kind = Kind::Scalar;
    p.scalar.assign(values.begin(), values.end());
    return p;
  }

  static VertexProperty categories(const std::vector<std::string>& values) {
    VertexProperty p;
    p.kind = Kind::Categorical;
    p.category.assign(values.begin(), values.end());
    return p;
  }
};

namespace detail {

inline void require_entries(const PathMatrix& z) {
  if (z.nnz() == 0) throw DomainError("assortativity needs at least one path");
  if (z.nnz() > kMaxMaterializedEntries) throw DomainError("path matrix too dense for assortativity");
}

template <typename T>
const T& property_at(const std::vector<std::optional<T>>& values, VertexId v) {
  if (v >= values.size() || !values[v])
    throw DomainError("no property value for vertex " + std::to_string(v));
  return *values[v];
}

}  // namespace detail

// Weighted Pearson correlation between tail and head property values, one
// observation per nonzero entry weighted by its share of the total weight.
inline double assortativity_scalar(const PathMatrix& z, const VertexProperty& prop) {
  if (prop.kind != VertexProperty::Kind::Scalar) throw DomainError("scalar property expected");
  detail::require_entries(z);
  std::vector<double> w, a, b;
  z.for_each_nonzero([&](VertexId i, VertexId j, double v) {
    w.push_back(v);
    a.push_back(detail::property_at(prop.scalar, i));
    b.push_back(detail::property_at(prop.scalar, j));
  });
  const std::size_t m = w.size();
  const double total = pairwise_sum(w);
  std::vector<double> t(m);
  for (std::size_t k = 0; k < m; ++k) w[k] /= total;
  for (std::size_t k = 0; k < m; ++k) t[k] = w[k] * a[k];
  const double mean_a = pairwise_sum(t);
  for (std::size_t k = 0; k < m; ++k) t[k] = w[k] * b[k];
  const double mean_b = pairwise_sum(t);
  for (std::size_t k = 0; k < m; ++k) t[k] = w[k] * (a[k] - mean_a) * (b[k] - mean_b);
  const double cov = pairwise_sum(t);
  for (std::size_t k = 0; k < m; ++k) t[k] = w[k] * (a[k] - mean_a) * (a[k] - mean_a);
  const double var_a = pairwise_sum(t);
  for (std::size_t k = 0; k < m; ++k) t[k] = w[k] * (b[k] - mean_b) * (b[k] - mean_b);
  const double var_b = pairwise_sum(t);
  double scale = 1.0;
  for (std::size_t k = 0; k < m; ++k) scale = std::max({scale, a[k] * a[k], b[k] * b[k]});
  if (var_a <= 1e-24 * scale || var_b <= 1e-24 * scale) throw DomainError("degenerate property");
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

// (sum_a e_aa - sum_a i_a j_a) / (1 - sum_a i_a j_a) with e, i, j measured as
// fractions of total path weight.
inline double assortativity_categorical(const PathMatrix& z, const VertexProperty& prop) {
  if (prop.kind != VertexProperty::Kind::Categorical)
    throw DomainError("categorical property expected");
  detail::require_entries(z);
  std::map<std::string, std::size_t> index;
  std::vector<std::size_t> ta, hb;
  std::vector<double> w;
  z.for_each_nonzero([&](VertexId i, VertexId j, double v) {
    const auto& x = detail::property_at(prop.category, i);
    const auto& y = detail::property_at(prop.category, j);
    ta.push_back(index.emplace(x, index.size()).first->second);
    hb.push_back(index.emplace(y, index.size()).first->second);
    w.push_back(v);
  });
  const std::size_t c = index.size();
  const double total = pairwise_sum(w);
  std::vector<std::vector<double>> tail_terms(c), head_terms(c), same_terms(c);
  for (std::size_t k = 0; k < w.size(); ++k) {
    double f = w[k] / total;
    tail_terms[ta[k]].push_back(f);
    head_terms[hb[k]].push_back(f);
    if (ta[k] == hb[k]) same_terms[ta[k]].push_back(f);
  }
  std::vector<double> diag(c), mix(c);
  for (std::size_t a = 0; a < c; ++a) {
    diag[a] = pairwise_sum(same_terms[a]);
    mix[a] = pairwise_sum(tail_terms[a]) * pairwise_sum(head_terms[a]);
  }
  const double trace = pairwise_sum(diag);
  const double expected = pairwise_sum(mix);
  if (1.0 - expected <= 1e-15) throw DomainError("degenerate: one category");
  return (trace - expected) / (1.0 - expected);
}

}  // namespace pathweave
