#pragma once

// The eight path-algebra operations over PathMatrix: traverse (matmul,
// transpose), filter (hadamard, not_, clip, vertex_out, vertex_in), weight
// (scale) and merge (add). All are pure functions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pathweave/error.hpp"
#include "pathweave/parallel.hpp"
#include "pathweave/path_matrix.hpp"

namespace pathweave {

namespace detail {

inline void require_same_order(const PathMatrix& a, const PathMatrix& b, const char* op) {
  if (a.n() != b.n())
    throw DomainError(std::string(op) + ": dimension mismatch (" + std::to_string(a.n()) +
                      " vs " + std::to_string(b.n()) + ")");
}

// Integer pipelines stay exact while every value is below 2^53. Partial sums
// of nonnegative terms are monotone, so checking the final values suffices.
inline void check_exact(const std::vector<double>& vals) {
  for (double v : vals)
    if (v >= kExactIntegerLimit)
      throw DomainError("path count overflow: value exceeds the exact integer range 2^53");
}

inline void check_budget(std::uint64_t entries) {
  if (entries > kMaxMaterializedEntries)
    throw DomainError("result too dense to materialize (" + std::to_string(entries) +
                      " entries)");
}

struct RowBuffers {
  std::vector<std::vector<VertexId>> cols;
  std::vector<std::vector<double>> vals;
  explicit RowBuffers(std::size_t n) : cols(n), vals(n) {}

  PathMatrix assemble(std::size_t n, bool integral) {
    std::vector<std::size_t> rp(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) rp[i + 1] = rp[i] + cols[i].size();
    std::vector<VertexId> c;
    std::vector<double> v;
    c.reserve(rp[n]);
    v.reserve(rp[n]);
    for (std::size_t i = 0; i < n; ++i) {
      c.insert(c.end(), cols[i].begin(), cols[i].end());
      v.insert(v.end(), vals[i].begin(), vals[i].end());
      std::vector<VertexId>().swap(cols[i]);
      std::vector<double>().swap(vals[i]);
    }
    if (integral) check_exact(v);
    return PathMatrix::sparse_from_csr(n, std::move(rp), std::move(c), std::move(v));
  }
};

// Row-wise product of two sparse matrices with a dense accumulator per worker.
// `pattern_only_b` treats every stored entry of b as 1.
inline PathMatrix spgemm(const PathMatrix& a, const PathMatrix& b, bool pattern_only_b) {
  const std::size_t n = a.n();
  RowBuffers out(n);
  parallel_for(
      n,
      [&](std::size_t lo, std::size_t hi) {
        std::vector<double> acc(n, 0.0);
        std::vector<std::size_t> mark(n, static_cast<std::size_t>(-1));
        std::vector<VertexId> touched;
        for (std::size_t i = lo; i < hi; ++i) {
          touched.clear();
          auto ac = a.row_cols(i);
          auto av = a.row_vals(i);
          for (std::size_t k = 0; k < ac.size(); ++k) {
            VertexId l = ac[k];
            double x = av[k];
            auto bc = b.row_cols(l);
            auto bv = b.row_vals(l);
            for (std::size_t q = 0; q < bc.size(); ++q) {
              VertexId j = bc[q];
              if (mark[j] != i) {
                mark[j] = i;
                acc[j] = 0.0;
                touched.push_back(j);
              }
              acc[j] += pattern_only_b ? x : x * bv[q];
            }
          }
          std::sort(touched.begin(), touched.end());
          auto& rc = out.cols[i];
          auto& rv = out.vals[i];
          rc.reserve(touched.size());
          rv.reserve(touched.size());
          for (VertexId j : touched) {
            if (acc[j] > 0.0) {
              rc.push_back(j);
              rv.push_back(acc[j]);
            }
          }
        }
      },
      256);
  return out.assemble(n, a.is_integral() && b.is_integral());
}

// a * complement(P) = rowsum(a) broadcast - a * P.
inline PathMatrix spgemm_complement_right(const PathMatrix& a, const PathMatrix& comp) {
  const std::size_t n = a.n();
  PathMatrix subtract = spgemm(a, comp, true);
  std::vector<double> rs = a.row_sums();
  std::uint64_t dense_rows = 0;
  for (double s : rs)
    if (s > 0.0) ++dense_rows;
  check_budget(dense_rows * n);
  const bool integral = a.is_integral();
  RowBuffers out(n);
  parallel_for(
      n,
      [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
          if (rs[i] <= 0.0) continue;
          auto sc = subtract.row_cols(i);
          auto sv = subtract.row_vals(i);
          auto& rc = out.cols[i];
          auto& rv = out.vals[i];
          std::size_t k = 0;
          for (std::size_t j = 0; j < n; ++j) {
            double v = rs[i];
            if (k < sc.size() && sc[k] == j) v -= sv[k++];
            if (integral ? v > 0.0 : v > kZeroTolerance) {
              rc.push_back(static_cast<VertexId>(j));
              rv.push_back(v);
            }
          }
        }
      },
      256);
  return out.assemble(n, integral);
}

}  // namespace detail

// Pattern transpose; keeps the representation.
inline PathMatrix transpose(const PathMatrix& a) {
  const std::size_t n = a.n();
  std::vector<std::size_t> rp(n + 1, 0);
  for (VertexId c : a.cols()) ++rp[c + 1];
  for (std::size_t i = 0; i < n; ++i) rp[i + 1] += rp[i];
  std::vector<VertexId> cols(a.stored());
  std::vector<double> vals(a.is_complement() ? 0 : a.stored());
  std::vector<std::size_t> next(rp.begin(), rp.end() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    auto c = a.row_cols(i);
    auto v = a.row_vals(i);
    for (std::size_t k = 0; k < c.size(); ++k) {
      std::size_t dst = next[c[k]]++;
      cols[dst] = static_cast<VertexId>(i);
      if (!a.is_complement()) vals[dst] = v[k];
    }
  }
  if (a.is_complement())
    return PathMatrix::complement_from_csr(n, std::move(rp), std::move(cols));
  return PathMatrix::sparse_from_csr(n, std::move(rp), std::move(cols), std::move(vals));
}

// Ordinary matrix product: entry (i,j) counts (or weighs) composed paths.
inline PathMatrix matmul(const PathMatrix& a, const PathMatrix& b) {
  detail::require_same_order(a, b, "matmul");
  if (!a.is_complement() && !b.is_complement()) return detail::spgemm(a, b, false);
  if (!a.is_complement()) return detail::spgemm_complement_right(a, b);
  if (!b.is_complement()) {
    // comp(P) * b = (b^T * comp(P^T))^T
    return transpose(detail::spgemm_complement_right(transpose(b), transpose(a)));
  }
  return detail::spgemm_complement_right(a.as_sparse(), b);
}

// Entrywise product.
inline PathMatrix hadamard(const PathMatrix& a, const PathMatrix& b) {
  detail::require_same_order(a, b, "hadamard");
  const std::size_t n = a.n();
  if (a.is_complement() && b.is_complement()) {
    // ones except P, times ones except Q = ones except (P u Q)
    std::vector<std::size_t> rp(n + 1, 0);
    std::vector<VertexId> cols;
    cols.reserve(a.stored() + b.stored());
    for (std::size_t i = 0; i < n; ++i) {
      auto x = a.row_cols(i), y = b.row_cols(i);
      std::set_union(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(cols));
      rp[i + 1] = cols.size();
    }
    return PathMatrix::complement_from_csr(n, std::move(rp), std::move(cols));
  }
  const PathMatrix& s = a.is_complement() ? b : a;
  const PathMatrix& other = a.is_complement() ? a : b;
  std::vector<std::size_t> rp(n + 1, 0);
  std::vector<VertexId> cols;
  std::vector<double> vals;
  if (other.is_complement()) {
    // Mask subtraction: keep entries of s outside the pattern.
    for (std::size_t i = 0; i < n; ++i) {
      auto sc = s.row_cols(i);
      auto sv = s.row_vals(i);
      auto pc = other.row_cols(i);
      std::size_t q = 0;
      for (std::size_t k = 0; k < sc.size(); ++k) {
        while (q < pc.size() && pc[q] < sc[k]) ++q;
        if (q < pc.size() && pc[q] == sc[k]) continue;
        cols.push_back(sc[k]);
        vals.push_back(sv[k]);
      }
      rp[i + 1] = cols.size();
    }
    return PathMatrix::sparse_from_csr(n, std::move(rp), std::move(cols), std::move(vals));
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto xc = a.row_cols(i), yc = b.row_cols(i);
    auto xv = a.row_vals(i), yv = b.row_vals(i);
    std::size_t p = 0, q = 0;
    while (p < xc.size() && q < yc.size()) {
      if (xc[p] < yc[q]) {
        ++p;
      } else if (yc[q] < xc[p]) {
        ++q;
      } else {
        double v = xv[p] * yv[q];
        if (v > 0.0) {
          cols.push_back(xc[p]);
          vals.push_back(v);
        }
        ++p;
        ++q;
      }
    }
    rp[i + 1] = cols.size();
  }
  if (a.is_integral() && b.is_integral()) detail::check_exact(vals);
  return PathMatrix::sparse_from_csr(n, std::move(rp), std::move(cols), std::move(vals));
}

// n(A) = 1 - A, defined on {0,1} matrices only.
inline PathMatrix not_(const PathMatrix& a) {
  if (!a.is_boolean())
    throw DomainError("not requires a {0,1} matrix; apply clip first");
  if (a.is_complement()) {
    std::vector<double> ones(a.stored(), 1.0);
    return PathMatrix::sparse_from_csr(a.n(), a.row_ptr(), a.cols(), std::move(ones));
  }
  return PathMatrix::complement_from_csr(a.n(), a.row_ptr(), a.cols());
}

// c(Z)_{ij} = 1 iff Z_{ij} > 0.
inline PathMatrix clip(const PathMatrix& a) {
  if (a.is_boolean()) return a;
  std::vector<double> ones(a.stored(), 1.0);
  return PathMatrix::sparse_from_csr(a.n(), a.row_ptr(), a.cols(), std::move(ones));
}

namespace detail {

// {0,1} matrix whose selected rows are all ones.
inline PathMatrix full_rows(std::size_t n, const std::vector<bool>& selected) {
  std::size_t k = static_cast<std::size_t>(std::count(selected.begin(), selected.end(), true));
  std::vector<std::size_t> rp(n + 1, 0);
  std::vector<VertexId> cols;
  bool as_complement = 2 * k > n;
  check_budget(static_cast<std::uint64_t>(as_complement ? n - k : k) * n);
  for (std::size_t i = 0; i < n; ++i) {
    if (selected[i] != as_complement)
      for (std::size_t j = 0; j < n; ++j) cols.push_back(static_cast<VertexId>(j));
    rp[i + 1] = cols.size();
  }
  if (as_complement) return PathMatrix::complement_from_csr(n, std::move(rp), std::move(cols));
  std::vector<double> ones(cols.size(), 1.0);
  return PathMatrix::sparse_from_csr(n, std::move(rp), std::move(cols), std::move(ones));
}

// {0,1} matrix whose selected columns are all ones.
inline PathMatrix full_cols(std::size_t n, const std::vector<bool>& selected) {
  std::size_t k = static_cast<std::size_t>(std::count(selected.begin(), selected.end(), true));
  bool as_complement = 2 * k > n;
  check_budget(static_cast<std::uint64_t>(as_complement ? n - k : k) * n);
  std::vector<VertexId> row;
  for (std::size_t j = 0; j < n; ++j)
    if (selected[j] != as_complement) row.push_back(static_cast<VertexId>(j));
  std::vector<std::size_t> rp(n + 1, 0);
  std::vector<VertexId> cols;
  cols.reserve(row.size() * n);
  for (std::size_t i = 0; i < n; ++i) {
    cols.insert(cols.end(), row.begin(), row.end());
    rp[i + 1] = cols.size();
  }
  if (as_complement) return PathMatrix::complement_from_csr(n, std::move(rp), std::move(cols));
  std::vector<double> ones(cols.size(), 1.0);
  return PathMatrix::sparse_from_csr(n, std::move(rp), std::move(cols), std::move(ones));
}

}  // namespace detail

// v-(Z, p): row i becomes all ones iff its (weighted) sum exceeds p.
inline PathMatrix vertex_out(const PathMatrix& a, std::uint64_t p = 0) {
  auto sums = a.row_sums();
  std::vector<bool> keep(a.n());
  for (std::size_t i = 0; i < a.n(); ++i) keep[i] = sums[i] > static_cast<double>(p);
  return detail::full_rows(a.n(), keep);
}

// v+(Z, p): column j becomes all ones iff its (weighted) sum exceeds p.
inline PathMatrix vertex_in(const PathMatrix& a, std::uint64_t p = 0) {
  auto sums = a.col_sums();
  std::vector<bool> keep(a.n());
  for (std::size_t j = 0; j < a.n(); ++j) keep[j] = sums[j] > static_cast<double>(p);
  return detail::full_cols(a.n(), keep);
}

// lambda * Z with lambda >= 0.
inline PathMatrix scale(const PathMatrix& a, double lambda) {
  if (!std::isfinite(lambda) || lambda < 0.0)
    throw DomainError("scale factor must be finite and nonnegative");
  if (lambda == 0.0) return PathMatrix::zeros(a.n());
  if (lambda == 1.0) return a;
  PathMatrix s = a.as_sparse();
  std::vector<double> vals(s.vals());
  for (double& v : vals) v *= lambda;
  bool integral = s.is_integral() && lambda == std::floor(lambda);
  if (integral) detail::check_exact(vals);
  return PathMatrix::sparse_from_csr(s.n(), s.row_ptr(), s.cols(), std::move(vals));
}

// Entrywise sum.
inline PathMatrix add(const PathMatrix& a, const PathMatrix& b) {
  detail::require_same_order(a, b, "add");
  if (a.is_complement() || b.is_complement()) return add(a.as_sparse(), b.as_sparse());
  const std::size_t n = a.n();
  std::vector<std::size_t> rp(n + 1, 0);
  std::vector<VertexId> cols;
  std::vector<double> vals;
  cols.reserve(a.stored() + b.stored());
  vals.reserve(a.stored() + b.stored());
  for (std::size_t i = 0; i < n; ++i) {
    auto xc = a.row_cols(i), yc = b.row_cols(i);
    auto xv = a.row_vals(i), yv = b.row_vals(i);
    std::size_t p = 0, q = 0;
    while (p < xc.size() || q < yc.size()) {
      if (q == yc.size() || (p < xc.size() && xc[p] < yc[q])) {
        cols.push_back(xc[p]);
        vals.push_back(xv[p++]);
      } else if (p == xc.size() || yc[q] < xc[p]) {
        cols.push_back(yc[q]);
        vals.push_back(yv[q++]);
      } else {
        cols.push_back(xc[p]);
        vals.push_back(xv[p++] + yv[q++]);
      }
    }
    rp[i + 1] = cols.size();
  }
  if (a.is_integral() && b.is_integral()) detail::check_exact(vals);
  return PathMatrix::sparse_from_csr(n, std::move(rp), std::move(cols), std::move(vals));
}

// clip(a + b) without forming the sum: the union of supports. Stays in the
// complement representation when either operand is a complement.
inline PathMatrix clip_add(const PathMatrix& a, const PathMatrix& b) {
  detail::require_same_order(a, b, "add");
  const std::size_t n = a.n();
  std::vector<std::size_t> rp(n + 1, 0);
  std::vector<VertexId> cols;
  if (a.is_complement() && b.is_complement()) {
    for (std::size_t i = 0; i < n; ++i) {
      auto x = a.row_cols(i), y = b.row_cols(i);
      std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(cols));
      rp[i + 1] = cols.size();
    }
    return PathMatrix::complement_from_csr(n, std::move(rp), std::move(cols));
  }
  if (a.is_complement() || b.is_complement()) {
    const PathMatrix& c = a.is_complement() ? a : b;
    const PathMatrix& s = a.is_complement() ? b : a;
    for (std::size_t i = 0; i < n; ++i) {
      auto x = c.row_cols(i), y = s.row_cols(i);
      std::set_difference(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(cols));
      rp[i + 1] = cols.size();
    }
    return PathMatrix::complement_from_csr(n, std::move(rp), std::move(cols));
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto x = a.row_cols(i), y = b.row_cols(i);
    std::set_union(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(cols));
    rp[i + 1] = cols.size();
  }
  std::vector<double> ones(cols.size(), 1.0);
  return PathMatrix::sparse_from_csr(n, std::move(rp), std::move(cols), std::move(ones));
}

}  // namespace pathweave
