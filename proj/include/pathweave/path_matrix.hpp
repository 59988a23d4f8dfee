#pragma once

// Path matrices: nonnegative n x n matrices stored either as sparse CSR or as
// the complement of a sparse boolean pattern (the {0,1} matrix with ones
// everywhere except the pattern). The complement form keeps `not` filters and
// the all-ones matrix O(pattern) instead of O(n^2).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pathweave/error.hpp"
#include "pathweave/graph_store.hpp"

namespace pathweave {

enum class Repr : std::uint8_t { Sparse, BoolComplement };

// Boolean implies Count implies Real. Derived from the stored values.
enum class ValueKind : std::uint8_t { Boolean, Count, Real };

inline const char* to_string(Repr r) {
  return r == Repr::Sparse ? "sparse" : "complement";
}

inline const char* to_string(ValueKind k) {
  switch (k) {
    case ValueKind::Boolean: return "boolean";
    case ValueKind::Count: return "count";
    case ValueKind::Real: return "real";
  }
  return "?";
}

// Largest value below which doubles represent every integer exactly.
inline constexpr double kExactIntegerLimit = 9007199254740992.0;  // 2^53

// Entries this small after a subtraction are treated as zero.
inline constexpr double kZeroTolerance = 1e-12;

// Refuse to expand a complement into more stored entries than this.
inline constexpr std::uint64_t kMaxMaterializedEntries = std::uint64_t{1} << 26;

struct MatrixEntry {
  VertexId row;
  VertexId col;
  double value;
  bool operator==(const MatrixEntry&) const = default;
};

class PathMatrix {
 public:
  PathMatrix() : row_ptr_(1, 0) {}

  static PathMatrix zeros(std::size_t n) {
    PathMatrix m;
    m.n_ = n;
    m.row_ptr_.assign(n + 1, 0);
    m.kind_ = ValueKind::Boolean;
    return m;
  }

  static PathMatrix ones(std::size_t n) {
    PathMatrix m = zeros(n);
    m.repr_ = Repr::BoolComplement;
    return m;
  }

  static PathMatrix identity(std::size_t n) {
    std::vector<std::pair<VertexId, VertexId>> diag;
    diag.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      diag.emplace_back(static_cast<VertexId>(i), static_cast<VertexId>(i));
    return from_pattern(n, std::move(diag));
  }

  // Duplicate coordinates are summed; zero entries are dropped.
  static PathMatrix from_entries(std::size_t n, std::vector<MatrixEntry> entries) {
    for (const auto& e : entries) {
      if (e.row >= n || e.col >= n)
        throw DomainError("matrix entry (" + std::to_string(e.row) + "," +
                          std::to_string(e.col) + ") outside order " +
                          std::to_string(n));
      if (!std::isfinite(e.value) || e.value < 0.0)
        throw DomainError("path matrix entries must be finite and nonnegative");
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    PathMatrix m = zeros(n);
    m.cols_.reserve(entries.size());
    m.vals_.reserve(entries.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      while (k < entries.size() && entries[k].row == i) {
        VertexId c = entries[k].col;
        double v = 0.0;
        while (k < entries.size() && entries[k].row == i && entries[k].col == c)
          v += entries[k++].value;
        if (v > 0.0) {
          m.cols_.push_back(c);
          m.vals_.push_back(v);
        }
      }
      m.row_ptr_[i + 1] = m.cols_.size();
    }
    m.classify();
    return m;
  }

  static PathMatrix from_pattern(std::size_t n,
                                 std::vector<std::pair<VertexId, VertexId>> pairs) {
    std::vector<MatrixEntry> entries;
    entries.reserve(pairs.size());
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    for (auto [i, j] : pairs) entries.push_back({i, j, 1.0});
    return from_entries(n, std::move(entries));
  }

  // The {0,1} matrix that is 1 everywhere except at `pattern`.
  static PathMatrix complement(std::size_t n,
                               std::vector<std::pair<VertexId, VertexId>> pattern) {
    PathMatrix m = from_pattern(n, std::move(pattern));
    m.repr_ = Repr::BoolComplement;
    m.vals_.clear();
    m.kind_ = ValueKind::Boolean;
    return m;
  }

  static PathMatrix from_dense(std::size_t n, std::span<const double> values) {
    if (values.size() != n * n) throw DomainError("dense matrix size mismatch");
    std::vector<MatrixEntry> entries;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (values[i * n + j] != 0.0)
          entries.push_back({static_cast<VertexId>(i), static_cast<VertexId>(j),
                             values[i * n + j]});
    return from_entries(n, std::move(entries));
  }

  // Trusted constructors for kernels: rows sorted, no duplicates, values > 0.
  static PathMatrix sparse_from_csr(std::size_t n, std::vector<std::size_t> row_ptr,
                                    std::vector<VertexId> cols, std::vector<double> vals) {
    PathMatrix m;
    m.n_ = n;
    m.row_ptr_ = std::move(row_ptr);
    m.cols_ = std::move(cols);
    m.vals_ = std::move(vals);
    m.classify();
    return m;
  }

  static PathMatrix complement_from_csr(std::size_t n, std::vector<std::size_t> row_ptr,
                                        std::vector<VertexId> cols) {
    PathMatrix m;
    m.n_ = n;
    m.repr_ = Repr::BoolComplement;
    m.row_ptr_ = std::move(row_ptr);
    m.cols_ = std::move(cols);
    m.kind_ = ValueKind::Boolean;
    return m;
  }

  std::size_t n() const { return n_; }
  Repr repr() const { return repr_; }
  ValueKind kind() const { return kind_; }
  bool is_boolean() const { return kind_ == ValueKind::Boolean; }
  bool is_integral() const { return kind_ != ValueKind::Real; }
  bool is_complement() const { return repr_ == Repr::BoolComplement; }

  // Stored pattern size (nonzeros for sparse, zeros for complement).
  std::size_t stored() const { return cols_.size(); }

  std::uint64_t nnz() const {
    if (repr_ == Repr::Sparse) return cols_.size();
    return static_cast<std::uint64_t>(n_) * n_ - cols_.size();
  }

  std::span<const VertexId> row_cols(std::size_t i) const {
    return {cols_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }

  // Empty for the complement representation (all pattern values are 1).
  std::span<const double> row_vals(std::size_t i) const {
    if (repr_ == Repr::BoolComplement) return {};
    return {vals_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }

  std::size_t row_stored(std::size_t i) const { return row_ptr_[i + 1] - row_ptr_[i]; }

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<VertexId>& cols() const { return cols_; }
  const std::vector<double>& vals() const { return vals_; }

  double at(std::size_t i, std::size_t j) const {
    auto c = row_cols(i);
    auto it = std::lower_bound(c.begin(), c.end(), static_cast<VertexId>(j));
    bool hit = it != c.end() && *it == j;
    if (repr_ == Repr::BoolComplement) return hit ? 0.0 : 1.0;
    return hit ? vals_[row_ptr_[i] + static_cast<std::size_t>(it - c.begin())] : 0.0;
  }

  double row_sum(std::size_t i) const {
    if (repr_ == Repr::BoolComplement) return static_cast<double>(n_ - row_stored(i));
    double s = 0.0;
    for (double v : row_vals(i)) s += v;
    return s;
  }

  std::vector<double> row_sums() const {
    std::vector<double> s(n_);
    for (std::size_t i = 0; i < n_; ++i) s[i] = row_sum(i);
    return s;
  }

  std::vector<double> col_sums() const {
    std::vector<double> s(n_, 0.0);
    if (repr_ == Repr::BoolComplement) {
      std::fill(s.begin(), s.end(), static_cast<double>(n_));
      for (VertexId c : cols_) s[c] -= 1.0;
      return s;
    }
    for (std::size_t k = 0; k < cols_.size(); ++k) s[cols_[k]] += vals_[k];
    return s;
  }

  // Visits every nonzero entry in row-major order as f(row, col, value).
  template <typename F>
  void for_each_nonzero(F&& f) const {
    for (std::size_t i = 0; i < n_; ++i) {
      auto c = row_cols(i);
      if (repr_ == Repr::Sparse) {
        auto v = row_vals(i);
        for (std::size_t k = 0; k < c.size(); ++k)
          f(static_cast<VertexId>(i), c[k], v[k]);
      } else {
        std::size_t k = 0;
        for (std::size_t j = 0; j < n_; ++j) {
          if (k < c.size() && c[k] == j) {
            ++k;
            continue;
          }
          f(static_cast<VertexId>(i), static_cast<VertexId>(j), 1.0);
        }
      }
    }
  }

  std::vector<MatrixEntry> entries() const {
    std::vector<MatrixEntry> out;
    for_each_nonzero([&](VertexId i, VertexId j, double v) { out.push_back({i, j, v}); });
    return out;
  }

  std::vector<double> to_dense() const {
    if (n_ > 4096) throw DomainError("to_dense is limited to n <= 4096");
    std::vector<double> d(n_ * n_, 0.0);
    for_each_nonzero([&](VertexId i, VertexId j, double v) { d[i * n_ + j] = v; });
    return d;
  }

  // Same matrix in the sparse representation.
  PathMatrix as_sparse() const {
    if (repr_ == Repr::Sparse) return *this;
    std::uint64_t count = nnz();
    if (count > kMaxMaterializedEntries)
      throw DomainError("result too dense to materialize (" + std::to_string(count) +
                        " entries)");
    std::vector<std::size_t> rp(n_ + 1, 0);
    std::vector<VertexId> cols;
    cols.reserve(count);
    for_each_nonzero([&](VertexId i, VertexId j, double) {
      cols.push_back(j);
      rp[i + 1] = cols.size();
    });
    for (std::size_t i = 0; i < n_; ++i) rp[i + 1] = std::max(rp[i + 1], rp[i]);
    std::vector<double> vals(cols.size(), 1.0);
    return sparse_from_csr(n_, std::move(rp), std::move(cols), std::move(vals));
  }

  // Semantic equality, independent of representation.
  friend bool operator==(const PathMatrix& a, const PathMatrix& b) {
    if (a.n_ != b.n_) return false;
    if (a.repr_ == b.repr_)
      return a.row_ptr_ == b.row_ptr_ && a.cols_ == b.cols_ && a.vals_ == b.vals_;
    const PathMatrix& s = a.repr_ == Repr::Sparse ? a : b;
    const PathMatrix& c = a.repr_ == Repr::Sparse ? b : a;
    if (s.nnz() != c.nnz()) return false;
    for (std::size_t i = 0; i < s.n_; ++i) {
      auto sc = s.row_cols(i);
      auto sv = s.row_vals(i);
      auto cc = c.row_cols(i);
      if (sc.size() + cc.size() != s.n_) return false;
      std::size_t p = 0, q = 0;
      for (std::size_t j = 0; j < s.n_; ++j) {
        bool in_s = p < sc.size() && sc[p] == j;
        bool in_c = q < cc.size() && cc[q] == j;
        if (in_s == in_c) return false;
        if (in_s) {
          if (sv[p] != 1.0) return false;
          ++p;
        } else {
          ++q;
        }
      }
    }
    return true;
  }

 private:
  void classify() {
    kind_ = ValueKind::Boolean;
    for (double v : vals_) {
      if (v == 1.0) continue;
      if (v == std::floor(v) && v < kExactIntegerLimit) {
        kind_ = ValueKind::Count;
      } else {
        kind_ = ValueKind::Real;
        return;
      }
    }
  }

  std::size_t n_ = 0;
  Repr repr_ = Repr::Sparse;
  ValueKind kind_ = ValueKind::Boolean;
  std::vector<std::size_t> row_ptr_;
  std::vector<VertexId> cols_;
  std::vector<double> vals_;
};

// Largest absolute entrywise difference; intended for small matrices.
inline double max_abs_difference(const PathMatrix& a, const PathMatrix& b) {
  if (a.n() != b.n()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  std::vector<double> ra(a.n()), rb(b.n());
  auto fill_row = [](const PathMatrix& m, std::size_t i, std::vector<double>& row) {
    bool comp = m.is_complement();
    std::fill(row.begin(), row.end(), comp ? 1.0 : 0.0);
    auto c = m.row_cols(i);
    auto v = m.row_vals(i);
    for (std::size_t k = 0; k < c.size(); ++k) row[c[k]] = comp ? 0.0 : v[k];
  };
  for (std::size_t i = 0; i < a.n(); ++i) {
    fill_row(a, i, ra);
    fill_row(b, i, rb);
    for (std::size_t j = 0; j < a.n(); ++j) worst = std::max(worst, std::abs(ra[j] - rb[j]));
  }
  return worst;
}

// Entrywise |a - b| <= tol * max(1, |a|, |b|).
inline bool approx_equal(const PathMatrix& a, const PathMatrix& b, double tol) {
  if (a.n() != b.n()) return false;
  std::vector<double> ra(a.n()), rb(b.n());
  auto fill_row = [](const PathMatrix& m, std::size_t i, std::vector<double>& row) {
    bool comp = m.is_complement();
    std::fill(row.begin(), row.end(), comp ? 1.0 : 0.0);
    auto c = m.row_cols(i);
    auto v = m.row_vals(i);
    for (std::size_t k = 0; k < c.size(); ++k) row[c[k]] = comp ? 0.0 : v[k];
  };
  for (std::size_t i = 0; i < a.n(); ++i) {
    fill_row(a, i, ra);
    fill_row(b, i, rb);
    for (std::size_t j = 0; j < a.n(); ++j) {
      double scale = std::max({1.0, std::abs(ra[j]), std::abs(rb[j])});
      if (std::abs(ra[j] - rb[j]) > tol * scale) return false;
    }
  }
  return true;
}

// Filter matrices: row, column, single entry, identity, all ones, all zeros.
struct FilterSpec {
  enum class Kind : std::uint8_t { Row, Col, Entry, Identity, Ones, Zeros };
  Kind kind = Kind::Zeros;
  VertexId i = 0;
  VertexId j = 0;

  static FilterSpec row(VertexId i) { return {Kind::Row, i, 0}; }
  static FilterSpec col(VertexId i) { return {Kind::Col, i, 0}; }
  static FilterSpec entry(VertexId i, VertexId j) { return {Kind::Entry, i, j}; }
  static FilterSpec identity() { return {Kind::Identity, 0, 0}; }
  static FilterSpec ones() { return {Kind::Ones, 0, 0}; }
  static FilterSpec zeros() { return {Kind::Zeros, 0, 0}; }
  bool operator==(const FilterSpec&) const = default;
};

inline PathMatrix materialize_filter(const FilterSpec& f, std::size_t n) {
  auto check = [n](VertexId v) {
    if (v >= n)
      throw DomainError("filter index " + std::to_string(v) + " out of range for order " +
                        std::to_string(n));
  };
  std::vector<std::pair<VertexId, VertexId>> pairs;
  switch (f.kind) {
    case FilterSpec::Kind::Row:
      check(f.i);
      for (std::size_t j = 0; j < n; ++j) pairs.emplace_back(f.i, static_cast<VertexId>(j));
      return PathMatrix::from_pattern(n, std::move(pairs));
    case FilterSpec::Kind::Col:
      check(f.i);
      for (std::size_t r = 0; r < n; ++r) pairs.emplace_back(static_cast<VertexId>(r), f.i);
      return PathMatrix::from_pattern(n, std::move(pairs));
    case FilterSpec::Kind::Entry:
      check(f.i);
      check(f.j);
      pairs.emplace_back(f.i, f.j);
      return PathMatrix::from_pattern(n, std::move(pairs));
    case FilterSpec::Kind::Identity: return PathMatrix::identity(n);
    case FilterSpec::Kind::Ones: return PathMatrix::ones(n);
    case FilterSpec::Kind::Zeros: return PathMatrix::zeros(n);
  }
  return PathMatrix::zeros(n);
}

inline PathMatrix slice_matrix(const MultiRelTensor& t, std::string_view label) {
  const auto& s = t.slice(label);
  return PathMatrix::from_pattern(t.n(), s.pairs);
}

}  // namespace pathweave
