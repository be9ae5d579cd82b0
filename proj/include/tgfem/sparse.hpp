#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "tgfem/mesh.hpp"

namespace tgfem {

/// Compressed-row sparsity structure; column indices strictly increase per row.
struct SparsityPattern {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<Index> cols;

  [[nodiscard]] std::size_t nnz() const { return cols.size(); }

  /// Position of (i, j) in `cols`, or npos when not stored.
  [[nodiscard]] std::size_t find(std::size_t i, std::size_t j) const {
    const auto first = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
    const auto last = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
    const auto it = std::lower_bound(first, last, static_cast<Index>(j));
    if (it == last || *it != static_cast<Index>(j)) {
      return npos;
    }
    return static_cast<std::size_t>(it - cols.begin());
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Vertex-to-vertex coupling of a P1 discretisation (diagonal included).
[[nodiscard]] inline std::shared_ptr<const SparsityPattern> make_pattern(const Mesh &mesh) {
  const std::size_t n = mesh.num_vertices();
  std::vector<std::vector<Index>> adj(n);
  for (const auto &t : mesh.triangles) {
    for (auto a : t.v) {
      for (auto b : t.v) {
        adj[a].push_back(b);
      }
    }
  }
  auto p = std::make_shared<SparsityPattern>();
  p->n = n;
  p->row_ptr.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto &row = adj[i];
    row.push_back(static_cast<Index>(i));
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    p->row_ptr[i + 1] = p->row_ptr[i] + row.size();
  }
  p->cols.reserve(p->row_ptr[n]);
  for (auto &row : adj) {
    p->cols.insert(p->cols.end(), row.begin(), row.end());
  }
  return p;
}

/// CSR matrix over a shared, immutable sparsity pattern.
class SparseMatrix {
public:
  SparseMatrix() = default;

  explicit SparseMatrix(std::shared_ptr<const SparsityPattern> pattern, bool symmetric = true)
      : pattern_(std::move(pattern)), values_(pattern_->nnz(), 0.0), symmetric_(symmetric) {}

  /// Dense-to-CSR conversion storing only nonzero entries and the diagonal.
  [[nodiscard]] static SparseMatrix from_dense(const std::vector<std::vector<double>> &dense, bool symmetric) {
    auto p = std::make_shared<SparsityPattern>();
    p->n = dense.size();
    p->row_ptr.assign(p->n + 1, 0);
    std::vector<double> vals;
    for (std::size_t i = 0; i < p->n; ++i) {
      for (std::size_t j = 0; j < p->n; ++j) {
        if (dense[i][j] != 0.0 || i == j) {
          p->cols.push_back(static_cast<Index>(j));
          vals.push_back(dense[i][j]);
        }
      }
      p->row_ptr[i + 1] = p->cols.size();
    }
    SparseMatrix m(std::move(p), symmetric);
    m.values_ = std::move(vals);
    return m;
  }

  [[nodiscard]] std::size_t size() const { return pattern_ ? pattern_->n : 0; }
  [[nodiscard]] const SparsityPattern &pattern() const { return *pattern_; }
  [[nodiscard]] const std::shared_ptr<const SparsityPattern> &pattern_ptr() const { return pattern_; }
  [[nodiscard]] std::span<double> values() { return values_; }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] bool symmetric() const { return symmetric_; }
  void set_symmetric(bool s) { symmetric_ = s; }

  void add(std::size_t i, std::size_t j, double v) {
    const auto k = pattern_->find(i, j);
    if (k == SparsityPattern::npos) {
      throw std::out_of_range("entry outside sparsity pattern");
    }
    values_[k] += v;
  }

  [[nodiscard]] double at(std::size_t i, std::size_t j) const {
    const auto k = pattern_->find(i, j);
    return k == SparsityPattern::npos ? 0.0 : values_[k];
  }

  void multiply(std::span<const double> x, std::span<double> y) const {
    const auto &rp = pattern_->row_ptr;
    const auto &c = pattern_->cols;
    for (std::size_t i = 0; i < pattern_->n; ++i) {
      double s = 0.0;
      for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) {
        s += values_[k] * x[static_cast<std::size_t>(c[k])];
      }
      y[i] = s;
    }
  }

  [[nodiscard]] std::vector<double> operator*(std::span<const double> x) const {
    std::vector<double> y(size());
    multiply(x, y);
    return y;
  }

  [[nodiscard]] std::vector<double> diagonal() const {
    std::vector<double> d(size());
    for (std::size_t i = 0; i < size(); ++i) {
      d[i] = at(i, i);
    }
    return d;
  }

  /// Entrywise sum; both operands must share the same pattern.
  SparseMatrix &operator+=(const SparseMatrix &other) {
    if (other.pattern_ != pattern_ &&
        (other.pattern_->row_ptr != pattern_->row_ptr || other.pattern_->cols != pattern_->cols)) {
      throw std::invalid_argument("sparse addition requires identical sparsity patterns");
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
      values_[k] += other.values_[k];
    }
    symmetric_ = symmetric_ && other.symmetric_;
    return *this;
  }

  friend SparseMatrix operator+(SparseMatrix a, const SparseMatrix &b) {
    a += b;
    return a;
  }

  /// max |A_ij - A_ji| / max |A_ij|.
  [[nodiscard]] double asymmetry() const {
    double diff = 0.0;
    double scale = 0.0;
    const auto &rp = pattern_->row_ptr;
    for (std::size_t i = 0; i < size(); ++i) {
      for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) {
        const auto j = static_cast<std::size_t>(pattern_->cols[k]);
        diff = std::max(diff, std::abs(values_[k] - at(j, i)));
        scale = std::max(scale, std::abs(values_[k]));
      }
    }
    return scale > 0.0 ? diff / scale : 0.0;
  }

  [[nodiscard]] std::vector<std::vector<double>> to_dense() const {
    std::vector<std::vector<double>> d(size(), std::vector<double>(size(), 0.0));
    const auto &rp = pattern_->row_ptr;
    for (std::size_t i = 0; i < size(); ++i) {
      for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) {
        d[i][static_cast<std::size_t>(pattern_->cols[k])] = values_[k];
      }
    }
    return d;
  }

private:
  std::shared_ptr<const SparsityPattern> pattern_;
  std::vector<double> values_;
  bool symmetric_ = true;
};

} // namespace tgfem
