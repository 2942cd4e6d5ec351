/*
 * Copyright 2026 The msngo Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "msngo/error.hpp"

namespace msngo {

// Row-major matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
      throw DimensionError("DenseMatrix: " + std::to_string(values_.size()) +
                           " values for a " + std::to_string(rows_) + "x" +
                           std::to_string(cols_) + " matrix");
    }
  }

  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    DenseMatrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != c) throw DimensionError("DenseMatrix::from_rows: ragged rows");
      std::copy(row.begin(), row.end(), m.row(i).begin());
      ++i;
    }
    return m;
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return values_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return values_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& storage() const { return values_; }

  void fill(double v) { std::fill(values_.begin(), values_.end(), v); }

  bool same_shape(const DenseMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  DenseMatrix& operator+=(const DenseMatrix& o) {
    require_same_shape(o, "+=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  DenseMatrix& operator-=(const DenseMatrix& o) {
    require_same_shape(o, "-=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  DenseMatrix& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }

  friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
  friend DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
  friend DenseMatrix operator*(DenseMatrix a, double s) { return a *= s; }
  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

  std::string shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

 private:
  void require_same_shape(const DenseMatrix& o, const char* op) const {
    if (!same_shape(o)) {
      throw DimensionError(std::string("DenseMatrix ") + op + ": " + shape_string() + " vs " +
                           o.shape_string());
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// a * b
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + a.shape_string() + " x " + b.shape_string());
  }
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    const auto a_row = a.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a_row[k];
      if (aik == 0.0) continue;
      const auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

// aᵀ * b
inline DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: " + a.shape_string() + "ᵀ x " + b.shape_string());
  }
  DenseMatrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto a_row = a.row(k);
    const auto b_row = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a_row[i];
      if (aki == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
    }
  }
  return out;
}

// a * bᵀ
inline DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: " + a.shape_string() + " x " + b.shape_string() + "ᵀ");
  }
  DenseMatrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto a_row = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto b_row = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a_row[k] * b_row[k];
      out(i, j) = acc;
    }
  }
  return out;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

inline DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("hadamard: " + a.shape_string() + " vs " + b.shape_string());
  }
  DenseMatrix out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  return out;
}

// Adds a 1 x cols row vector to every row.
inline void add_row_vector(DenseMatrix& m, const DenseMatrix& bias) {
  if (bias.rows() != 1 || bias.cols() != m.cols()) {
    throw DimensionError("add_row_vector: bias " + bias.shape_string() + " for " +
                         m.shape_string());
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) r[j] += bias(0, j);
  }
}

inline DenseMatrix column_sums(const DenseMatrix& m) {
  DenseMatrix out(1, m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) out(0, j) += r[j];
  }
  return out;
}

inline DenseMatrix concat_cols(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("concat_cols: " + a.shape_string() + " | " + b.shape_string());
  }
  DenseMatrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = out.row(i);
    std::copy(a.row(i).begin(), a.row(i).end(), r.begin());
    std::copy(b.row(i).begin(), b.row(i).end(), r.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

inline DenseMatrix select_rows(const DenseMatrix& m, std::span<const std::size_t> idx) {
  DenseMatrix out(idx.size(), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto src = m.row(idx[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("max_abs_diff: " + a.shape_string() + " vs " + b.shape_string());
  }
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
  return d;
}

inline double sum(const DenseMatrix& m) {
  double s = 0.0;
  for (double v : m.values()) s += v;
  return s;
}

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

// Compressed-row sparse matrix. Column indices are sorted and unique within
// each row.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  // Duplicate (row, col) entries are summed.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> triplets) {
    for (const auto& t : triplets) {
      if (t.row >= rows || t.col >= cols) {
        throw DimensionError("SparseMatrix: entry (" + std::to_string(t.row) + "," +
                             std::to_string(t.col) + ") outside " + std::to_string(rows) +
                             "x" + std::to_string(cols));
      }
    }
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
      return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    SparseMatrix s;
    s.rows_ = rows;
    s.cols_ = cols;
    s.offsets_.assign(rows + 1, 0);
    for (std::size_t k = 0; k < triplets.size(); ++k) {
      const auto& t = triplets[k];
      if (!s.indices_.empty() && k > 0 && triplets[k - 1].row == t.row &&
          triplets[k - 1].col == t.col) {
        s.values_.back() += t.value;
        continue;
      }
      s.indices_.push_back(t.col);
      s.values_.push_back(t.value);
      s.offsets_[t.row + 1] = s.indices_.size();
    }
    for (std::size_t r = 1; r <= rows; ++r) s.offsets_[r] = std::max(s.offsets_[r], s.offsets_[r - 1]);
    return s;
  }

  static SparseMatrix identity(std::size_t n) {
    std::vector<Triplet> t;
    t.reserve(n);
    for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    return from_triplets(n, n, std::move(t));
  }

  static SparseMatrix from_dense(const DenseMatrix& d) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < d.rows(); ++i)
      for (std::size_t j = 0; j < d.cols(); ++j)
        if (d(i, j) != 0.0) t.push_back({i, j, d(i, j)});
    return from_triplets(d.rows(), d.cols(), std::move(t));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const std::size_t> offsets() const { return offsets_; }
  std::span<const std::size_t> indices() const { return indices_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  std::span<const std::size_t> row_indices(std::size_t r) const {
    return {indices_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {values_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }
  std::span<double> row_values(std::size_t r) {
    return {values_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }

  // Same sparsity pattern, new values.
  SparseMatrix with_values(std::vector<double> values) const {
    if (values.size() != values_.size()) {
      throw DimensionError("SparseMatrix::with_values: nnz mismatch");
    }
    SparseMatrix s = *this;
    s.values_ = std::move(values);
    return s;
  }

  double at(std::size_t r, std::size_t c) const {
    const auto idx = row_indices(r);
    auto it = std::lower_bound(idx.begin(), idx.end(), c);
    if (it == idx.end() || *it != c) return 0.0;
    return values_[offsets_[r] + static_cast<std::size_t>(it - idx.begin())];
  }

  DenseMatrix to_dense() const {
    DenseMatrix d(rows_, cols_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) d(r, indices_[k]) = values_[k];
    return d;
  }

  SparseMatrix transposed() const {
    std::vector<Triplet> t;
    t.reserve(nnz());
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k)
        t.push_back({indices_[k], r, values_[k]});
    return from_triplets(cols_, rows_, std::move(t));
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::size_t> indices_;
  std::vector<double> values_;
};

// s * d
inline DenseMatrix sparse_dense_matmul(const SparseMatrix& s, const DenseMatrix& d) {
  if (s.cols() != d.rows()) {
    throw DimensionError("sparse_dense_matmul: " + std::to_string(s.rows()) + "x" +
                         std::to_string(s.cols()) + " x " + d.shape_string());
  }
  DenseMatrix out(s.rows(), d.cols());
  for (std::size_t r = 0; r < s.rows(); ++r) {
    auto out_row = out.row(r);
    const auto idx = s.row_indices(r);
    const auto val = s.row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto d_row = d.row(idx[k]);
      for (std::size_t j = 0; j < d.cols(); ++j) out_row[j] += val[k] * d_row[j];
    }
  }
  return out;
}

// sᵀ * g; the gradient of s * d with respect to d.
inline DenseMatrix sparse_transpose_dense_matmul(const SparseMatrix& s, const DenseMatrix& g) {
  if (s.rows() != g.rows()) {
    throw DimensionError("sparse_transpose_dense_matmul: row mismatch");
  }
  DenseMatrix out(s.cols(), g.cols());
  for (std::size_t r = 0; r < s.rows(); ++r) {
    const auto g_row = g.row(r);
    const auto idx = s.row_indices(r);
    const auto val = s.row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      auto out_row = out.row(idx[k]);
      for (std::size_t j = 0; j < g.cols(); ++j) out_row[j] += val[k] * g_row[j];
    }
  }
  return out;
}

// Gradient of s * d with respect to the stored values of s, given the upstream
// gradient g of the product: one entry per nonzero, g[r,:] · d[c,:].
inline std::vector<double> sparse_value_grad(const SparseMatrix& s, const DenseMatrix& d,
                                             const DenseMatrix& g) {
  if (s.cols() != d.rows() || s.rows() != g.rows() || d.cols() != g.cols()) {
    throw DimensionError("sparse_value_grad: shape mismatch");
  }
  std::vector<double> out(s.nnz(), 0.0);
  const auto offsets = s.offsets();
  const auto indices = s.indices();
  for (std::size_t r = 0; r < s.rows(); ++r) {
    const auto g_row = g.row(r);
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
      const auto d_row = d.row(indices[k]);
      double acc = 0.0;
      for (std::size_t j = 0; j < d.cols(); ++j) acc += g_row[j] * d_row[j];
      out[k] = acc;
    }
  }
  return out;
}

}  // namespace msngo
