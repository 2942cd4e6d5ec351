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
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "msngo/error.hpp"
#include "msngo/log.hpp"
#include "msngo/ontology.hpp"
#include "msngo/propagation.hpp"
#include "msngo/tensor.hpp"
#include "msngo/text.hpp"

namespace msngo {

inline double default_phi(Namespace ns) {
  switch (ns) {
    case Namespace::BPO: return 0.2;
    case Namespace::MFO: return 0.4;
    case Namespace::CCO: return 0.5;
  }
  return 0.5;
}

// Scales each row to unit L2 norm; zero rows stay zero.
inline void normalize_rows_l2(DenseMatrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    double norm = 0.0;
    for (double v : r) norm += v * v;
    if (norm == 0.0) continue;
    norm = std::sqrt(norm);
    for (double& v : r) v /= norm;
  }
}

// Ŷ ← Norm(A_p Ŷ + A_s Ŷ) per layer starting from Ŷ = Y; rows with
// clamp set are reset to Y after every layer.
inline DenseMatrix label_propagate(const SparseMatrix& a_p, const SparseMatrix& a_s, const DenseMatrix& y,
                                   std::span<const std::uint8_t> clamp, std::size_t layers = 2) {
  if (a_p.rows() != y.rows() || a_s.rows() != y.rows() || clamp.size() != y.rows())
    throw DimensionError("label_propagate: attention/label/clamp sizes disagree");
  DenseMatrix cur = y;
  for (std::size_t l = 0; l < layers; ++l) {
    DenseMatrix next = sparse_dense_matmul(a_p, cur);
    next += sparse_dense_matmul(a_s, cur);
    normalize_rows_l2(next);
    for (std::size_t i = 0; i < y.rows(); ++i)
      if (clamp[i]) std::copy(y.row(i).begin(), y.row(i).end(), next.row(i).begin());
    cur = std::move(next);
  }
  return cur;
}

// φ·Ŷ_out + (1−φ)·Ŷ_label, clipped to [0, 1].
inline DenseMatrix fuse(const DenseMatrix& out, const DenseMatrix& label, double phi) {
  if (!out.same_shape(label))
    throw DimensionError("fuse: " + out.shape_string() + " vs " + label.shape_string());
  if (!(phi >= 0.0 && phi <= 1.0)) throw ConfigError("fusion weight must be in [0, 1]");
  DenseMatrix y(out.rows(), out.cols());
  auto yv = y.values();
  const auto ov = out.values();
  const auto lv = label.values();
  for (std::size_t k = 0; k < yv.size(); ++k) yv[k] = std::clamp(phi * ov[k] + (1.0 - phi) * lv[k], 0.0, 1.0);
  return y;
}

struct PredictionOutput {
  DenseMatrix model_output;  // Ŷ_out
  DenseMatrix label_scores;  // Ŷ_label
  DenseMatrix fused;         // Ŷ
};

// Feature forward, label diffusion with training rows clamped, then fusion.
// Without propagation layers there is no attention, so the model output is
// returned as is.
inline PredictionOutput predict(PropModel& model, const HeteroNetwork& net, const DenseMatrix& h,
                                const DenseMatrix& y_train, std::span<const std::uint8_t> train_mask, double phi,
                                std::size_t label_layers = 2) {
  const auto fwd = model.infer(net, h);
  PredictionOutput out;
  out.model_output = fwd.probs;
  if (!model.arch().propagation) {
    out.label_scores = DenseMatrix(fwd.probs.rows(), fwd.probs.cols());
    out.fused = fuse(fwd.probs, out.label_scores, 1.0);
    return out;
  }
  DenseMatrix seed = y_train;
  for (std::size_t i = 0; i < seed.rows(); ++i)
    if (!train_mask[i]) std::fill(seed.row(i).begin(), seed.row(i).end(), 0.0);
  out.label_scores = label_propagate(fwd.attention.ppi, fwd.attention.homology, seed, train_mask, label_layers);
  out.fused = fuse(out.model_output, out.label_scores, phi);
  return out;
}

// Warns about requested proteins that have no edge in either network.
inline void warn_isolated(const HeteroNetwork& net, std::span<const std::size_t> rows) {
  std::size_t isolated = 0;
  for (std::size_t r : rows) {
    if (net.ppi().row_indices(r).size() <= 1 && net.homology().row_indices(r).size() <= 1) ++isolated;
  }
  if (isolated > 0)
    log::warn(std::to_string(isolated) + " proteins to predict have no PPI or homology edges; scored from their own features");
}

inline constexpr double kReportThreshold = 0.01;

// "protein<TAB>GO id<TAB>score" for scores >= threshold, rows in `rows`
// order, terms in column order.
inline std::string serialize_predictions(std::span<const std::string> proteins, std::span<const std::string> terms,
                                         const DenseMatrix& scores, std::span<const std::size_t> rows,
                                         double threshold = kReportThreshold) {
  if (scores.cols() != terms.size() || scores.rows() != proteins.size())
    throw DimensionError("serialize_predictions: score matrix does not match ids");
  std::string out;
  for (std::size_t r : rows) {
    for (std::size_t c = 0; c < terms.size(); ++c) {
      const double s = scores(r, c);
      if (s < threshold) continue;
      out += proteins[r];
      out += '\t';
      out += terms[c];
      out += '\t';
      out += format_double(s);
      out += '\n';
    }
  }
  return out;
}

struct ScoredTerm {
  std::string protein;
  std::string term;
  double score = 0.0;
};

inline std::vector<ScoredTerm> parse_predictions(std::string_view text) {
  std::vector<ScoredTerm> out;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(line, '\t');
    if (f.size() != 3) throw FormatError(at_line(line_no, "expected protein, GO id and score"));
    const auto s = parse_double(f[2]);
    if (!s || *s < 0.0 || *s > 1.0) throw FormatError(at_line(line_no, "score must be in [0, 1]"));
    out.push_back({std::string(trim(f[0])), std::string(trim(f[1])), *s});
  }
  return out;
}

}  // namespace msngo
