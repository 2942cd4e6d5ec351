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
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "msngo/error.hpp"
#include "msngo/tensor.hpp"
#include "msngo/text.hpp"

namespace msngo {

// τ = i/100 for i = 1..100.
inline std::vector<double> default_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 100; ++i) g.push_back(i / 100.0);
  return g;
}

struct EvalInput {
  DenseMatrix scores;        // n × c in [0, 1]
  DenseMatrix truth;         // n × c in {0, 1}, closed under ancestors
  std::vector<double> ic;    // per column; empty for unweighted-only use
  std::vector<double> grid = default_grid();

  void validate(bool need_ic) const {
    if (!scores.same_shape(truth))
      throw DimensionError("evaluation: scores " + scores.shape_string() + " vs truth " + truth.shape_string());
    if (need_ic) {
      if (ic.size() != truth.cols())
        throw DimensionError("evaluation: " + std::to_string(ic.size()) + " IC values for " +
                             std::to_string(truth.cols()) + " terms");
      for (double w : ic)
        if (!std::isfinite(w) || w < 0.0) throw NumericError("evaluation: IC values must be finite and >= 0");
    }
    if (grid.empty() || !std::is_sorted(grid.begin(), grid.end()))
      throw ConfigError("evaluation: threshold grid must be non-empty and increasing");
  }
};

struct MetricValue {
  double value = 0.0;
  double tau = 0.0;
};

struct PrPoint {
  double tau = 0.0;
  double precision = 0.0;  // 0 when no protein has a prediction at τ
  double recall = 0.0;
};

namespace detail {

// Protein-centric precision/recall at each τ. Only proteins whose weighted
// truth is positive count; precision averages over those that also have
// positive weighted predictions at τ.
inline std::vector<PrPoint> protein_pr(const EvalInput& e, std::span<const double> weight) {
  const std::size_t n = e.truth.rows(), c = e.truth.cols();
  std::vector<std::size_t> rows;
  std::vector<double> true_mass(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j)
      if (e.truth(i, j) > 0.5) true_mass[i] += weight[j];
    if (true_mass[i] > 0.0) rows.push_back(i);
  }
  if (rows.empty()) throw NumericError("evaluation: no protein has a (weighted) true label");
  std::vector<PrPoint> curve;
  for (double tau : e.grid) {
    double prec_sum = 0.0, rec_sum = 0.0;
    std::size_t covered = 0;
    for (std::size_t i : rows) {
      double pred = 0.0, hit = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        if (e.scores(i, j) < tau) continue;
        pred += weight[j];
        if (e.truth(i, j) > 0.5) hit += weight[j];
      }
      if (pred > 0.0) {
        prec_sum += hit / pred;
        ++covered;
      }
      rec_sum += hit / true_mass[i];
    }
    curve.push_back({tau, covered ? prec_sum / static_cast<double>(covered) : 0.0,
                     rec_sum / static_cast<double>(rows.size())});
  }
  return curve;
}

inline MetricValue best_f(std::span<const PrPoint> curve) {
  MetricValue best{0.0, curve.empty() ? 0.0 : curve.front().tau};
  for (const auto& p : curve) {
    if (p.precision + p.recall <= 0.0) continue;
    const double f = 2.0 * p.precision * p.recall / (p.precision + p.recall);
    if (f > best.value) best = {f, p.tau};
  }
  return best;
}

// Micro-averaged step-wise AUPR over all pairs with per-column weights.
inline double pair_aupr(const EvalInput& e, std::span<const double> weight) {
  const std::size_t n = e.truth.rows(), c = e.truth.cols();
  struct Pair {
    double score, w;
    bool pos;
  };
  std::vector<Pair> pairs;
  pairs.reserve(n * c);
  double positives = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const bool pos = e.truth(i, j) > 0.5;
      pairs.push_back({e.scores(i, j), weight[j], pos});
      if (pos) positives += weight[j];
    }
  }
  if (positives <= 0.0) throw NumericError("AUPR: no (weighted) positive pairs");
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.score > b.score; });
  double tp = 0.0, fp = 0.0, prev_recall = 0.0, area = 0.0;
  for (std::size_t k = 0; k < pairs.size();) {
    std::size_t end = k;
    while (end < pairs.size() && pairs[end].score == pairs[k].score) {
      (pairs[end].pos ? tp : fp) += pairs[end].w;
      ++end;
    }
    const double recall = tp / positives;
    if (tp + fp > 0.0) area += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
    k = end;
  }
  return area;
}

}  // namespace detail

inline std::vector<PrPoint> pr_curve(const EvalInput& e) {
  e.validate(false);
  const std::vector<double> ones(e.truth.cols(), 1.0);
  return detail::protein_pr(e, ones);
}

inline MetricValue fmax(const EvalInput& e) { return detail::best_f(pr_curve(e)); }

inline MetricValue weighted_fmax(const EvalInput& e) {
  e.validate(true);
  return detail::best_f(detail::protein_pr(e, e.ic));
}

inline double aupr(const EvalInput& e) {
  e.validate(false);
  const std::vector<double> ones(e.truth.cols(), 1.0);
  return detail::pair_aupr(e, ones);
}

inline double weighted_aupr(const EvalInput& e) {
  e.validate(true);
  return detail::pair_aupr(e, e.ic);
}

// min over τ of sqrt(ru² + mi²); ru and mi are means over proteins with at
// least one true label of the missed and false-positive IC mass.
inline MetricValue smin(const EvalInput& e) {
  e.validate(true);
  const std::size_t n = e.truth.rows(), c = e.truth.cols();
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      if (e.truth(i, j) > 0.5) {
        rows.push_back(i);
        break;
      }
    }
  }
  if (rows.empty()) throw NumericError("Smin: no protein has a true label");
  MetricValue best{std::numeric_limits<double>::infinity(), e.grid.front()};
  for (double tau : e.grid) {
    double ru = 0.0, mi = 0.0;
    for (std::size_t i : rows) {
      for (std::size_t j = 0; j < c; ++j) {
        const bool truth = e.truth(i, j) > 0.5;
        const bool pred = e.scores(i, j) >= tau;
        if (truth && !pred) ru += e.ic[j];
        if (pred && !truth) mi += e.ic[j];
      }
    }
    ru /= static_cast<double>(rows.size());
    mi /= static_cast<double>(rows.size());
    const double s = std::sqrt(ru * ru + mi * mi);
    if (s < best.value) best = {s, tau};
  }
  return best;
}

inline std::string serialize_pr_curve(std::span<const PrPoint> curve) {
  std::string out = "tau,precision,recall\n";
  for (const auto& p : curve)
    out += format_double(p.tau) + ',' + format_double(p.precision) + ',' + format_double(p.recall) + '\n';
  return out;
}

struct MetricRow {
  std::string metric;
  std::string branch;
  double value = 0.0;
};

inline std::vector<MetricRow> evaluate_all(const EvalInput& e, const std::string& branch) {
  return {{"Fmax", branch, fmax(e).value},
          {"Smin", branch, smin(e).value},
          {"AUPR", branch, aupr(e)},
          {"wFmax", branch, weighted_fmax(e).value},
          {"wAUPR", branch, weighted_aupr(e)}};
}

inline std::string serialize_metrics(std::span<const MetricRow> rows) {
  std::string out = "metric\tbranch\tvalue\n";
  for (const auto& r : rows) out += r.metric + '\t' + r.branch + '\t' + format_double(r.value) + '\n';
  return out;
}

}  // namespace msngo
