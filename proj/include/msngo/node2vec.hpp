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
#include <optional>
#include <span>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "msngo/contact.hpp"
#include "msngo/error.hpp"
#include "msngo/log.hpp"
#include "msngo/nn.hpp"
#include "msngo/random.hpp"
#include "msngo/tensor.hpp"
#include "msngo/text.hpp"

namespace msngo {

struct WalkConfig {
  double p = 1.0;  // return parameter
  double q = 1.0;  // in-out parameter
  std::size_t walk_length = 40;
  std::size_t walks_per_node = 10;
  std::uint64_t seed = 0;
  bool greedy = false;  // always take the most probable next node

  void validate() const {
    if (!(p > 0.0) || !(q > 0.0)) throw ConfigError("node2vec p and q must be positive");
    if (walk_length < 2) throw ConfigError("walk length must be >= 2");
    if (walks_per_node == 0) throw ConfigError("walks per node must be positive");
  }
};

struct EmbeddingConfig {
  std::size_t dim = 64;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;
  std::uint64_t seed = 0;

  void validate() const {
    if (dim == 0 || window == 0 || negatives == 0) throw ConfigError("embedding dim, window and negatives must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("embedding learning rate must be positive");
  }
};

// Search bias for stepping from v to x after arriving from t.
inline double search_bias(const ContactGraph& g, std::size_t t, std::size_t x, const WalkConfig& cfg) {
  if (x == t) return 1.0 / cfg.p;
  if (g.has_edge(t, x)) return 1.0;
  return 1.0 / cfg.q;
}

// Probabilities aligned with g.neighbors[v]. With no previous node the
// choice is uniform. Empty when v is isolated.
inline std::vector<double> transition_probs(const ContactGraph& g, std::optional<std::size_t> prev, std::size_t v,
                                            const WalkConfig& cfg) {
  const auto& nb = g.neighbors[v];
  std::vector<double> probs(nb.size(), 1.0);
  if (nb.empty()) return probs;
  if (prev) {
    if (!g.has_edge(*prev, v)) throw DimensionError("transition_probs: previous node is not adjacent");
    for (std::size_t k = 0; k < nb.size(); ++k) probs[k] = search_bias(g, *prev, nb[k], cfg);
  }
  double z = 0.0;
  for (double pr : probs) z += pr;
  for (double& pr : probs) pr /= z;
  return probs;
}

// Exact categorical draw, or the lowest-index argmax in greedy mode.
inline std::size_t sample_index(std::span<const double> probs, Rng& rng, bool greedy) {
  if (greedy) return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  std::discrete_distribution<std::size_t> dist(probs.begin(), probs.end());
  return dist(rng);
}

using Walk = std::vector<std::size_t>;

// walks_per_node rounds over all start nodes. Each walk has its own derived
// seed so the corpus does not depend on generation order.
inline std::vector<Walk> generate_walks(const ContactGraph& g, const WalkConfig& cfg) {
  cfg.validate();
  if (g.size() == 0) throw DimensionError("generate_walks: empty graph");
  std::vector<Walk> walks;
  walks.reserve(g.size() * cfg.walks_per_node);
  for (std::size_t round = 0; round < cfg.walks_per_node; ++round) {
    for (std::size_t start = 0; start < g.size(); ++start) {
      Rng rng(derive_seed(cfg.seed, round, start));
      Walk walk{start};
      std::optional<std::size_t> prev;
      while (walk.size() < cfg.walk_length) {
        const std::size_t cur = walk.back();
        if (g.neighbors[cur].empty()) break;
        const auto probs = transition_probs(g, prev, cur, cfg);
        walk.push_back(g.neighbors[cur][sample_index(probs, rng, cfg.greedy)]);
        prev = cur;
      }
      walks.push_back(std::move(walk));
    }
  }
  return walks;
}

inline DenseMatrix skipgram_init(std::size_t n, const EmbeddingConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, 0x5eed));
  const double r = 0.5 / static_cast<double>(cfg.dim);
  std::uniform_real_distribution<double> dist(-r, r);
  DenseMatrix w(n, cfg.dim);
  for (double& v : w.values()) v = dist(rng);
  return w;
}

// Skip-gram with negative sampling over the walk corpus. Negatives come from
// the corpus unigram distribution raised to 0.75; the learning rate decays
// linearly to 1e-4 of its start over all epochs. Returns the input vectors.
inline DenseMatrix train_skipgram(const std::vector<Walk>& walks, std::size_t n, const EmbeddingConfig& cfg) {
  cfg.validate();
  if (walks.empty()) throw DimensionError("train_skipgram: empty corpus");
  DenseMatrix w_in = skipgram_init(n, cfg);
  if (cfg.epochs == 0) return w_in;
  DenseMatrix w_out(n, cfg.dim);

  std::vector<double> counts(n, 0.0);
  std::size_t tokens = 0;
  for (const auto& walk : walks) {
    for (std::size_t v : walk) {
      if (v >= n) throw DimensionError("train_skipgram: node id out of range");
      counts[v] += 1.0;
    }
    tokens += walk.size();
  }
  for (double& c : counts) c = std::pow(c, 0.75);
  std::discrete_distribution<std::size_t> negative(counts.begin(), counts.end());

  Rng rng(derive_seed(cfg.seed, 0x5eed, 1));
  const double total = static_cast<double>(tokens * cfg.epochs);
  std::size_t processed = 0;
  std::vector<double> grad_h(cfg.dim);
  auto sgd_pair = [&](std::size_t center, std::size_t target, double label, double lr) {
    auto h = w_in.row(center);
    auto o = w_out.row(target);
    double dot = 0.0;
    for (std::size_t k = 0; k < cfg.dim; ++k) dot += h[k] * o[k];
    const double g = lr * (label - sigmoid(dot));
    for (std::size_t k = 0; k < cfg.dim; ++k) {
      grad_h[k] += g * o[k];
      o[k] += g * h[k];
    }
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& walk : walks) {
      for (std::size_t i = 0; i < walk.size(); ++i, ++processed) {
        const double lr = cfg.learning_rate * std::max(1e-4, 1.0 - static_cast<double>(processed) / total);
        const std::size_t lo = i >= cfg.window ? i - cfg.window : 0;
        const std::size_t hi = std::min(walk.size() - 1, i + cfg.window);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          std::fill(grad_h.begin(), grad_h.end(), 0.0);
          sgd_pair(walk[i], walk[j], 1.0, lr);
          for (std::size_t s = 0; s < cfg.negatives; ++s) {
            const std::size_t neg = negative(rng);
            if (neg == walk[j]) continue;
            sgd_pair(walk[i], neg, 0.0, lr);
          }
          auto h = w_in.row(walk[i]);
          for (std::size_t k = 0; k < cfg.dim; ++k) h[k] += grad_h[k];
        }
      }
    }
  }
  return w_in;
}

inline constexpr std::string_view kResidueAlphabet = "ACDEFGHIKLMNPQRSTVWYBZUOX";

inline std::size_t residue_index(char letter) {
  const auto pos = kResidueAlphabet.find(letter);
  return pos == std::string_view::npos ? kResidueAlphabet.size() - 1 : pos;
}

// embedding ∥ one-hot(letter). Letters outside the alphabet map to X.
inline DenseMatrix residue_features(const DenseMatrix& embeddings, std::string_view letters) {
  if (embeddings.rows() != letters.size()) {
    throw DimensionError("residue_features: " + std::to_string(embeddings.rows()) + " embedding rows vs " +
                         std::to_string(letters.size()) + " letters");
  }
  const std::size_t d = embeddings.cols();
  DenseMatrix out(letters.size(), d + kResidueAlphabet.size());
  std::string unknown;
  for (std::size_t i = 0; i < letters.size(); ++i) {
    std::copy(embeddings.row(i).begin(), embeddings.row(i).end(), out.row(i).begin());
    if (kResidueAlphabet.find(letters[i]) == std::string_view::npos &&
        unknown.find(letters[i]) == std::string::npos) {
      unknown.push_back(letters[i]);
    }
    out(i, d + residue_index(letters[i])) = 1.0;
  }
  if (!unknown.empty()) log::warn("unknown residue letters '" + unknown + "' mapped to X");
  return out;
}

inline DenseMatrix embed_residues(const ContactGraph& g, const WalkConfig& walk_cfg, const EmbeddingConfig& emb_cfg) {
  const auto walks = generate_walks(g, walk_cfg);
  return residue_features(train_skipgram(walks, g.size(), emb_cfg), g.letters);
}

// "node-id v1 ... vd" per line.
inline std::string serialize_embeddings(const DenseMatrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out += std::to_string(i);
    for (double v : m.row(i)) out += ' ' + format_double(v);
    out += '\n';
  }
  return out;
}

inline DenseMatrix parse_embeddings(std::string_view text) {
  std::vector<double> values;
  std::size_t rows = 0, cols = 0, line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    const auto f = split_whitespace(line);
    if (f.empty()) continue;
    const auto id = parse_int<std::size_t>(f[0]);
    if (!id || *id != rows) throw FormatError(at_line(line_no, "expected node id " + std::to_string(rows)));
    if (rows == 0) cols = f.size() - 1;
    if (f.size() - 1 != cols || cols == 0) throw FormatError(at_line(line_no, "inconsistent row width"));
    for (std::size_t k = 1; k < f.size(); ++k) {
      const auto v = parse_double(f[k]);
      if (!v) throw FormatError(at_line(line_no, "unparseable value"));
      values.push_back(*v);
    }
    ++rows;
  }
  if (rows == 0) throw FormatError("empty embedding dump");
  return DenseMatrix(rows, cols, std::move(values));
}

}  // namespace msngo
