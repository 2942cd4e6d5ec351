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

#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "msngo/log.hpp"
#include "msngo/node2vec.hpp"

namespace msngo {
namespace {

using EdgeVec = std::vector<std::pair<std::size_t, std::size_t>>;

ContactGraph triangle() { return graph_from_edges(3, EdgeVec{{0, 1}, {1, 2}, {0, 2}}); }

// Exact α_pq factor from the shortest-path distance between t and x.
double alpha_oracle(std::size_t d_tx, double p, double q) {
  if (d_tx == 0) return 1.0 / p;
  if (d_tx == 1) return 1.0;
  return 1.0 / q;
}

TEST(TransitionProbs, BiasFactors) {
  // Path 0-1-2 plus 1-3 and 0-3: from v=1 after t=0, x=0 (d=0), x=3 (d=1), x=2 (d=2).
  const auto g = graph_from_edges(4, EdgeVec{{0, 1}, {1, 2}, {1, 3}, {0, 3}});
  WalkConfig cfg;
  cfg.p = 4.0;
  cfg.q = 0.25;
  EXPECT_DOUBLE_EQ(search_bias(g, 0, 0, cfg), alpha_oracle(0, cfg.p, cfg.q));
  EXPECT_DOUBLE_EQ(search_bias(g, 0, 3, cfg), alpha_oracle(1, cfg.p, cfg.q));
  EXPECT_DOUBLE_EQ(search_bias(g, 0, 2, cfg), alpha_oracle(2, cfg.p, cfg.q));
  const auto probs = transition_probs(g, 0, 1, cfg);  // neighbors of 1: 0, 2, 3
  const double z = 0.25 + 4.0 + 1.0;
  EXPECT_NEAR(probs[0], 0.25 / z, 1e-15);
  EXPECT_NEAR(probs[1], 4.0 / z, 1e-15);
  EXPECT_NEAR(probs[2], 1.0 / z, 1e-15);
}

TEST(TransitionProbs, TriangleEnumeration) {
  WalkConfig cfg;
  cfg.p = 2.0;
  cfg.q = 0.5;
  // From v=1 after t=0: back to 0 has factor 1/2, common neighbor 2 has factor 1.
  const auto probs = transition_probs(triangle(), 0, 1, cfg);
  ASSERT_EQ(probs.size(), 2u);
  EXPECT_NEAR(probs[0], 0.5 / 1.5, 1e-15);
  EXPECT_NEAR(probs[1], 1.0 / 1.5, 1e-15);
}

TEST(TransitionProbs, UniformWhenUnbiasedAndSumsToOne) {
  Rng rng(5);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = i + 1; j < 12; ++j)
      if (uniform01(rng) < 0.35) edges.emplace_back(i, j);
  const auto g = graph_from_edges(12, edges);
  WalkConfig unbiased;
  WalkConfig biased;
  biased.p = 0.3;
  biased.q = 3.0;
  for (std::size_t v = 0; v < g.size(); ++v) {
    for (std::size_t t : g.neighbors[v]) {
      const auto u = transition_probs(g, t, v, unbiased);
      for (double pr : u) EXPECT_NEAR(pr, 1.0 / u.size(), 1e-15);
      double s = 0.0;
      for (double pr : transition_probs(g, t, v, biased)) s += pr;
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(TransitionProbs, IsolatedNodeHasNoMoves) {
  const auto g = graph_from_edges(2, EdgeVec{});
  EXPECT_TRUE(transition_probs(g, std::nullopt, 0, WalkConfig{}).empty());
  WalkConfig cfg;
  cfg.walks_per_node = 1;
  for (const auto& w : generate_walks(g, cfg)) EXPECT_EQ(w.size(), 1u);
}

TEST(GenerateWalks, TwoNodePathAlternates) {
  const auto g = graph_from_edges(2, EdgeVec{{0, 1}});
  WalkConfig cfg;
  cfg.walk_length = 9;
  cfg.walks_per_node = 3;
  const auto walks = generate_walks(g, cfg);
  ASSERT_EQ(walks.size(), 6u);
  for (const auto& w : walks) {
    ASSERT_EQ(w.size(), 9u);
    for (std::size_t i = 1; i < w.size(); ++i) EXPECT_NE(w[i], w[i - 1]);
  }
}

TEST(GenerateWalks, DeterministicGivenSeed) {
  Rng rng(11);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = i + 1; j < 20; ++j)
      if (uniform01(rng) < 0.2) edges.emplace_back(i, j);
  const auto g = graph_from_edges(20, edges);
  WalkConfig cfg;
  cfg.p = 0.5;
  cfg.q = 2.0;
  cfg.seed = 99;
  EXPECT_EQ(generate_walks(g, cfg), generate_walks(g, cfg));
  auto other = cfg;
  other.seed = 100;
  EXPECT_NE(generate_walks(g, cfg), generate_walks(g, other));
}

TEST(GenerateWalks, EmpiricalFrequenciesMatchExactDistribution) {
  // Path 0-1-2 plus 1-3 and 0-3, as in BiasFactors.
  const auto g = graph_from_edges(4, EdgeVec{{0, 1}, {1, 2}, {1, 3}, {0, 3}, {2, 3}});
  WalkConfig cfg;
  cfg.p = 2.0;
  cfg.q = 0.5;
  cfg.walk_length = 200;
  cfg.walks_per_node = 150;
  cfg.seed = 7;
  std::map<std::pair<std::size_t, std::size_t>, std::map<std::size_t, double>> counts;
  std::size_t steps = 0;
  for (const auto& w : generate_walks(g, cfg)) {
    for (std::size_t i = 2; i < w.size(); ++i, ++steps) counts[{w[i - 2], w[i - 1]}][w[i]] += 1.0;
  }
  ASSERT_GE(steps, 100000u);
  for (const auto& [tv, next] : counts) {
    double total = 0.0;
    for (const auto& [x, c] : next) total += c;
    const auto exact = transition_probs(g, tv.first, tv.second, cfg);
    const auto& nb = g.neighbors[tv.second];
    for (std::size_t k = 0; k < nb.size(); ++k) {
      const auto it = next.find(nb[k]);
      const double freq = it == next.end() ? 0.0 : it->second / total;
      EXPECT_NEAR(freq, exact[k], 0.02) << "t=" << tv.first << " v=" << tv.second << " x=" << nb[k];
    }
  }
}

TEST(GenerateWalks, GreedyTakesMostProbable) {
  WalkConfig cfg;
  cfg.p = 2.0;
  cfg.q = 0.5;
  cfg.greedy = true;
  cfg.walk_length = 6;
  cfg.walks_per_node = 1;
  // On a triangle the common neighbor always beats returning, so greedy
  // walks cycle 0 -> 1 -> 2 -> 0 after the first (lowest-index) hop.
  const auto walks = generate_walks(triangle(), cfg);
  EXPECT_EQ(walks[0], (Walk{0, 1, 2, 0, 1, 2}));
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  return dot / std::sqrt(na * nb);
}

TEST(TrainSkipgram, ShapeAndZeroEpochs) {
  const auto g = triangle();
  EmbeddingConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 0;
  const auto walks = generate_walks(g, WalkConfig{});
  const auto emb = train_skipgram(walks, g.size(), cfg);
  EXPECT_EQ(emb.rows(), 3u);
  EXPECT_EQ(emb.cols(), 8u);
  EXPECT_EQ(emb, skipgram_init(3, cfg));
  cfg.epochs = 1;
  EXPECT_NE(train_skipgram(walks, g.size(), cfg), skipgram_init(3, cfg));
  EXPECT_THROW(train_skipgram({}, 3, cfg), DimensionError);
}

TEST(TrainSkipgram, CliqueMembersEndCloser) {
  // Two 5-cliques joined through a 4-node bridge path.
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t base : {0u, 9u})
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = i + 1; j < 5; ++j) edges.emplace_back(base + i, base + j);
  for (std::size_t k = 4; k < 9; ++k) edges.emplace_back(k, k + 1);
  const auto g = graph_from_edges(14, edges);
  WalkConfig wc;
  wc.seed = 3;
  EmbeddingConfig ec;
  ec.dim = 16;
  ec.seed = 3;
  const auto emb = train_skipgram(generate_walks(g, wc), g.size(), ec);
  double same = 0, far = 0;
  int ns = 0, nf = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j, ++ns) same += cosine(emb.row(i), emb.row(j));
    for (std::size_t j = 10; j < 14; ++j, ++nf) far += cosine(emb.row(i), emb.row(j));
  }
  EXPECT_GT(same / ns, far / nf + 0.2);
  EXPECT_EQ(emb, train_skipgram(generate_walks(g, wc), g.size(), ec));
}

TEST(ResidueFeatures, OneHotLayout) {
  DenseMatrix emb(3, 4, 0.5);
  log::WarningCapture warnings;
  const auto f = residue_features(emb, "AYJ");
  EXPECT_EQ(f.cols(), 4u + 25u);
  EXPECT_EQ(f(0, 4 + 0), 1.0);
  EXPECT_EQ(f(1, 4 + 19), 1.0);
  EXPECT_EQ(f(2, 4 + 24), 1.0);  // J -> X
  EXPECT_TRUE(warnings.contains("'J'"));
  for (std::size_t i = 0; i < 3; ++i) {
    double hot = 0;
    for (std::size_t k = 4; k < f.cols(); ++k) hot += f(i, k);
    EXPECT_EQ(hot, 1.0);
    EXPECT_EQ(f(i, 0), 0.5);
  }
  EXPECT_THROW(residue_features(emb, "AA"), DimensionError);
}

TEST(EmbeddingDump, RoundTrip) {
  const auto m = DenseMatrix::from_rows({{0.1, -2.5}, {3.0, 1e-300}});
  EXPECT_EQ(serialize_embeddings(m), "0 0.1 -2.5\n1 3 1e-300\n");
  EXPECT_EQ(parse_embeddings(serialize_embeddings(m)), m);
  EXPECT_THROW(parse_embeddings("1 0.5\n"), FormatError);
}

}  // namespace
}  // namespace msngo
