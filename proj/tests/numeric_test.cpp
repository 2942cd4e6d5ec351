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
#include <numbers>

#include <gtest/gtest.h>

#include "msngo/nn.hpp"
#include "msngo/tensor.hpp"

namespace msngo {
namespace {

DenseMatrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  DenseMatrix m(r, c);
  for (double& v : m.values()) v = u(rng);
  return m;
}

// Weighted sum of entries with fixed random weights: a generic scalar head used
// to pull gradients through a layer.
double weighted_sum(const DenseMatrix& m, const DenseMatrix& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += m.values()[i] * w.values()[i];
  return s;
}

TEST(DenseMatmul, IdentityLeavesMatrixUnchanged) {
  Rng rng(1);
  const DenseMatrix m = random_matrix(3, 4, rng);
  EXPECT_EQ(matmul(DenseMatrix::identity(3), m), m);
}

TEST(DenseMatmul, HandCase) {
  const auto a = DenseMatrix::from_rows({{1, 2}, {3, 4}});
  const auto b = DenseMatrix::from_rows({{0}, {1}});
  EXPECT_EQ(matmul(a, b), DenseMatrix::from_rows({{2}, {4}}));
}

TEST(DenseMatmul, ZeroAnnihilates) {
  Rng rng(2);
  const DenseMatrix m = random_matrix(4, 2, rng);
  EXPECT_EQ(matmul(DenseMatrix(3, 4), m), DenseMatrix(3, 2));
}

TEST(DenseMatmul, ShapeMismatchThrows) {
  EXPECT_THROW(matmul(DenseMatrix(2, 3), DenseMatrix(2, 3)), DimensionError);
}

TEST(DenseMatmul, TransposedVariantsAgree) {
  Rng rng(3);
  const DenseMatrix a = random_matrix(4, 3, rng);
  const DenseMatrix b = random_matrix(4, 5, rng);
  const DenseMatrix c = random_matrix(6, 3, rng);
  EXPECT_LE(max_abs_diff(matmul_tn(a, b), matmul(transpose(a), b)), 1e-14);
  EXPECT_LE(max_abs_diff(matmul_nt(a, c), matmul(a, transpose(c))), 1e-14);
}

TEST(SparseMatmul, IdentityAndZeroRow) {
  Rng rng(4);
  const DenseMatrix m = random_matrix(3, 2, rng);
  EXPECT_EQ(sparse_dense_matmul(SparseMatrix::identity(3), m), m);

  const auto s = SparseMatrix::from_triplets(2, 3, {{0, 1, 2.0}});
  const DenseMatrix out = sparse_dense_matmul(s, m);
  EXPECT_EQ(out(1, 0), 0.0);
  EXPECT_EQ(out(1, 1), 0.0);
}

TEST(SparseMatmul, PermutationSwapsRows) {
  const auto s = SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}});
  const auto out = sparse_dense_matmul(s, DenseMatrix::from_rows({{7}, {9}}));
  EXPECT_EQ(out, DenseMatrix::from_rows({{9}, {7}}));
}

TEST(SparseMatmul, ShapeMismatchThrows) {
  EXPECT_THROW(sparse_dense_matmul(SparseMatrix::identity(3), DenseMatrix(2, 2)), DimensionError);
}

TEST(SparseMatmul, MatchesDensifiedProductOnRandomMatrices) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> dim(1, 20);
    const std::size_t r = dim(rng), c = dim(rng), k = dim(rng);
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j)
        if (uniform01(rng) < 0.3) t.push_back({i, j, uniform01(rng) * 2 - 1});
    const auto s = SparseMatrix::from_triplets(r, c, t);
    const DenseMatrix d = random_matrix(c, k, rng);
    EXPECT_LE(max_abs_diff(sparse_dense_matmul(s, d), matmul(s.to_dense(), d)), 1e-12);
    const DenseMatrix g = random_matrix(r, k, rng);
    EXPECT_LE(max_abs_diff(sparse_transpose_dense_matmul(s, g), matmul_tn(s.to_dense(), g)), 1e-12);
  }
}

TEST(SparseMatrix, DuplicatesAreSummedAndColumnsSorted) {
  const auto s = SparseMatrix::from_triplets(1, 4, {{0, 3, 1.0}, {0, 1, 2.0}, {0, 3, 0.5}});
  ASSERT_EQ(s.nnz(), 2u);
  EXPECT_EQ(s.indices()[0], 1u);
  EXPECT_EQ(s.indices()[1], 3u);
  EXPECT_DOUBLE_EQ(s.at(0, 3), 1.5);
}

TEST(SparseMatrix, ValueGradientMatchesFiniteDifferences) {
  Rng rng(11);
  auto s = SparseMatrix::from_triplets(3, 4, {{0, 0, 0.3}, {0, 2, -0.1}, {1, 3, 0.7}, {2, 1, 1.2}});
  const DenseMatrix d = random_matrix(4, 2, rng);
  const DenseMatrix w = random_matrix(3, 2, rng);
  const auto analytic = sparse_value_grad(s, d, w);
  for (std::size_t k = 0; k < s.nnz(); ++k) {
    const double saved = s.values()[k];
    s.values()[k] = saved + 1e-6;
    const double up = weighted_sum(sparse_dense_matmul(s, d), w);
    s.values()[k] = saved - 1e-6;
    const double down = weighted_sum(sparse_dense_matmul(s, d), w);
    s.values()[k] = saved;
    EXPECT_NEAR(analytic[k], (up - down) / 2e-6, 1e-8);
  }
}

TEST(Activation, PointValues) {
  EXPECT_EQ(activate(-1.0, Activation::relu()), 0.0);
  EXPECT_EQ(activate(2.0, Activation::relu()), 2.0);
  EXPECT_DOUBLE_EQ(activate(-1.0, Activation::leaky_relu(0.2)), -0.2);
  EXPECT_DOUBLE_EQ(activate(0.0, Activation::sigmoid()), 0.5);
  EXPECT_DOUBLE_EQ(activate(0.0, Activation::tanh()), 0.0);
  EXPECT_THROW(parse_activation("gelu"), ConfigError);
}

TEST(LayerNorm, PointValues) {
  const DenseMatrix ones(1, 2, 1.0);
  const DenseMatrix zeros(1, 2, 0.0);

  const auto constant = layer_norm(DenseMatrix(1, 2, 5.0), ones, zeros);
  EXPECT_EQ(constant, DenseMatrix(1, 2, 0.0));

  // mean 2, std 1; the 1e-5 epsilon shifts the result by ~5e-6.
  const auto y = layer_norm(DenseMatrix::from_rows({{1, 3}}), ones, zeros);
  EXPECT_NEAR(y(0, 0), -1.0, 1e-5);
  EXPECT_NEAR(y(0, 1), 1.0, 1e-5);

  const auto bias = DenseMatrix::from_rows({{0.25, -4}});
  const auto broadcast = layer_norm(DenseMatrix::from_rows({{1, 3}}), zeros, bias);
  EXPECT_EQ(broadcast, bias);
}

TEST(LayerNorm, NormalizedRowsHaveZeroMeanUnitVariance) {
  Rng rng(5);
  const DenseMatrix x = random_matrix(6, 9, rng, -3, 3);
  LayerNormCache cache;
  layer_norm(x, DenseMatrix(1, 9, 1.0), DenseMatrix(1, 9), &cache);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mean = 0, var = 0;
    for (double v : cache.normalized.row(i)) mean += v;
    mean /= 9;
    for (double v : cache.normalized.row(i)) var += (v - mean) * (v - mean);
    var /= 9;
    EXPECT_LE(std::abs(mean), 1e-9);
    // Epsilon inside the root biases the variance by eps/(var+eps).
    EXPECT_NEAR(var, 1.0, 1e-4);
  }
}

TEST(Dropout, MaskContract) {
  Rng rng(6);
  EXPECT_EQ(dropout_mask(3, 3, 0.0, true, rng), DenseMatrix(3, 3, 1.0));
  EXPECT_EQ(dropout_mask(3, 3, 0.9, false, rng), DenseMatrix(3, 3, 1.0));
  EXPECT_THROW(dropout_mask(1, 1, 1.0, true, rng), ConfigError);

  const auto mask = dropout_mask(100, 100, 0.5, true, rng);
  std::size_t kept = 0;
  for (double v : mask.values()) {
    if (v != 0.0) {
      EXPECT_DOUBLE_EQ(v, 2.0);
      ++kept;
    }
  }
  EXPECT_NEAR(static_cast<double>(kept) / 1e4, 0.5, 0.05);
}

TEST(BceLoss, PerfectPredictionIsNearZero) {
  const auto y = DenseMatrix::from_rows({{1, 0, 1}, {0, 0, 1}});
  const auto r = bce_loss(y, y);
  EXPECT_LE(r.loss / 6.0, 1e-5);
}

TEST(BceLoss, HalfPredictionsGiveLn2PerElement) {
  const auto y = DenseMatrix::from_rows({{1, 0, 1, 1}, {0, 0, 1, 0}});
  const auto r = bce_loss(DenseMatrix(2, 4, 0.5), y);
  EXPECT_NEAR(r.loss, 8 * std::numbers::ln2, 1e-12);
  const auto m = bce_loss(DenseMatrix(2, 4, 0.5), y, Reduction::mean);
  EXPECT_NEAR(m.loss, std::numbers::ln2, 1e-12);
}

TEST(BceLoss, RowMaskExcludesRows) {
  const auto y = DenseMatrix::from_rows({{1, 0}, {0, 1}});
  const std::vector<std::uint8_t> mask{1, 0};
  const auto r = bce_loss(DenseMatrix(2, 2, 0.5), y, Reduction::sum, mask);
  EXPECT_NEAR(r.loss, 2 * std::numbers::ln2, 1e-12);
  EXPECT_EQ(r.grad(1, 0), 0.0);
  EXPECT_EQ(r.grad(1, 1), 0.0);
}

TEST(BceLoss, ShapeMismatchThrows) {
  EXPECT_THROW(bce_loss(DenseMatrix(2, 2), DenseMatrix(2, 3)), DimensionError);
}

TEST(BceLoss, GradientMatchesFiniteDifferences) {
  Rng rng(7);
  Param pred(random_matrix(4, 3, rng, 0.05, 0.95));
  DenseMatrix y(4, 3);
  for (double& v : y.values()) v = uniform01(rng) < 0.5 ? 1.0 : 0.0;
  pred.grad = bce_loss(pred.value, y).grad;
  Param* params[] = {&pred};
  const double err =
      finite_difference_check([&] { return bce_loss(pred.value, y).loss; }, params);
  EXPECT_LE(err, 1e-4);
}

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  Param p(DenseMatrix::from_rows({{1.5, -2.0}}));
  const DenseMatrix before = p.value;
  AdamState state;
  Param* params[] = {&p};
  adam_update(params, state);
  adam_update(params, state);
  EXPECT_EQ(p.value, before);
}

TEST(Adam, FirstStepIsSignStep) {
  Param p(DenseMatrix::from_rows({{0.0, 0.0}}));
  p.grad = DenseMatrix::from_rows({{0.3, -2.0}});
  AdamState state;
  state.config.lr = 0.01;
  Param* params[] = {&p};
  adam_update(params, state);
  EXPECT_NEAR(p.value(0, 0), -0.01 * 0.3 / (0.3 + 1e-8), 1e-15);
  EXPECT_NEAR(p.value(0, 1), 0.01 * 2.0 / (2.0 + 1e-8), 1e-15);
  EXPECT_EQ(state.t, 1u);
}

TEST(Adam, DecreasesConvexQuadratic) {
  // f(x) = (x - 3)^2
  Param p(DenseMatrix(1, 1, 0.0));
  AdamState state;
  state.config.lr = 0.1;
  Param* params[] = {&p};
  auto f = [&] { return (p.value(0, 0) - 3) * (p.value(0, 0) - 3); };
  const double f0 = f();
  for (int step = 0; step < 2; ++step) {
    p.grad(0, 0) = 2 * (p.value(0, 0) - 3);
    adam_update(params, state);
  }
  EXPECT_LT(f(), f0);
}

TEST(Adam, DeterministicGivenIdenticalState) {
  Rng rng(8);
  Param a(random_matrix(3, 3, rng));
  a.grad = random_matrix(3, 3, rng);
  Param b = a;
  AdamState sa, sb;
  Param* pa[] = {&a};
  Param* pb[] = {&b};
  for (int i = 0; i < 3; ++i) {
    adam_update(pa, sa);
    adam_update(pb, sb);
  }
  EXPECT_EQ(a.value, b.value);
}

TEST(FiniteDifferenceCheck, ExactForLinearFunctions) {
  Rng rng(9);
  Param p(random_matrix(3, 2, rng));
  const DenseMatrix w = random_matrix(3, 2, rng);
  p.grad = w;
  Param* params[] = {&p};
  EXPECT_LE(finite_difference_check([&] { return weighted_sum(p.value, w); }, params), 1e-9);
}

TEST(FiniteDifferenceCheck, BceThroughSigmoid) {
  Rng rng(10);
  Param logits(random_matrix(3, 4, rng, -2, 2));
  DenseMatrix y(3, 4);
  for (double& v : y.values()) v = uniform01(rng) < 0.5 ? 1.0 : 0.0;
  auto loss = [&] { return bce_loss(activation(logits.value, Activation::sigmoid()), y).loss; };
  const DenseMatrix p = activation(logits.value, Activation::sigmoid());
  logits.grad = activation_backward(bce_loss(p, y).grad, logits.value, p, Activation::sigmoid());
  Param* params[] = {&logits};
  EXPECT_LE(finite_difference_check(loss, params), 1e-4);
}

TEST(FiniteDifferenceCheck, CatchesAWrongGradient) {
  Rng rng(12);
  Param logits(random_matrix(3, 4, rng, -2, 2));
  DenseMatrix y(3, 4, 1.0);
  auto loss = [&] { return bce_loss(activation(logits.value, Activation::sigmoid()), y).loss; };
  const DenseMatrix p = activation(logits.value, Activation::sigmoid());
  logits.grad = activation_backward(bce_loss(p, y).grad, logits.value, p, Activation::sigmoid());
  logits.grad(1, 2) *= 1.1;
  Param* params[] = {&logits};
  EXPECT_GE(finite_difference_check(loss, params), 1e-2);
}

TEST(FiniteDifferenceCheck, NonFiniteObjectiveThrows) {
  Param p(DenseMatrix(1, 1, 1.0));
  Param* params[] = {&p};
  EXPECT_THROW(finite_difference_check([] { return std::nan(""); }, params), NumericError);
}

// Every backward pass in the numeric core against finite differences on random
// 5x7 instances, three seeds each.
class BackwardPasses : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(BackwardPasses, MatmulBothOperands) {
  Rng rng(GetParam());
  Param a(random_matrix(5, 7, rng)), b(random_matrix(7, 3, rng));
  const DenseMatrix w = random_matrix(5, 3, rng);
  a.grad = matmul_nt(w, b.value);
  b.grad = matmul_tn(a.value, w);
  Param* params[] = {&a, &b};
  EXPECT_LE(finite_difference_check([&] { return weighted_sum(matmul(a.value, b.value), w); }, params),
            1e-4);
}

TEST_P(BackwardPasses, SparseDenseMatmul) {
  Rng rng(GetParam());
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      if (uniform01(rng) < 0.5) t.push_back({i, j, uniform01(rng)});
  const auto s = SparseMatrix::from_triplets(5, 5, t);
  Param d(random_matrix(5, 7, rng));
  const DenseMatrix w = random_matrix(5, 7, rng);
  d.grad = sparse_transpose_dense_matmul(s, w);
  Param* params[] = {&d};
  EXPECT_LE(finite_difference_check([&] { return weighted_sum(sparse_dense_matmul(s, d.value), w); },
                                    params),
            1e-4);
}

TEST_P(BackwardPasses, Activations) {
  for (const auto act : {Activation::relu(), Activation::leaky_relu(0.2), Activation::sigmoid(),
                         Activation::tanh()}) {
    Rng rng(GetParam());
    Param x(random_matrix(5, 7, rng, -2, 2));
    const DenseMatrix w = random_matrix(5, 7, rng);
    const DenseMatrix y = activation(x.value, act);
    x.grad = activation_backward(w, x.value, y, act);
    Param* params[] = {&x};
    EXPECT_LE(finite_difference_check([&] { return weighted_sum(activation(x.value, act), w); }, params),
              1e-4);
  }
}

TEST_P(BackwardPasses, LayerNorm) {
  Rng rng(GetParam());
  Param x(random_matrix(5, 7, rng, -2, 2));
  Param gain(random_matrix(1, 7, rng, 0.5, 1.5));
  Param bias(random_matrix(1, 7, rng));
  const DenseMatrix w = random_matrix(5, 7, rng);
  LayerNormCache cache;
  layer_norm(x.value, gain.value, bias.value, &cache);
  const auto g = layer_norm_backward(w, cache, gain.value);
  x.grad = g.input;
  gain.grad = g.gain;
  bias.grad = g.bias;
  Param* params[] = {&x, &gain, &bias};
  EXPECT_LE(finite_difference_check(
                [&] { return weighted_sum(layer_norm(x.value, gain.value, bias.value), w); }, params),
            1e-4);
}

TEST_P(BackwardPasses, BceLoss) {
  Rng rng(GetParam());
  Param p(random_matrix(5, 7, rng, 0.02, 0.98));
  DenseMatrix y(5, 7);
  for (double& v : y.values()) v = uniform01(rng) < 0.4 ? 1.0 : 0.0;
  p.grad = bce_loss(p.value, y, Reduction::mean).grad;
  Param* params[] = {&p};
  EXPECT_LE(finite_difference_check([&] { return bce_loss(p.value, y, Reduction::mean).loss; }, params),
            1e-4);
}

INSTANTIATE_TEST_SUITE_P(Seeds, BackwardPasses, ::testing::Values(1u, 2u, 3u));

}  // namespace
}  // namespace msngo
