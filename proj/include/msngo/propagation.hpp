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
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "msngo/error.hpp"
#include "msngo/features.hpp"
#include "msngo/ingest.hpp"
#include "msngo/log.hpp"
#include "msngo/nn.hpp"
#include "msngo/random.hpp"
#include "msngo/structure_model.hpp"
#include "msngo/tensor.hpp"
#include "msngo/text.hpp"

namespace msngo {

// ---------------------------------------------------------------------------
// Network

// Proteins V with two undirected edge sets: E1 (PPI) and E2 (homology).
// Supports include a self-loop per node; values hold base edge weights
// (self-loops weigh 1).
class HeteroNetwork {
 public:
  HeteroNetwork() = default;

  // PPI scores are rescaled from [0, 1000] to [0, 1]. Edges touching an id
  // outside `ids` are dropped with a warning.
  HeteroNetwork(std::vector<std::string> ids, const PpiEdgeList& ppi, const SimilarityEdgeList& homology)
      : ids_(std::move(ids)) {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (!index_.emplace(ids_[i], i).second) throw IngestError("network: duplicate protein id " + ids_[i]);
    }
    ppi_ = build_support(ppi.edges, 1.0 / 1000.0, "PPI");
    homology_ = build_support(homology.edges, 1.0, "homology");
  }

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  std::optional<std::size_t> index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  const SparseMatrix& ppi() const { return ppi_; }
  const SparseMatrix& homology() const { return homology_; }

  // Network with the same nodes and no E2 edges.
  HeteroNetwork without_homology() const {
    HeteroNetwork out = *this;
    out.homology_ = SparseMatrix::identity(size());
    return out;
  }

 private:
  SparseMatrix build_support(const std::vector<WeightedEdge>& edges, double scale, std::string_view what) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < ids_.size(); ++i) t.push_back({i, i, 1.0});
    std::size_t dropped = 0;
    for (const auto& e : edges) {
      const auto a = index_of(e.a);
      const auto b = index_of(e.b);
      if (!a || !b) {
        ++dropped;
        continue;
      }
      if (*a == *b) continue;
      t.push_back({*a, *b, e.weight * scale});
      t.push_back({*b, *a, e.weight * scale});
    }
    if (dropped > 0)
      log::warn(std::to_string(dropped) + " " + std::string(what) + " edges reference proteins outside the network");
    return SparseMatrix::from_triplets(ids_.size(), ids_.size(), std::move(t));
  }

  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
  SparseMatrix ppi_;
  SparseMatrix homology_;
};

// Rows of `se` (and `st`, when given) in `ids` order, side by side.
inline DenseMatrix concat_features(std::span<const std::string> ids, const FeatureTable& se,
                                   const FeatureTable* st = nullptr) {
  DenseMatrix h = se.aligned(ids);
  if (!st) return h;
  return concat_cols(h, st->aligned(ids));
}

// ---------------------------------------------------------------------------
// Attention

// Row-wise softmax over each support row of `logits` (same pattern as support).
inline SparseMatrix masked_softmax(const SparseMatrix& support, std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  const auto off = support.offsets();
  for (std::size_t r = 0; r < support.rows(); ++r) {
    if (off[r] == off[r + 1]) continue;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = off[r]; k < off[r + 1]; ++k) mx = std::max(mx, out[k]);
    double z = 0.0;
    for (std::size_t k = off[r]; k < off[r + 1]; ++k) {
      out[k] = std::exp(out[k] - mx);
      z += out[k];
    }
    for (std::size_t k = off[r]; k < off[r + 1]; ++k) out[k] /= z;
  }
  return support.with_values(std::move(out));
}

// Edge logits a_src·f_u + a_dst·f_v with f = LeakyReLU(H W_t), optionally
// plus log(base weight).
inline std::vector<double> attention_logits(const SparseMatrix& support, const DenseMatrix& f,
                                            const DenseMatrix& a_src, const DenseMatrix& a_dst, bool weighted) {
  const DenseMatrix s_src = matmul(f, a_src);
  const DenseMatrix s_dst = matmul(f, a_dst);
  std::vector<double> e(support.nnz());
  const auto off = support.offsets();
  const auto idx = support.indices();
  const auto base = support.values();
  for (std::size_t r = 0; r < support.rows(); ++r) {
    for (std::size_t k = off[r]; k < off[r + 1]; ++k) {
      e[k] = s_src(r, 0) + s_dst(idx[k], 0);
      if (weighted) e[k] += std::log(std::max(base[k], 1e-12));
    }
  }
  return e;
}

struct AttentionMatrices {
  SparseMatrix ppi;
  SparseMatrix homology;
};

// ---------------------------------------------------------------------------
// Model

struct PropArch {
  std::size_t d_in = 0;
  std::size_t d3 = 512;
  std::size_t num_labels = 0;
  std::size_t mlp_layers = 1;
  std::size_t prop_layers = 2;
  double dropout = 0.5;
  bool propagation = true;  // false: input MLP feeds the output head directly
  bool weighted_logits = false;
  Activation prop_activation = Activation::relu();

  void validate() const {
    if (d_in == 0 || d3 == 0 || num_labels == 0) throw ConfigError("propagation model widths must be positive");
    if (mlp_layers < 1 || mlp_layers > 4) throw ConfigError("MLP layer count must be in [1, 4]");
    if (propagation && prop_layers == 0) throw ConfigError("propagation layer count must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  }
  friend bool operator==(const PropArch&, const PropArch&) = default;
};

struct PropForward {
  DenseMatrix probs;      // n × c
  DenseMatrix embedding;  // input-MLP output H⁰
  AttentionMatrices attention;
};

class PropModel {
 public:
  using GradFn = std::function<DenseMatrix(const DenseMatrix&)>;

  PropModel() = default;

  PropModel(const PropArch& arch, std::uint64_t seed) : arch_(arch) {
    arch_.validate();
    Rng rng(derive_seed(seed, 0x9a09));
    const std::size_t d = arch_.d3;
    params_.emplace_back(glorot_uniform(arch_.d_in, d, rng));  // W_e
    params_.emplace_back(DenseMatrix(1, d));                    // b_e
    for (std::size_t l = 0; l < arch_.mlp_layers; ++l) {
      params_.emplace_back(glorot_uniform(d, d, rng));
      params_.emplace_back(DenseMatrix(1, d));
      params_.emplace_back(DenseMatrix(1, d, 1.0));  // layer-norm gain
      params_.emplace_back(DenseMatrix(1, d));       // layer-norm bias
    }
    const DenseMatrix a = glorot_uniform(2 * d, 1, rng);
    DenseMatrix a_src(d, 1), a_dst(d, 1);
    for (std::size_t j = 0; j < d; ++j) {
      a_src(j, 0) = a(j, 0);
      a_dst(j, 0) = a(d + j, 0);
    }
    params_.emplace_back(std::move(a_src));
    params_.emplace_back(std::move(a_dst));
    params_.emplace_back(glorot_uniform(d, d, rng));  // W_t
    for (std::size_t l = 0; l < arch_.prop_layers; ++l) params_.emplace_back(glorot_uniform(d, d, rng));
    params_.emplace_back(glorot_uniform(d, arch_.num_labels, rng));
    params_.emplace_back(DenseMatrix(1, arch_.num_labels));
  }

  PropModel(const PropArch& arch, std::vector<Param> params) : arch_(arch), params_(std::move(params)) {
    arch_.validate();
    const PropModel shape(arch_, 0);
    if (params_.size() != shape.params_.size()) throw FormatError("propagation checkpoint: wrong parameter count");
    for (std::size_t k = 0; k < params_.size(); ++k) {
      if (!params_[k].value.same_shape(shape.params_[k].value))
        throw FormatError("propagation checkpoint: parameter " + std::to_string(k) + " has shape " +
                          params_[k].value.shape_string() + ", expected " + shape.params_[k].value.shape_string());
    }
  }

  const PropArch& arch() const { return arch_; }
  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  std::vector<Param*> param_ptrs() {
    std::vector<Param*> out;
    for (auto& p : params_) out.push_back(&p);
    return out;
  }

  Param& input_weight() { return params_[0]; }
  Param& input_bias() { return params_[1]; }
  Param& mlp_weight(std::size_t l) { return params_[2 + 4 * l]; }
  Param& mlp_bias(std::size_t l) { return params_[3 + 4 * l]; }
  Param& mlp_gain(std::size_t l) { return params_[4 + 4 * l]; }
  Param& mlp_shift(std::size_t l) { return params_[5 + 4 * l]; }
  Param& attn_src() { return params_[attn_offset()]; }
  Param& attn_dst() { return params_[attn_offset() + 1]; }
  Param& attn_transform() { return params_[attn_offset() + 2]; }
  Param& prop_weight(std::size_t l) { return params_[attn_offset() + 3 + l]; }
  Param& output_weight() { return params_[params_.size() - 2]; }
  Param& output_bias() { return params_[params_.size() - 1]; }

  // Forward over the whole network; dropout only when `rng` is given.
  // With `grad_fn`, accumulates gradients of the objective into params.
  PropForward run(const HeteroNetwork& net, const DenseMatrix& h, Rng* rng = nullptr, const GradFn& grad_fn = nullptr) {
    if (h.rows() != net.size())
      throw DimensionError("propagation model: " + std::to_string(h.rows()) + " feature rows for " +
                           std::to_string(net.size()) + " proteins");
    if (h.cols() != arch_.d_in)
      throw DimensionError("propagation model: feature width " + std::to_string(h.cols()) + ", expected " +
                           std::to_string(arch_.d_in));
    const Activation relu = Activation::relu();
    const bool training = rng != nullptr;
    Rng& drop_rng = rng ? *rng : dummy_rng_;

    // Input projection and MLP.
    DenseMatrix z_in = matmul(h, input_weight().value);
    add_row_vector(z_in, input_bias().value);
    DenseMatrix x = activation(z_in, relu);
    const DenseMatrix mask_in = dropout_mask(x.rows(), x.cols(), arch_.dropout, training, drop_rng);
    x = hadamard(x, mask_in);
    std::vector<DenseMatrix> mlp_in, mlp_norm, mlp_masks;
    std::vector<LayerNormCache> ln_cache(arch_.mlp_layers);
    for (std::size_t l = 0; l < arch_.mlp_layers; ++l) {
      mlp_in.push_back(x);
      DenseMatrix z = matmul(x, mlp_weight(l).value);
      add_row_vector(z, mlp_bias(l).value);
      DenseMatrix n = layer_norm(z, mlp_gain(l).value, mlp_shift(l).value, &ln_cache[l]);
      mlp_norm.push_back(n);
      x = activation(n, relu);
      mlp_masks.push_back(dropout_mask(x.rows(), x.cols(), arch_.dropout, training, drop_rng));
      x = hadamard(x, mlp_masks.back());
    }
    const DenseMatrix h0 = x;

    // Attention over both networks, shared parameters, computed once from H⁰.
    DenseMatrix g_pre, f;
    AttentionMatrices att;
    std::vector<DenseMatrix> layer_in, xw, pre_p, pre_s, out_p, out_s, sum_ps;
    if (arch_.propagation) {
      g_pre = matmul(h0, attn_transform().value);
      f = activation(g_pre, Activation::leaky_relu());
      att.ppi = masked_softmax(net.ppi(), attention_logits(net.ppi(), f, attn_src().value, attn_dst().value,
                                                           arch_.weighted_logits));
      att.homology = masked_softmax(net.homology(), attention_logits(net.homology(), f, attn_src().value,
                                                                     attn_dst().value, arch_.weighted_logits));
      for (std::size_t l = 0; l < arch_.prop_layers; ++l) {
        layer_in.push_back(x);
        xw.push_back(matmul(x, prop_weight(l).value));
        pre_p.push_back(sparse_dense_matmul(att.ppi, xw.back()));
        pre_p.back() += x;
        pre_s.push_back(sparse_dense_matmul(att.homology, xw.back()));
        pre_s.back() += x;
        out_p.push_back(activation(pre_p.back(), arch_.prop_activation));
        out_s.push_back(activation(pre_s.back(), arch_.prop_activation));
        sum_ps.push_back(out_p.back());
        sum_ps.back() += out_s.back();
        x = activation(sum_ps.back(), arch_.prop_activation);
      }
    }

    DenseMatrix z_out = matmul(x, output_weight().value);
    add_row_vector(z_out, output_bias().value);
    PropForward result{activation(z_out, Activation::sigmoid()), h0, std::move(att)};
    if (!grad_fn) return result;

    // Backward.
    DenseMatrix g = activation_backward(grad_fn(result.probs), z_out, result.probs, Activation::sigmoid());
    output_weight().grad += matmul_tn(x, g);
    output_bias().grad += column_sums(g);
    g = matmul_nt(g, output_weight().value);

    if (arch_.propagation) {
      const auto& A = result.attention;
      std::vector<double> g_att_p(A.ppi.nnz(), 0.0), g_att_s(A.homology.nnz(), 0.0);
      DenseMatrix g_h0_extra(h0.rows(), h0.cols());
      for (std::size_t l = arch_.prop_layers; l-- > 0;) {
        const DenseMatrix y = l + 1 < arch_.prop_layers ? layer_in[l + 1] : x;
        const DenseMatrix g_sum = activation_backward(g, sum_ps[l], y, arch_.prop_activation);
        const DenseMatrix g_pp = activation_backward(g_sum, pre_p[l], out_p[l], arch_.prop_activation);
        const DenseMatrix g_ps = activation_backward(g_sum, pre_s[l], out_s[l], arch_.prop_activation);
        const auto vp = sparse_value_grad(A.ppi, xw[l], g_pp);
        const auto vs = sparse_value_grad(A.homology, xw[l], g_ps);
        for (std::size_t k = 0; k < vp.size(); ++k) g_att_p[k] += vp[k];
        for (std::size_t k = 0; k < vs.size(); ++k) g_att_s[k] += vs[k];
        DenseMatrix g_xw = sparse_transpose_dense_matmul(A.ppi, g_pp);
        g_xw += sparse_transpose_dense_matmul(A.homology, g_ps);
        prop_weight(l).grad += matmul_tn(layer_in[l], g_xw);
        g = matmul_nt(g_xw, prop_weight(l).value);
        g += g_pp;
        g += g_ps;
      }
      // Through the two softmaxes into the shared attention parameters.
      DenseMatrix g_src(h0.rows(), 1), g_dst(h0.rows(), 1);
      auto softmax_back = [&](const SparseMatrix& a, const std::vector<double>& g_vals) {
        const auto off = a.offsets();
        const auto idx = a.indices();
        const auto val = a.values();
        for (std::size_t r = 0; r < a.rows(); ++r) {
          double dot = 0.0;
          for (std::size_t k = off[r]; k < off[r + 1]; ++k) dot += val[k] * g_vals[k];
          for (std::size_t k = off[r]; k < off[r + 1]; ++k) {
            const double ge = val[k] * (g_vals[k] - dot);
            g_src(r, 0) += ge;
            g_dst(idx[k], 0) += ge;
          }
        }
      };
      softmax_back(A.ppi, g_att_p);
      softmax_back(A.homology, g_att_s);
      attn_src().grad += matmul_tn(f, g_src);
      attn_dst().grad += matmul_tn(f, g_dst);
      DenseMatrix g_f = matmul_nt(g_src, attn_src().value);
      g_f += matmul_nt(g_dst, attn_dst().value);
      const DenseMatrix g_g = activation_backward(g_f, g_pre, f, Activation::leaky_relu());
      attn_transform().grad += matmul_tn(h0, g_g);
      g += matmul_nt(g_g, attn_transform().value);
    }

    for (std::size_t l = arch_.mlp_layers; l-- > 0;) {
      g = hadamard(g, mlp_masks[l]);
      g = activation_backward(g, mlp_norm[l], activation(mlp_norm[l], relu), relu);
      const auto ln = layer_norm_backward(g, ln_cache[l], mlp_gain(l).value);
      mlp_gain(l).grad += ln.gain;
      mlp_shift(l).grad += ln.bias;
      mlp_weight(l).grad += matmul_tn(mlp_in[l], ln.input);
      mlp_bias(l).grad += column_sums(ln.input);
      g = matmul_nt(ln.input, mlp_weight(l).value);
    }
    g = hadamard(g, mask_in);
    g = activation_backward(g, z_in, activation(z_in, relu), relu);
    input_weight().grad += matmul_tn(h, g);
    input_bias().grad += column_sums(g);
    return result;
  }

  PropForward infer(const HeteroNetwork& net, const DenseMatrix& h) { return run(net, h); }

 private:
  std::size_t attn_offset() const { return 2 + 4 * arch_.mlp_layers; }

  PropArch arch_;
  std::vector<Param> params_;
  Rng dummy_rng_{0};
};

// Standalone forms of the two propagation updates, for reuse and testing.
inline DenseMatrix propagate_layer(const SparseMatrix& a_p, const SparseMatrix& a_s, const DenseMatrix& h,
                                   const DenseMatrix& w, const Activation& act = Activation::relu()) {
  const DenseMatrix xw = matmul(h, w);
  DenseMatrix p = sparse_dense_matmul(a_p, xw);
  p += h;
  DenseMatrix s = sparse_dense_matmul(a_s, xw);
  s += h;
  DenseMatrix sum_ps = activation(p, act);
  sum_ps += activation(s, act);
  return activation(sum_ps, act);
}

inline DenseMatrix output_head(const DenseMatrix& h, const DenseMatrix& w, const DenseMatrix& b) {
  DenseMatrix z = matmul(h, w);
  add_row_vector(z, b);
  return activation(z, Activation::sigmoid());
}

// ---------------------------------------------------------------------------
// Training

struct PropTrainConfig {
  AdamConfig adam{1e-3, 0.9, 0.999, 1e-8};
  std::size_t epochs = 10;
  Reduction reduction = Reduction::sum;
  std::uint64_t seed = 0;
};

struct PropEpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  std::optional<double> valid_fmax;
};

// Everything needed to continue training: model, optimizer and progress.
struct PropTrainState {
  PropModel model;
  AdamState adam;
  std::size_t epochs_done = 0;
  std::vector<PropEpochLog> log;
};

inline PropTrainState init_prop_training(const PropArch& arch, const PropTrainConfig& cfg) {
  return {PropModel(arch, cfg.seed), AdamState{cfg.adam, {}, {}, 0}, 0, {}};
}

using ValidationFn = std::function<double(const DenseMatrix& probs)>;

// Full-batch Adam until cfg.epochs total epochs have run. The loss covers
// rows with train_mask set. On a non-finite loss the parameters that produced
// the last finite loss are restored and NumericError is thrown.
inline void train_propagation(PropTrainState& state, const HeteroNetwork& net, const DenseMatrix& h,
                              const DenseMatrix& y, std::span<const std::uint8_t> train_mask,
                              const PropTrainConfig& cfg, const ValidationFn& validate = nullptr) {
  if (y.rows() != net.size() || train_mask.size() != net.size())
    throw DimensionError("train_propagation: label/mask rows != network size");
  if (y.cols() != state.model.arch().num_labels) throw DimensionError("train_propagation: label width mismatch");
  if (!(cfg.adam.lr > 0.0)) throw ConfigError("learning rate must be positive");
  state.adam.config = cfg.adam;
  auto params = state.model.param_ptrs();
  while (state.epochs_done < cfg.epochs) {
    const std::size_t epoch = state.epochs_done;
    std::vector<Param> last_good = state.model.params();
    zero_grads(params);
    Rng drop_rng(derive_seed(cfg.seed, 0xd70, epoch));
    double loss = 0.0;
    state.model.run(net, h, &drop_rng, [&](const DenseMatrix& probs) {
      auto r = bce_loss(probs, y, cfg.reduction, train_mask);
      loss = r.loss;
      return std::move(r.grad);
    });
    if (!std::isfinite(loss)) {
      state.model.params() = std::move(last_good);
      throw NumericError("propagation training: non-finite loss at epoch " + std::to_string(epoch + 1));
    }
    adam_update(params, state.adam);
    PropEpochLog entry{epoch + 1, loss, std::nullopt};
    if (validate) entry.valid_fmax = validate(state.model.infer(net, h).probs);
    state.log.push_back(entry);
    ++state.epochs_done;
    log::info("propagation epoch " + std::to_string(epoch + 1) + " loss " + format_double(loss));
  }
}

inline std::string serialize_training_log(std::span<const PropEpochLog> log) {
  std::string out = "epoch,loss,valid_fmax\n";
  for (const auto& e : log) {
    out += std::to_string(e.epoch) + ',' + format_double(e.loss) + ',' +
           (e.valid_fmax ? format_double(*e.valid_fmax) : std::string()) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint: "PRP1", u32 version, branch tag, architecture, parameters, then
// the optimizer moments and step count so training can resume.

inline constexpr char kPropMagic[4] = {'P', 'R', 'P', '1'};
inline constexpr std::uint32_t kPropCheckpointVersion = 1;

struct PropCheckpoint {
  std::string branch;
  PropTrainState state;
};

inline std::string save_prop_checkpoint(const PropTrainState& state, std::string_view branch) {
  detail::ByteWriter w;
  w.write_bytes(std::string_view(kPropMagic, 4));
  w.write(kPropCheckpointVersion);
  w.write(static_cast<std::uint32_t>(branch.size()));
  w.write_bytes(branch);
  const auto& a = state.model.arch();
  for (std::size_t v : {a.d_in, a.d3, a.num_labels, a.mlp_layers, a.prop_layers})
    w.write(static_cast<std::uint64_t>(v));
  w.write(a.dropout);
  w.write(static_cast<std::uint8_t>(a.propagation));
  w.write(static_cast<std::uint8_t>(a.weighted_logits));
  detail::write_activation(w, a.prop_activation);
  w.write(static_cast<std::uint32_t>(state.model.params().size()));
  for (const auto& p : state.model.params()) detail::write_matrix(w, p.value);
  const auto& c = state.adam.config;
  for (double v : {c.lr, c.beta1, c.beta2, c.epsilon}) w.write(v);
  w.write(static_cast<std::uint64_t>(state.adam.t));
  w.write(static_cast<std::uint32_t>(state.adam.m.size()));
  for (std::size_t k = 0; k < state.adam.m.size(); ++k) {
    detail::write_matrix(w, state.adam.m[k]);
    detail::write_matrix(w, state.adam.v[k]);
  }
  w.write(static_cast<std::uint64_t>(state.epochs_done));
  w.write(static_cast<std::uint32_t>(state.log.size()));
  for (const auto& e : state.log) {
    w.write(static_cast<std::uint64_t>(e.epoch));
    w.write(e.loss);
    w.write(static_cast<std::uint8_t>(e.valid_fmax.has_value()));
    w.write(e.valid_fmax.value_or(0.0));
  }
  return w.take();
}

inline PropCheckpoint load_prop_checkpoint(std::string_view bytes) {
  detail::check_magic(bytes, kPropMagic, "propagation checkpoint");
  detail::ByteReader r(bytes.substr(4));
  const auto version = r.read<std::uint32_t>();
  if (version != kPropCheckpointVersion)
    throw FormatError("propagation checkpoint: unsupported version " + std::to_string(version));
  PropCheckpoint c;
  c.branch = r.read_string(r.read<std::uint32_t>());
  PropArch a;
  a.d_in = r.read<std::uint64_t>();
  a.d3 = r.read<std::uint64_t>();
  a.num_labels = r.read<std::uint64_t>();
  a.mlp_layers = r.read<std::uint64_t>();
  a.prop_layers = r.read<std::uint64_t>();
  a.dropout = r.read<double>();
  a.propagation = r.read<std::uint8_t>() != 0;
  a.weighted_logits = r.read<std::uint8_t>() != 0;
  a.prop_activation = detail::read_activation(r);
  const auto count = r.read<std::uint32_t>();
  std::vector<Param> params;
  for (std::uint32_t k = 0; k < count; ++k) params.emplace_back(detail::read_matrix(r));
  c.state.model = PropModel(a, std::move(params));
  auto& cfg = c.state.adam.config;
  cfg.lr = r.read<double>();
  cfg.beta1 = r.read<double>();
  cfg.beta2 = r.read<double>();
  cfg.epsilon = r.read<double>();
  c.state.adam.t = r.read<std::uint64_t>();
  const auto moments = r.read<std::uint32_t>();
  if (moments != 0 && moments != count) throw FormatError("propagation checkpoint: optimizer state size mismatch");
  for (std::uint32_t k = 0; k < moments; ++k) {
    c.state.adam.m.push_back(detail::read_matrix(r));
    c.state.adam.v.push_back(detail::read_matrix(r));
  }
  c.state.epochs_done = r.read<std::uint64_t>();
  const auto entries = r.read<std::uint32_t>();
  for (std::uint32_t k = 0; k < entries; ++k) {
    PropEpochLog e;
    e.epoch = r.read<std::uint64_t>();
    e.loss = r.read<double>();
    const bool has = r.read<std::uint8_t>() != 0;
    const double v = r.read<double>();
    if (has) e.valid_fmax = v;
    c.state.log.push_back(e);
  }
  if (!r.done()) throw FormatError("propagation checkpoint: trailing bytes");
  return c;
}

}  // namespace msngo
