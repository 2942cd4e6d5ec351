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
#include <cstring>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msngo/contact.hpp"
#include "msngo/error.hpp"
#include "msngo/features.hpp"
#include "msngo/log.hpp"
#include "msngo/nn.hpp"
#include "msngo/random.hpp"
#include "msngo/tensor.hpp"

namespace msngo {

// ---------------------------------------------------------------------------
// Building blocks

// act(adj · h · θ). Returns the pre-activation through `pre` when non-null.
inline DenseMatrix gcn_layer(const SparseMatrix& adj, const DenseMatrix& h, const DenseMatrix& theta,
                             const Activation& act = Activation::relu(), DenseMatrix* pre = nullptr) {
  if (adj.rows() != h.rows()) throw DimensionError("gcn_layer: adjacency/feature row mismatch");
  DenseMatrix z = matmul(sparse_dense_matmul(adj, h), theta);
  DenseMatrix y = activation(z, act);
  if (pre) *pre = std::move(z);
  return y;
}

// One score per node: act(adj · h · θ_s), θ_s of shape d×1.
inline std::vector<double> attention_scores(const SparseMatrix& adj, const DenseMatrix& h, const DenseMatrix& theta_s,
                                            const Activation& act = Activation::tanh()) {
  const DenseMatrix u = matmul(sparse_dense_matmul(adj, h), theta_s);
  std::vector<double> s(u.rows());
  for (std::size_t i = 0; i < u.rows(); ++i) s[i] = activate(u(i, 0), act);
  return s;
}

inline std::size_t pooled_count(std::size_t n, double k) {
  if (!(k > 0.0 && k <= 1.0)) throw ConfigError("pooling rate must be in (0, 1]");
  // Guard against k·n landing a hair above an integer through rounding.
  const double raw = k * static_cast<double>(n);
  auto kept = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  return std::clamp<std::size_t>(kept, 1, std::max<std::size_t>(n, 1));
}

// Indices of the ceil(k·n) highest scores, ties to the lower index, sorted ascending.
inline std::vector<std::size_t> top_select(std::span<const double> scores, double k) {
  if (scores.empty()) throw DimensionError("top_select: no nodes");
  const std::size_t keep = pooled_count(scores.size(), k);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return order;
}

struct PooledGraph {
  DenseMatrix h;        // selected rows scaled by their score
  ContactGraph graph;   // induced subgraph, self-loops not yet added
  SparseMatrix adj;     // its normalized adjacency
};

inline PooledGraph pool_subgraph(const DenseMatrix& h, const ContactGraph& g, std::span<const double> scores,
                                 std::span<const std::size_t> idx) {
  if (idx.empty()) throw DimensionError("pool_subgraph: empty selection");
  PooledGraph out{select_rows(h, idx), induced_subgraph(g, idx), {}};
  for (std::size_t k = 0; k < idx.size(); ++k)
    for (double& v : out.h.row(k)) v *= scores[idx[k]];
  out.adj = normalized_adjacency(out.graph);
  return out;
}

// Column-wise mean (or sum) ∥ column-wise max. `argmax`, when non-null,
// receives the first row attaining each column max.
inline DenseMatrix readout(const DenseMatrix& h, bool sum_readout = false,
                           std::vector<std::size_t>* argmax = nullptr) {
  if (h.rows() == 0) throw DimensionError("readout: no rows");
  const std::size_t d = h.cols();
  DenseMatrix out(1, 2 * d);
  std::vector<std::size_t> arg(d, 0);
  for (std::size_t j = 0; j < d; ++j) out(0, d + j) = h(0, j);
  for (std::size_t i = 0; i < h.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out(0, j) += h(i, j);
      if (h(i, j) > out(0, d + j)) {
        out(0, d + j) = h(i, j);
        arg[j] = i;
      }
    }
  }
  if (!sum_readout)
    for (std::size_t j = 0; j < d; ++j) out(0, j) /= static_cast<double>(h.rows());
  if (argmax) *argmax = std::move(arg);
  return out;
}

// ---------------------------------------------------------------------------
// Model

struct StructArch {
  std::size_t d_in = 0;
  std::size_t d2 = 512;
  std::size_t num_labels = 0;
  std::size_t conv_layers = 3;
  std::size_t modules = 2;
  double pool_rate = 0.75;
  double dropout = 0.5;
  bool sum_readout = false;
  Activation conv_activation = Activation::relu();
  Activation score_activation = Activation::tanh();

  void validate() const {
    if (d_in == 0 || d2 == 0 || num_labels == 0) throw ConfigError("structure model widths must be positive");
    if (conv_layers == 0 || modules == 0) throw ConfigError("structure model needs >= 1 module and conv layer");
    if (!(pool_rate > 0.0 && pool_rate <= 1.0)) throw ConfigError("pooling rate must be in (0, 1]");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  }
  std::size_t hidden_width() const { return 2 * d2; }
  friend bool operator==(const StructArch&, const StructArch&) = default;
};

// One protein: its contact graph and per-residue input features.
struct StructInput {
  ContactGraph graph;
  DenseMatrix features;
};

struct StructForward {
  DenseMatrix probs;   // 1 × num_labels
  DenseMatrix hidden;  // 1 × 2·d2
};

class StructModel {
 public:
  StructModel() = default;

  // Glorot-uniform weights, zero biases.
  StructModel(const StructArch& arch, std::uint64_t seed) : arch_(arch) {
    arch_.validate();
    Rng rng(derive_seed(seed, 0x57c7));
    for (std::size_t m = 0; m < arch_.modules; ++m) {
      for (std::size_t l = 0; l < arch_.conv_layers; ++l) {
        const std::size_t in = (m == 0 && l == 0) ? arch_.d_in : arch_.d2;
        params_.emplace_back(glorot_uniform(in, arch_.d2, rng));
      }
      params_.emplace_back(glorot_uniform(arch_.d2, 1, rng));
    }
    const std::size_t widths[4] = {arch_.hidden_width(), arch_.hidden_width(), arch_.d2, arch_.num_labels};
    for (std::size_t i = 0; i < 3; ++i) {
      params_.emplace_back(glorot_uniform(widths[i], widths[i + 1], rng));
      params_.emplace_back(DenseMatrix(1, widths[i + 1]));
    }
  }

  StructModel(const StructArch& arch, std::vector<Param> params) : arch_(arch), params_(std::move(params)) {
    arch_.validate();
    const StructModel shape(arch_, 0);
    if (params_.size() != shape.params_.size()) throw FormatError("structure checkpoint: wrong parameter count");
    for (std::size_t k = 0; k < params_.size(); ++k) {
      if (!params_[k].value.same_shape(shape.params_[k].value))
        throw FormatError("structure checkpoint: parameter " + std::to_string(k) + " has shape " +
                          params_[k].value.shape_string() + ", expected " + shape.params_[k].value.shape_string());
    }
  }

  const StructArch& arch() const { return arch_; }
  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  std::vector<Param*> param_ptrs() {
    std::vector<Param*> out;
    for (auto& p : params_) out.push_back(&p);
    return out;
  }

  Param& conv(std::size_t module, std::size_t layer) { return params_[module * (arch_.conv_layers + 1) + layer]; }
  Param& score(std::size_t module) { return params_[module * (arch_.conv_layers + 1) + arch_.conv_layers]; }
  Param& mlp_weight(std::size_t i) { return params_[mlp_offset() + 2 * i]; }
  Param& mlp_bias(std::size_t i) { return params_[mlp_offset() + 2 * i + 1]; }

  // d objective / d probs, given probs.
  using GradFn = std::function<DenseMatrix(const DenseMatrix&)>;

  // Forward pass; dropout is active only when `rng` is given. With
  // `grad_fn` set, gradients of the objective are accumulated into the
  // parameters.
  StructForward run(const StructInput& in, Rng* rng = nullptr, const GradFn& grad_fn = nullptr) {
    if (in.features.rows() != in.graph.size())
      throw DimensionError("structure model: " + std::to_string(in.features.rows()) + " feature rows for " +
                           std::to_string(in.graph.size()) + " residues");
    if (in.features.cols() != arch_.d_in)
      throw DimensionError("structure model: feature width " + std::to_string(in.features.cols()) +
                           ", expected " + std::to_string(arch_.d_in));

    std::vector<ModuleCache> caches(arch_.modules);
    DenseMatrix hidden(1, arch_.hidden_width());
    const ContactGraph* graph = &in.graph;
    SparseMatrix adj0 = normalized_adjacency(in.graph);
    const SparseMatrix* adj = &adj0;
    const DenseMatrix* h = &in.features;
    for (std::size_t m = 0; m < arch_.modules; ++m) {
      module_forward(m, *graph, *adj, *h, caches[m]);
      hidden += caches[m].readout;
      graph = &caches[m].pooled.graph;
      adj = &caches[m].pooled.adj;
      h = &caches[m].pooled.h;
    }

    // Classifier: 2d2 -> 2d2 -> d2 -> c, ReLU + dropout after the first two.
    std::vector<DenseMatrix> pre(3), post(3), masks(2);
    DenseMatrix x = hidden;
    for (std::size_t i = 0; i < 3; ++i) {
      post[i] = x;  // layer input
      DenseMatrix z = matmul(x, mlp_weight(i).value);
      add_row_vector(z, mlp_bias(i).value);
      pre[i] = z;
      if (i < 2) {
        x = activation(z, Activation::relu());
        masks[i] = dropout_mask(1, x.cols(), arch_.dropout, rng != nullptr, rng ? *rng : dummy_rng_);
        x = hadamard(x, masks[i]);
      } else {
        x = activation(z, Activation::sigmoid());
      }
    }
    StructForward out{x, hidden};
    if (!grad_fn) return out;

    // Backward.
    DenseMatrix g = activation_backward(grad_fn(out.probs), pre[2], out.probs, Activation::sigmoid());
    for (std::size_t i = 3; i-- > 0;) {
      if (i < 2) {
        g = hadamard(g, masks[i]);
        g = activation_backward(g, pre[i], activation(pre[i], Activation::relu()), Activation::relu());
      }
      mlp_weight(i).grad += matmul_tn(post[i], g);
      mlp_bias(i).grad += column_sums(g);
      g = matmul_nt(g, mlp_weight(i).value);
    }
    // g is d objective / d hidden; every module's readout receives it.
    DenseMatrix grad_next;  // gradient flowing into module m's pooled output from module m+1
    for (std::size_t m = arch_.modules; m-- > 0;) {
      grad_next = module_backward(m, caches[m], g, m + 1 < arch_.modules ? &grad_next : nullptr);
    }
    return out;
  }

  StructForward infer(const StructInput& in) { return run(in); }

 private:
  struct ModuleCache {
    const SparseMatrix* adj = nullptr;
    const ContactGraph* graph = nullptr;
    std::vector<DenseMatrix> inputs;   // H^(l) fed to layer l
    std::vector<DenseMatrix> aggregated;  // adj · H^(l)
    std::vector<DenseMatrix> pre;      // adj · H^(l) · θ
    DenseMatrix out;                   // final conv output
    DenseMatrix agg_out;               // adj · out
    std::vector<double> score_pre, scores;
    std::vector<std::size_t> idx, argmax;
    PooledGraph pooled;
    DenseMatrix readout;
  };

  std::size_t mlp_offset() const { return arch_.modules * (arch_.conv_layers + 1); }

  void module_forward(std::size_t m, const ContactGraph& g, const SparseMatrix& adj, const DenseMatrix& h,
                      ModuleCache& c) {
    c.adj = &adj;
    c.graph = &g;
    DenseMatrix x = h;
    for (std::size_t l = 0; l < arch_.conv_layers; ++l) {
      c.inputs.push_back(x);
      c.aggregated.push_back(sparse_dense_matmul(adj, x));
      c.pre.push_back(matmul(c.aggregated.back(), conv(m, l).value));
      x = activation(c.pre.back(), arch_.conv_activation);
    }
    c.out = std::move(x);
    c.agg_out = sparse_dense_matmul(adj, c.out);
    const DenseMatrix u = matmul(c.agg_out, score(m).value);
    c.score_pre.resize(u.rows());
    c.scores.resize(u.rows());
    for (std::size_t i = 0; i < u.rows(); ++i) {
      c.score_pre[i] = u(i, 0);
      c.scores[i] = activate(u(i, 0), arch_.score_activation);
    }
    c.idx = top_select(c.scores, arch_.pool_rate);
    c.pooled = pool_subgraph(c.out, g, c.scores, c.idx);
    c.readout = readout(c.pooled.h, arch_.sum_readout, &c.argmax);
  }

  // Returns d objective / d (module input h).
  DenseMatrix module_backward(std::size_t m, const ModuleCache& c, const DenseMatrix& grad_readout,
                              const DenseMatrix* grad_pooled) {
    const std::size_t d = arch_.d2;
    const std::size_t kept = c.idx.size();
    DenseMatrix g_sub = grad_pooled ? *grad_pooled : DenseMatrix(kept, d);
    const double mean_scale = arch_.sum_readout ? 1.0 : 1.0 / static_cast<double>(kept);
    for (std::size_t k = 0; k < kept; ++k)
      for (std::size_t j = 0; j < d; ++j) g_sub(k, j) += grad_readout(0, j) * mean_scale;
    for (std::size_t j = 0; j < d; ++j) g_sub(c.argmax[j], j) += grad_readout(0, d + j);

    // H_sub[k] = out[idx[k]] * s[idx[k]]
    DenseMatrix g_out(c.out.rows(), d);
    DenseMatrix g_u(c.out.rows(), 1);
    for (std::size_t k = 0; k < kept; ++k) {
      const std::size_t i = c.idx[k];
      double gs = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        g_out(i, j) += g_sub(k, j) * c.scores[i];
        gs += g_sub(k, j) * c.out(i, j);
      }
      g_u(i, 0) = gs * activate_derivative(c.score_pre[i], c.scores[i], arch_.score_activation);
    }
    score(m).grad += matmul_tn(c.agg_out, g_u);
    g_out += sparse_transpose_dense_matmul(*c.adj, matmul_nt(g_u, score(m).value));

    DenseMatrix g = std::move(g_out);
    for (std::size_t l = arch_.conv_layers; l-- > 0;) {
      const DenseMatrix y = l + 1 < arch_.conv_layers ? c.inputs[l + 1] : c.out;
      const DenseMatrix gz = activation_backward(g, c.pre[l], y, arch_.conv_activation);
      conv(m, l).grad += matmul_tn(c.aggregated[l], gz);
      g = sparse_transpose_dense_matmul(*c.adj, matmul_nt(gz, conv(m, l).value));
    }
    return g;
  }

  StructArch arch_;
  std::vector<Param> params_;
  Rng dummy_rng_{0};
};

// ---------------------------------------------------------------------------
// Training and extraction

struct StructTrainConfig {
  AdamConfig adam{5e-4, 0.9, 0.999, 1e-8};
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  Reduction reduction = Reduction::sum;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(adam.lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
  }
};

struct StructTrainResult {
  StructModel model;
  std::vector<double> epoch_loss;  // summed BCE per epoch
};

// `targets` row i holds the labels of inputs[i].
inline StructTrainResult struct_train(std::span<const StructInput> inputs, const DenseMatrix& targets,
                                      const StructArch& arch, const StructTrainConfig& cfg) {
  cfg.validate();
  if (inputs.size() != targets.rows()) throw DimensionError("struct_train: input/label count mismatch");
  if (targets.cols() != arch.num_labels) throw DimensionError("struct_train: label width != num_labels");
  StructTrainResult result{StructModel(arch, cfg.seed), {}};
  if (inputs.empty() || cfg.epochs == 0) return result;
  StructModel& model = result.model;
  auto params = model.param_ptrs();
  AdamState adam{cfg.adam, {}, {}, 0};
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, 0x5fe, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      zero_grads(params);
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        Rng drop_rng(derive_seed(cfg.seed, 0xd50, epoch, i));
        DenseMatrix target(1, targets.cols());
        std::copy(targets.row(i).begin(), targets.row(i).end(), target.row(0).begin());
        double loss = 0.0;
        model.run(inputs[i], &drop_rng, [&](const DenseMatrix& probs) {
          auto r = bce_loss(probs, target, cfg.reduction);
          loss = r.loss;
          return std::move(r.grad);
        });
        if (!std::isfinite(loss))
          throw NumericError("structure training: non-finite loss at epoch " + std::to_string(epoch + 1));
        epoch_loss += loss;
      }
      adam_update(params, adam);
    }
    result.epoch_loss.push_back(epoch_loss);
    log::info("structure epoch " + std::to_string(epoch + 1) + " loss " + format_double(epoch_loss));
  }
  return result;
}

// Hidden vectors for `ids`; inputs[i] empty (nullopt) means no structure,
// which yields a zero row and a warning.
inline FeatureTable extract_hidden(StructModel& model, std::span<const std::string> ids,
                                   std::span<const std::optional<StructInput>> inputs) {
  if (ids.size() != inputs.size()) throw DimensionError("extract_hidden: id/input count mismatch");
  DenseMatrix h(ids.size(), model.arch().hidden_width());
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!inputs[i]) {
      missing.push_back(ids[i]);
      continue;
    }
    const auto fwd = model.infer(*inputs[i]);
    std::copy(fwd.hidden.row(0).begin(), fwd.hidden.row(0).end(), h.row(i).begin());
  }
  if (!missing.empty()) {
    std::string msg = std::to_string(missing.size()) + " proteins without structure got zero structural features:";
    for (std::size_t k = 0; k < std::min<std::size_t>(missing.size(), 10); ++k) msg += " " + missing[k];
    log::warn(msg);
  }
  return FeatureTable(std::vector<std::string>(ids.begin(), ids.end()), std::move(h));
}

// ---------------------------------------------------------------------------
// Checkpoint: "SMP1", u32 version, branch tag, architecture, then each
// parameter as u32 rows, u32 cols and rows·cols f64 values.

inline constexpr char kStructMagic[4] = {'S', 'M', 'P', '1'};
inline constexpr std::uint32_t kStructCheckpointVersion = 1;

namespace detail {

inline void write_matrix(ByteWriter& w, const DenseMatrix& m) {
  w.write(static_cast<std::uint32_t>(m.rows()));
  w.write(static_cast<std::uint32_t>(m.cols()));
  for (double v : m.values()) w.write(v);
}

inline DenseMatrix read_matrix(ByteReader& r) {
  const auto rows = r.read<std::uint32_t>();
  const auto cols = r.read<std::uint32_t>();
  std::vector<double> v(static_cast<std::size_t>(rows) * cols);
  for (double& x : v) x = r.read<double>();
  return DenseMatrix(rows, cols, std::move(v));
}

inline void write_activation(ByteWriter& w, const Activation& a) {
  w.write(static_cast<std::uint8_t>(a.kind));
  w.write(a.slope);
}

inline Activation read_activation(ByteReader& r) {
  const auto kind = r.read<std::uint8_t>();
  if (kind > static_cast<std::uint8_t>(ActivationKind::tanh)) throw FormatError("checkpoint: bad activation");
  Activation a;
  a.kind = static_cast<ActivationKind>(kind);
  a.slope = r.read<double>();
  return a;
}

inline void check_magic(std::string_view bytes, const char (&magic)[4], std::string_view what) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), magic, 4) != 0)
    throw FormatError(std::string(what) + ": bad magic, expected " + std::string(magic, 4));
}

}  // namespace detail

inline std::string save_struct_checkpoint(const StructModel& model, std::string_view branch) {
  detail::ByteWriter w;
  w.write_bytes(std::string_view(kStructMagic, 4));
  w.write(kStructCheckpointVersion);
  w.write(static_cast<std::uint32_t>(branch.size()));
  w.write_bytes(branch);
  const auto& a = model.arch();
  for (std::size_t v : {a.d_in, a.d2, a.num_labels, a.conv_layers, a.modules}) w.write(static_cast<std::uint64_t>(v));
  w.write(a.pool_rate);
  w.write(a.dropout);
  w.write(static_cast<std::uint8_t>(a.sum_readout));
  detail::write_activation(w, a.conv_activation);
  detail::write_activation(w, a.score_activation);
  w.write(static_cast<std::uint32_t>(model.params().size()));
  for (const auto& p : model.params()) detail::write_matrix(w, p.value);
  return w.take();
}

struct StructCheckpoint {
  std::string branch;
  StructModel model;
};

inline StructCheckpoint load_struct_checkpoint(std::string_view bytes) {
  detail::check_magic(bytes, kStructMagic, "structure checkpoint");
  detail::ByteReader r(bytes.substr(4));
  const auto version = r.read<std::uint32_t>();
  if (version != kStructCheckpointVersion)
    throw FormatError("structure checkpoint: unsupported version " + std::to_string(version));
  StructCheckpoint c;
  c.branch = r.read_string(r.read<std::uint32_t>());
  StructArch a;
  a.d_in = r.read<std::uint64_t>();
  a.d2 = r.read<std::uint64_t>();
  a.num_labels = r.read<std::uint64_t>();
  a.conv_layers = r.read<std::uint64_t>();
  a.modules = r.read<std::uint64_t>();
  a.pool_rate = r.read<double>();
  a.dropout = r.read<double>();
  a.sum_readout = r.read<std::uint8_t>() != 0;
  a.conv_activation = detail::read_activation(r);
  a.score_activation = detail::read_activation(r);
  const auto count = r.read<std::uint32_t>();
  std::vector<Param> params;
  for (std::uint32_t k = 0; k < count; ++k) params.emplace_back(detail::read_matrix(r));
  if (!r.done()) throw FormatError("structure checkpoint: trailing bytes");
  c.model = StructModel(a, std::move(params));
  return c;
}

}  // namespace msngo
