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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msngo/contact.hpp"
#include "msngo/error.hpp"
#include "msngo/features.hpp"
#include "msngo/ingest.hpp"
#include "msngo/log.hpp"
#include "msngo/metrics.hpp"
#include "msngo/node2vec.hpp"
#include "msngo/ontology.hpp"
#include "msngo/prediction.hpp"
#include "msngo/propagation.hpp"
#include "msngo/structure_model.hpp"
#include "msngo/text.hpp"

namespace msngo {

namespace fs = std::filesystem;

struct RunConfig {
  Namespace branch = Namespace::MFO;
  std::uint64_t seed = 0;

  // Inputs; relative paths resolve against data_dir.
  fs::path data_dir = ".";
  fs::path obo = "go.obo";
  fs::path sequences = "sequences.fasta";
  fs::path structures = "structures";
  fs::path ppi = "ppi.tsv";
  fs::path homology = "homology.tsv";  // empty: k-mer cosine stand-in
  fs::path annotations = "annotations.tsv";
  fs::path seq_features;               // empty: hashed 3-mer stand-in of width seq_dim
  // Outputs.
  fs::path work_dir = "work";

  std::size_t seq_dim = 1280;
  double ppi_min_score = 0.0;
  std::size_t homology_k = 3;
  double homology_threshold = 0.5;
  SplitDates split;

  double contact_threshold = kContactThreshold;
  double walk_p = 1.0;
  double walk_q = 1.0;
  std::size_t walk_length = 40;
  std::size_t walks_per_node = 10;
  std::size_t emb_dim = 64;
  std::size_t emb_window = 5;
  std::size_t emb_negatives = 5;
  std::size_t emb_epochs = 5;
  double emb_lr = 0.025;

  std::size_t struct_hidden = 512;
  std::size_t struct_conv_layers = 3;
  std::size_t struct_modules = 2;
  double pool_rate = 0.75;
  double struct_dropout = 0.5;
  double struct_lr = 5e-4;
  std::size_t struct_epochs = 20;
  std::size_t struct_batch = 32;

  std::size_t prop_hidden = 512;
  std::size_t mlp_layers = 1;
  std::size_t prop_layers = 2;
  double dropout = 0.5;
  double prop_lr = 1e-3;
  std::size_t prop_epochs = 10;
  bool resume = false;

  std::optional<double> phi;  // default per branch
  std::size_t label_layers = 2;
  double report_threshold = kReportThreshold;

  bool no_struct = false;
  bool no_struct_model = false;
  bool no_propagation = false;
  bool no_label_prop = false;
  bool weighted_logits = false;

  fs::path input(const fs::path& p) const { return p.is_absolute() ? p : data_dir / p; }
  double fusion_weight() const { return no_label_prop ? 1.0 : phi.value_or(default_phi(branch)); }

  // Output directory name for the ablation combination.
  std::string variant() const {
    std::string v;
    auto add = [&](bool on, const char* name) {
      if (!on) return;
      if (!v.empty()) v += '+';
      v += name;
    };
    add(no_struct, "no-struct");
    add(no_struct_model, "no-struct-model");
    add(no_propagation, "no-propagation");
    add(no_label_prop, "no-label-prop");
    add(weighted_logits, "weighted-logits");
    return v.empty() ? "full" : v;
  }

  fs::path branch_dir() const { return work_dir / std::string(to_string(branch)); }
  fs::path variant_dir() const { return branch_dir() / variant(); }

  void validate() const {
    if (!(dropout >= 0.3 && dropout <= 0.7)) throw ConfigError("dropout must be in [0.3, 0.7]");
    if (mlp_layers < 1 || mlp_layers > 4) throw ConfigError("mlp_layers must be in [1, 4]");
    if (prop_hidden < 128 || prop_hidden > 1024) throw ConfigError("prop_hidden must be in [128, 1024]");
    if (phi && !(*phi >= 0.0 && *phi <= 1.0)) throw ConfigError("phi must be in [0, 1]");
    if (no_struct && no_struct_model) throw ConfigError("--no-struct and --no-struct-model are exclusive");
    if (!(report_threshold >= 0.0 && report_threshold <= 1.0)) throw ConfigError("report_threshold must be in [0, 1]");
    if (!(split.t1 < split.t2 && split.t2 < split.t3)) throw ConfigError("split dates must satisfy t1 < t2 < t3");
    walk_config(0).validate();
    embedding_config(0).validate();
  }

  WalkConfig walk_config(std::uint64_t protein_seed) const {
    return {walk_p, walk_q, walk_length, walks_per_node, protein_seed, false};
  }
  EmbeddingConfig embedding_config(std::uint64_t protein_seed) const {
    return {emb_dim, emb_window, emb_negatives, emb_epochs, emb_lr, protein_seed};
  }
};

namespace detail {

template <class T>
T parse_config_value(std::string_view key, std::string_view v) {
  if constexpr (std::is_same_v<T, double>) {
    if (auto d = parse_double(v)) return *d;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
  } else {
    if (auto i = parse_int<T>(v)) return *i;
  }
  throw ConfigError("config key '" + std::string(key) + "': bad value '" + std::string(v) + "'");
}

inline Date parse_config_date(std::string_view key, std::string_view v) {
  auto d = Date::parse(v);
  if (!d) throw ConfigError("config key '" + std::string(key) + "': expected YYYY-MM-DD");
  return *d;
}

}  // namespace detail

// Setters for every config key.
inline std::map<std::string, std::function<void(RunConfig&, std::string_view)>, std::less<>> config_keys() {
  using Setter = std::function<void(RunConfig&, std::string_view)>;
  std::map<std::string, Setter, std::less<>> keys;
  auto num = [&](const char* key, auto RunConfig::*field) {
    using T = std::remove_reference_t<decltype(std::declval<RunConfig&>().*field)>;
    keys[key] = [key, field](RunConfig& c, std::string_view v) { c.*field = detail::parse_config_value<T>(key, v); };
  };
  auto path = [&](const char* key, fs::path RunConfig::*field) {
    keys[key] = [field](RunConfig& c, std::string_view v) { c.*field = fs::path(std::string(v)); };
  };
  keys["branch"] = [](RunConfig& c, std::string_view v) {
    auto ns = parse_namespace(v);
    if (!ns) throw ConfigError("branch must be BPO, MFO or CCO");
    c.branch = *ns;
  };
  num("seed", &RunConfig::seed);
  path("data_dir", &RunConfig::data_dir);
  path("obo", &RunConfig::obo);
  path("sequences", &RunConfig::sequences);
  path("structures", &RunConfig::structures);
  path("ppi", &RunConfig::ppi);
  path("homology", &RunConfig::homology);
  path("annotations", &RunConfig::annotations);
  path("seq_features", &RunConfig::seq_features);
  path("work_dir", &RunConfig::work_dir);
  num("seq_dim", &RunConfig::seq_dim);
  num("ppi_min_score", &RunConfig::ppi_min_score);
  num("homology_k", &RunConfig::homology_k);
  num("homology_threshold", &RunConfig::homology_threshold);
  keys["split_t1"] = [](RunConfig& c, std::string_view v) { c.split.t1 = detail::parse_config_date("split_t1", v); };
  keys["split_t2"] = [](RunConfig& c, std::string_view v) { c.split.t2 = detail::parse_config_date("split_t2", v); };
  keys["split_t3"] = [](RunConfig& c, std::string_view v) { c.split.t3 = detail::parse_config_date("split_t3", v); };
  num("contact_threshold", &RunConfig::contact_threshold);
  num("walk_p", &RunConfig::walk_p);
  num("walk_q", &RunConfig::walk_q);
  num("walk_length", &RunConfig::walk_length);
  num("walks_per_node", &RunConfig::walks_per_node);
  num("emb_dim", &RunConfig::emb_dim);
  num("emb_window", &RunConfig::emb_window);
  num("emb_negatives", &RunConfig::emb_negatives);
  num("emb_epochs", &RunConfig::emb_epochs);
  num("emb_lr", &RunConfig::emb_lr);
  num("struct_hidden", &RunConfig::struct_hidden);
  num("struct_conv_layers", &RunConfig::struct_conv_layers);
  num("struct_modules", &RunConfig::struct_modules);
  num("pool_rate", &RunConfig::pool_rate);
  num("struct_dropout", &RunConfig::struct_dropout);
  num("struct_lr", &RunConfig::struct_lr);
  num("struct_epochs", &RunConfig::struct_epochs);
  num("struct_batch", &RunConfig::struct_batch);
  num("prop_hidden", &RunConfig::prop_hidden);
  num("mlp_layers", &RunConfig::mlp_layers);
  num("prop_layers", &RunConfig::prop_layers);
  num("dropout", &RunConfig::dropout);
  num("prop_lr", &RunConfig::prop_lr);
  num("prop_epochs", &RunConfig::prop_epochs);
  num("resume", &RunConfig::resume);
  keys["phi"] = [](RunConfig& c, std::string_view v) { c.phi = detail::parse_config_value<double>("phi", v); };
  num("label_layers", &RunConfig::label_layers);
  num("report_threshold", &RunConfig::report_threshold);
  num("no_struct", &RunConfig::no_struct);
  num("no_struct_model", &RunConfig::no_struct_model);
  num("no_propagation", &RunConfig::no_propagation);
  num("no_label_prop", &RunConfig::no_label_prop);
  num("weighted_logits", &RunConfig::weighted_logits);
  return keys;
}

inline void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  static const auto keys = config_keys();
  auto it = keys.find(key);
  if (it == keys.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second(cfg, trim(value));
}

// "key = value" lines; '#' starts a comment.
inline void apply_config_text(RunConfig& cfg, std::string_view text) {
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(at_line(line_no, "expected 'key = value'"));
    try {
      set_config_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(at_line(line_no, e.what()));
    }
  }
}

// Reads a config file; data_dir defaults to the file's directory.
inline RunConfig load_run_config(const fs::path& file) {
  RunConfig cfg;
  cfg.data_dir = file.has_parent_path() ? file.parent_path() : fs::path(".");
  apply_config_text(cfg, read_file(file));
  return cfg;
}

// ---------------------------------------------------------------------------
// Shared inputs

inline std::string read_input(const fs::path& p, std::string_view what) {
  if (!fs::exists(p)) throw IngestError(std::string(what) + " not found: " + p.string());
  return read_file(p);
}

// Parses `text` with `parse`, prefixing errors with the file name.
template <class F>
auto parse_file(const fs::path& p, std::string_view what, F parse) {
  const std::string text = read_input(p, what);
  try {
    return parse(text);
  } catch (const FormatError& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
}

// Network nodes are the FASTA ids in sorted order, so results do not depend
// on input file order.
struct Dataset {
  std::vector<SequenceRecord> sequences;  // sorted by id
  std::vector<std::string> proteins;
  GoDag dag;                              // branch terms only
  LabelMatrix labels;                     // proteins × branch terms, closed
  DatasetSplit split;                     // restricted to `proteins`
  std::vector<std::uint8_t> train_mask;
  std::vector<std::size_t> train_rows, valid_rows, test_rows;
};

inline Dataset load_dataset(const RunConfig& cfg) {
  Dataset ds;
  ds.sequences = parse_file(cfg.input(cfg.sequences), "sequence file", [](std::string_view t) { return parse_fasta(t); });
  std::sort(ds.sequences.begin(), ds.sequences.end(),
            [](const SequenceRecord& a, const SequenceRecord& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
    if (i > 0 && ds.sequences[i].id == ds.sequences[i - 1].id)
      throw IngestError("duplicate sequence id " + ds.sequences[i].id);
    ds.proteins.push_back(ds.sequences[i].id);
  }
  if (ds.proteins.empty()) throw IngestError("no sequences in " + cfg.input(cfg.sequences).string());

  const GoDag full = parse_file(cfg.input(cfg.obo), "ontology", [](std::string_view t) { return parse_obo(t); });
  ds.dag = branch_filter(full, cfg.branch);
  if (ds.dag.empty()) throw IngestError("ontology has no " + std::string(to_string(cfg.branch)) + " terms");
  const auto all = parse_file(cfg.input(cfg.annotations), "annotation file",
                              [](std::string_view t) { return parse_annotations(t); });
  std::vector<Annotation> anns;
  for (const auto& a : annotations_in_branch(all, full, cfg.branch))
    if (std::binary_search(ds.proteins.begin(), ds.proteins.end(), a.protein)) anns.push_back(a);
  const auto pt = protein_terms(anns);
  ds.labels = true_path_closure(ds.dag, pt, ds.proteins);
  ds.split = temporal_split(anns, cfg.split);

  ds.train_mask.assign(ds.proteins.size(), 0);
  auto rows_of = [&](const std::vector<std::string>& ids) {
    std::vector<std::size_t> rows;
    for (const auto& id : ids) rows.push_back(*ds.labels.protein_row(id));
    return rows;
  };
  ds.train_rows = rows_of(ds.split.train);
  ds.valid_rows = rows_of(ds.split.valid);
  ds.test_rows = rows_of(ds.split.test);
  for (std::size_t r : ds.train_rows) ds.train_mask[r] = 1;
  if (ds.train_rows.empty()) throw IngestError("no training proteins in branch " + std::string(to_string(cfg.branch)));
  return ds;
}

inline HeteroNetwork load_network(const RunConfig& cfg, const Dataset& ds) {
  auto ppi = parse_file(cfg.input(cfg.ppi), "PPI file",
                        [&](std::string_view t) { return parse_ppi_tsv(t, cfg.ppi_min_score); });
  SimilarityEdgeList hom;
  if (cfg.homology.empty()) {
    hom = build_homology_network(ds.sequences, cfg.homology_k, cfg.homology_threshold);
  } else {
    hom = parse_file(cfg.input(cfg.homology), "homology file", [](std::string_view t) { return parse_similarity_tsv(t); });
  }
  return HeteroNetwork(ds.proteins, ppi, hom);
}

inline FeatureTable load_sequence_features(const RunConfig& cfg, const Dataset& ds) {
  if (cfg.seq_features.empty()) return toy_sequence_features(ds.sequences, cfg.seq_dim);
  const auto p = cfg.input(cfg.seq_features);
  if (!fs::exists(p)) throw IngestError("sequence feature table not found: " + p.string());
  try {
    return load_feature_table(read_file(p));
  } catch (const FormatError& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Stages

inline fs::path contact_path(const RunConfig& cfg, std::string_view id) {
  return cfg.work_dir / "contacts" / (std::string(id) + ".edges");
}
inline fs::path embedding_path(const RunConfig& cfg, std::string_view id) {
  return cfg.work_dir / "residues" / (std::string(id) + ".emb");
}

inline std::optional<fs::path> find_structure(const RunConfig& cfg, std::string_view id) {
  for (const char* ext : {".ca", ".pdb"}) {
    auto p = cfg.input(cfg.structures) / (std::string(id) + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

struct ContactSummary {
  std::size_t written = 0;
  std::vector<std::string> missing;
};

// One edge list per protein with a structure file; proteins without one are
// listed in contacts/missing.txt.
inline ContactSummary cmd_contact(const RunConfig& cfg) {
  cfg.validate();
  const Dataset ds = load_dataset(cfg);
  ContactSummary s;
  for (const auto& rec : ds.sequences) {
    const auto path = find_structure(cfg, rec.id);
    if (!path) {
      s.missing.push_back(rec.id);
      continue;
    }
    CoordinateRecord coords;
    try {
      coords = parse_coords(read_file(*path), rec.id);
      write_file_atomic(contact_path(cfg, rec.id), serialize_edge_list(build_contact_map(coords, cfg.contact_threshold)));
    } catch (const Error& e) {
      throw IngestError(path->string() + ": " + e.what());
    }
    ++s.written;
  }
  std::string missing;
  for (const auto& id : s.missing) missing += id + '\n';
  write_file_atomic(cfg.work_dir / "contacts" / "missing.txt", missing);
  if (!s.missing.empty())
    log::warn(std::to_string(s.missing.size()) + " proteins have no structure file; they get zero structural features");
  return s;
}

inline std::optional<ContactGraph> load_contact_graph(const RunConfig& cfg, std::string_view id) {
  const auto p = contact_path(cfg, id);
  if (!fs::exists(p)) return std::nullopt;
  try {
    return parse_edge_list(read_file(p));
  } catch (const FormatError& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
}

// Per-protein walk and embedding seeds depend on the id, not on its position.
inline std::uint64_t protein_seed(const RunConfig& cfg, std::string_view id) {
  return derive_seed(cfg.seed, 0xe3b, stable_hash(id));
}

inline std::size_t cmd_embed(const RunConfig& cfg) {
  cfg.validate();
  const Dataset ds = load_dataset(cfg);
  std::size_t written = 0;
  for (const auto& id : ds.proteins) {
    const auto g = load_contact_graph(cfg, id);
    if (!g) continue;
    const auto seed = protein_seed(cfg, id);
    const auto emb = embed_residues(*g, cfg.walk_config(seed), cfg.embedding_config(derive_seed(seed, 1)));
    write_file_atomic(embedding_path(cfg, id), serialize_embeddings(emb));
    ++written;
  }
  return written;
}

// Contact graph plus the stored node2vec ∥ one-hot residue features, or
// nullopt when the protein has no structure.
inline std::vector<std::optional<StructInput>> load_struct_inputs(const RunConfig& cfg, const Dataset& ds) {
  std::vector<std::optional<StructInput>> out;
  for (const auto& id : ds.proteins) {
    auto g = load_contact_graph(cfg, id);
    if (!g) {
      out.emplace_back();
      continue;
    }
    const auto ep = embedding_path(cfg, id);
    if (!fs::exists(ep)) throw IngestError("residue embeddings missing for " + id + "; run the embed stage");
    DenseMatrix emb;
    try {
      emb = parse_embeddings(read_file(ep));
    } catch (const FormatError& e) {
      throw FormatError(ep.string() + ": " + e.what());
    }
    if (emb.rows() != g->size() || emb.cols() != cfg.emb_dim + kResidueAlphabet.size())
      throw IngestError(ep.string() + ": shape does not match the contact graph and emb_dim");
    out.push_back(StructInput{std::move(*g), std::move(emb)});
  }
  return out;
}

inline StructArch struct_arch(const RunConfig& cfg, std::size_t num_labels) {
  StructArch a;
  a.d_in = cfg.emb_dim + kResidueAlphabet.size();
  a.d2 = cfg.struct_hidden;
  a.num_labels = num_labels;
  a.conv_layers = cfg.struct_conv_layers;
  a.modules = cfg.struct_modules;
  a.pool_rate = cfg.pool_rate;
  a.dropout = cfg.struct_dropout;
  return a;
}

inline fs::path struct_checkpoint_path(const RunConfig& cfg) { return cfg.branch_dir() / "struct.ckpt"; }
inline fs::path struct_features_path(const RunConfig& cfg) { return cfg.branch_dir() / "struct_features.hse"; }

// Trains the structure model on training proteins that have a structure.
inline StructTrainResult cmd_train_struct(const RunConfig& cfg) {
  cfg.validate();
  const Dataset ds = load_dataset(cfg);
  auto inputs = load_struct_inputs(cfg, ds);
  std::vector<StructInput> train;
  std::vector<std::size_t> rows;
  for (std::size_t r : ds.train_rows) {
    if (!inputs[r]) continue;
    train.push_back(std::move(*inputs[r]));
    rows.push_back(r);
  }
  if (train.empty()) throw IngestError("no training protein has a structure; run the contact and embed stages");
  const DenseMatrix targets = select_rows(ds.labels.matrix(), rows);
  StructTrainConfig tc;
  tc.adam.lr = cfg.struct_lr;
  tc.epochs = cfg.struct_epochs;
  tc.batch_size = cfg.struct_batch;
  tc.seed = derive_seed(cfg.seed, 0x57a);
  auto result = struct_train(train, targets, struct_arch(cfg, ds.labels.num_terms()), tc);
  write_file_atomic(struct_checkpoint_path(cfg), save_struct_checkpoint(result.model, to_string(cfg.branch)));
  return result;
}

inline FeatureTable cmd_extract(const RunConfig& cfg) {
  cfg.validate();
  const Dataset ds = load_dataset(cfg);
  const auto p = struct_checkpoint_path(cfg);
  auto ckpt = load_struct_checkpoint(read_input(p, "structure checkpoint"));
  if (ckpt.branch != to_string(cfg.branch))
    throw ConfigError(p.string() + " was trained for branch " + ckpt.branch);
  const auto inputs = load_struct_inputs(cfg, ds);
  auto table = extract_hidden(ckpt.model, ds.proteins, inputs);
  write_file_atomic(struct_features_path(cfg), serialize_feature_binary(table));
  return table;
}

// Mean residue feature vector per protein; the structural input used when the
// structure model is ablated. Proteins without structure get zeros.
inline FeatureTable mean_residue_features(const RunConfig& cfg, const Dataset& ds) {
  const auto inputs = load_struct_inputs(cfg, ds);
  DenseMatrix m(ds.proteins.size(), cfg.emb_dim + kResidueAlphabet.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!inputs[i]) continue;
    const auto sums = column_sums(inputs[i]->features);
    for (std::size_t k = 0; k < m.cols(); ++k) m(i, k) = sums(0, k) / static_cast<double>(inputs[i]->features.rows());
  }
  return FeatureTable(ds.proteins, std::move(m));
}

// Model input H for the network nodes, honouring the structural ablations.
inline DenseMatrix model_input(const RunConfig& cfg, const Dataset& ds) {
  const FeatureTable se = load_sequence_features(cfg, ds);
  if (cfg.no_struct) return concat_features(ds.proteins, se);
  FeatureTable st;
  if (cfg.no_struct_model) {
    st = mean_residue_features(cfg, ds);
  } else {
    const auto p = struct_features_path(cfg);
    st = load_feature_table(read_input(p, "structural feature table"));
  }
  return concat_features(ds.proteins, se, &st);
}

inline PropArch prop_arch(const RunConfig& cfg, std::size_t d_in, std::size_t num_labels) {
  PropArch a;
  a.d_in = d_in;
  a.d3 = cfg.prop_hidden;
  a.num_labels = num_labels;
  a.mlp_layers = cfg.mlp_layers;
  a.prop_layers = cfg.prop_layers;
  a.dropout = cfg.dropout;
  a.propagation = !cfg.no_propagation;
  a.weighted_logits = cfg.weighted_logits;
  return a;
}

inline PropTrainConfig prop_train_config(const RunConfig& cfg) {
  PropTrainConfig tc;
  tc.adam.lr = cfg.prop_lr;
  tc.epochs = cfg.prop_epochs;
  tc.seed = derive_seed(cfg.seed, 0x960);
  return tc;
}

inline fs::path prop_checkpoint_path(const RunConfig& cfg) { return cfg.variant_dir() / "prop.ckpt"; }

inline EvalInput eval_rows(const DenseMatrix& scores, const LabelMatrix& labels, std::span<const std::size_t> rows) {
  EvalInput e;
  e.scores = select_rows(scores, rows);
  e.truth = select_rows(labels.matrix(), rows);
  return e;
}

// True when some row in `rows` has a label.
inline bool any_labelled(const LabelMatrix& labels, std::span<const std::size_t> rows) {
  for (std::size_t r : rows)
    for (double v : labels.matrix().row(r))
      if (v > 0.5) return true;
  return false;
}

inline PropTrainState cmd_train_prop(const RunConfig& cfg) {
  cfg.validate();
  const Dataset ds = load_dataset(cfg);
  const HeteroNetwork net = load_network(cfg, ds);
  const DenseMatrix h = model_input(cfg, ds);
  const auto arch = prop_arch(cfg, h.cols(), ds.labels.num_terms());
  const auto tc = prop_train_config(cfg);
  const auto ckpt_path = prop_checkpoint_path(cfg);
  PropTrainState state = init_prop_training(arch, tc);
  if (cfg.resume && fs::exists(ckpt_path)) {
    auto ckpt = load_prop_checkpoint(read_file(ckpt_path));
    if (ckpt.branch != to_string(cfg.branch) || !(ckpt.state.model.arch() == arch))
      throw ConfigError(ckpt_path.string() + " does not match the current branch and architecture");
    state = std::move(ckpt.state);
  }
  ValidationFn validate;
  if (any_labelled(ds.labels, ds.valid_rows)) {
    validate = [&](const DenseMatrix& probs) { return fmax(eval_rows(probs, ds.labels, ds.valid_rows)).value; };
  }
  try {
    train_propagation(state, net, h, ds.labels.matrix(), ds.train_mask, tc, validate);
  } catch (const NumericError&) {
    write_file_atomic(ckpt_path, save_prop_checkpoint(state, to_string(cfg.branch)));
    throw;
  }
  write_file_atomic(ckpt_path, save_prop_checkpoint(state, to_string(cfg.branch)));
  write_file_atomic(cfg.variant_dir() / "train_log.csv", serialize_training_log(state.log));
  return state;
}

inline fs::path predictions_path(const RunConfig& cfg) { return cfg.variant_dir() / "predictions.tsv"; }

// Fused scores for every network node; the TSV lists test proteins.
inline PredictionOutput cmd_predict(const RunConfig& cfg) {
  cfg.validate();
  const Dataset ds = load_dataset(cfg);
  if (ds.test_rows.empty()) throw IngestError("empty test set");
  const HeteroNetwork net = load_network(cfg, ds);
  const DenseMatrix h = model_input(cfg, ds);
  const auto p = prop_checkpoint_path(cfg);
  auto ckpt = load_prop_checkpoint(read_input(p, "propagation checkpoint"));
  if (ckpt.branch != to_string(cfg.branch)) throw ConfigError(p.string() + " was trained for branch " + ckpt.branch);
  warn_isolated(net, ds.test_rows);
  auto out = predict(ckpt.state.model, net, h, ds.labels.matrix(), ds.train_mask, cfg.fusion_weight(), cfg.label_layers);
  write_file_atomic(predictions_path(cfg),
                    serialize_predictions(ds.proteins, ds.labels.terms(), out.fused, ds.test_rows, cfg.report_threshold));
  return out;
}

// Scores every metric on the test proteins from the prediction TSV; IC comes
// from the training labels.
inline std::vector<MetricRow> cmd_eval(const RunConfig& cfg) {
  cfg.validate();
  const Dataset ds = load_dataset(cfg);
  if (ds.test_rows.empty()) throw IngestError("empty test set");
  const auto p = predictions_path(cfg);
  const auto preds = parse_file(p, "prediction file", [](std::string_view t) { return parse_predictions(t); });
  DenseMatrix scores(ds.proteins.size(), ds.labels.num_terms());
  for (const auto& s : preds) {
    const auto r = ds.labels.protein_row(s.protein);
    const auto c = ds.labels.term_column(s.term);
    if (!r || !c) throw IngestError(p.string() + ": unknown protein or term " + s.protein + " " + s.term);
    scores(*r, *c) = s.score;
  }
  EvalInput e = eval_rows(scores, ds.labels, ds.test_rows);
  const auto ic = compute_ic(ds.labels.select_proteins(ds.split.train));
  e.ic = ic.aligned(ds.labels.terms());
  const auto rows = evaluate_all(e, std::string(to_string(cfg.branch)));
  write_file_atomic(cfg.variant_dir() / "metrics.tsv", serialize_metrics(rows));
  write_file_atomic(cfg.variant_dir() / "pr_curve.csv", serialize_pr_curve(pr_curve(e)));
  return rows;
}

// Structural stages are shared by all variants and skipped when the ablation
// does not need them.
inline std::vector<MetricRow> run_all(const RunConfig& cfg) {
  cfg.validate();
  if (!cfg.no_struct) {
    cmd_contact(cfg);
    cmd_embed(cfg);
    if (!cfg.no_struct_model) {
      cmd_train_struct(cfg);
      cmd_extract(cfg);
    }
  }
  cmd_train_prop(cfg);
  cmd_predict(cfg);
  return cmd_eval(cfg);
}

}  // namespace msngo
