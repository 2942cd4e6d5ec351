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

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "msngo/error.hpp"
#include "msngo/features.hpp"
#include "msngo/ingest.hpp"
#include "msngo/ontology.hpp"
#include "msngo/random.hpp"
#include "msngo/text.hpp"

namespace msngo {

// Synthetic multi-species dataset with planted label structure.
//
// Each protein belongs to an ortholog family (same index in every species)
// and independently gets one of two folds. Family labels are shared by all
// members and orthologs; the fold label is per protein and visible only
// through the coordinates (helix vs. strand meander) and a fold-biased
// residue composition. Sequence features are a noisy copy of the family
// prototype scaled to unit length, so the family is recoverable from network
// neighbours better than from a protein's own features.
struct FixtureConfig {
  std::uint64_t seed = 0;
  std::size_t species = 2;
  std::size_t proteins_per_species = 100;
  std::size_t labels = 16;
  std::size_t family_size = 10;       // members per family within a species
  std::size_t leaves_per_family = 2;  // family-specific leaf terms
  std::size_t min_length = 30;
  std::size_t max_length = 50;
  std::size_t seq_dim = 32;
  double seq_noise = 2.2;             // per-coordinate sd around the family prototype
  double composition_bias = 0.7;      // share of residues drawn from the fold's preferred set
  double coord_noise = 0.3;           // Å
  double ppi_family_prob = 0.7;
  double ppi_noise_prob = 0.01;
  double homology_noise_prob = 0.002;
  double train_fraction = 0.6;
  double valid_fraction = 0.2;

  void validate() const {
    if (species == 0 || proteins_per_species == 0 || family_size == 0)
      throw ConfigError("fixture counts must be positive");
    if (labels < 6) throw ConfigError("fixture needs at least 6 labels (root, fold terms, one family category)");
    if (min_length < 4 || max_length < min_length) throw ConfigError("fixture chain lengths must satisfy 4 <= min <= max");
    if (seq_dim == 0) throw ConfigError("fixture sequence feature dimension must be positive");
    if (!(seq_noise >= 0.0) || !(coord_noise >= 0.0)) throw ConfigError("fixture noise levels must be >= 0");
    if (!(train_fraction > 0.0 && valid_fraction >= 0.0 && train_fraction + valid_fraction < 1.0))
      throw ConfigError("fixture split fractions must leave a non-empty test share");
  }
};

struct FixtureProtein {
  std::string id;
  std::size_t species = 0;
  std::size_t family = 0;
  std::size_t fold = 0;  // 0 helix, 1 strand meander
  std::string split;     // train | valid | test
  std::vector<std::string> planted;  // leaf terms before closure
};

struct FixtureBundle {
  FixtureConfig config;
  GoDag dag;
  std::vector<FixtureProtein> proteins;
  std::vector<SequenceRecord> sequences;
  std::vector<CoordinateRecord> structures;
  PpiEdgeList ppi;
  SimilarityEdgeList homology;
  std::vector<Annotation> annotations;
  FeatureTable seq_features;
};

inline constexpr Namespace kFixtureNamespace = Namespace::MFO;

namespace detail {

inline std::string fixture_term(std::size_t k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "GO:%07zu", 9000000 + k);
  return buf;
}

struct FixtureTerms {
  std::vector<RawTerm> raw;
  std::string fold_parent;
  std::array<std::string, 2> fold_leaf;
  std::vector<std::vector<std::string>> category_leaves;
};

// root; fold parent with two fold leaves; the rest split into categories
// (children of root) and their leaves.
inline FixtureTerms fixture_terms(std::size_t labels) {
  FixtureTerms t;
  std::size_t next = 0;
  auto add = [&](std::vector<std::pair<std::string, Relation>> parents) {
    t.raw.push_back({fixture_term(next++), kFixtureNamespace, std::move(parents)});
    return t.raw.back().id;
  };
  const std::string root = add({});
  t.fold_parent = add({{root, Relation::is_a}});
  t.fold_leaf[0] = add({{t.fold_parent, Relation::is_a}});
  t.fold_leaf[1] = add({{t.fold_parent, Relation::is_a}});
  const std::size_t rest = labels - 4;
  const std::size_t categories = std::max<std::size_t>(1, rest / 4);
  std::vector<std::string> cats;
  for (std::size_t c = 0; c < categories; ++c) cats.push_back(add({{root, Relation::is_a}}));
  t.category_leaves.resize(categories);
  for (std::size_t k = 0; k < rest - categories; ++k) {
    const std::size_t c = k % categories;
    const Relation rel = k % 5 == 4 ? Relation::part_of : Relation::is_a;
    t.category_leaves[c].push_back(add({{cats[c], rel}}));
  }
  return t;
}

inline std::vector<std::array<double, 3>> helix_trace(std::size_t n) {
  std::vector<std::array<double, 3>> xyz;
  const double turn = 100.0 * std::numbers::pi / 180.0;
  for (std::size_t k = 0; k < n; ++k)
    xyz.push_back({2.3 * std::cos(turn * k), 2.3 * std::sin(turn * k), 1.5 * k});
  return xyz;
}

// Antiparallel strands of 7 residues, 3.4 Å apart along a strand and 4.8 Å
// between strands.
inline std::vector<std::array<double, 3>> meander_trace(std::size_t n) {
  std::vector<std::array<double, 3>> xyz;
  constexpr std::size_t kStrand = 7;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t s = k / kStrand, pos = k % kStrand;
    const std::size_t along = s % 2 == 0 ? pos : kStrand - 1 - pos;
    xyz.push_back({4.8 * s, 3.4 * along, 0.0});
  }
  return xyz;
}

}  // namespace detail

inline FixtureBundle synth_fixture(const FixtureConfig& cfg) {
  cfg.validate();
  FixtureBundle b;
  b.config = cfg;
  Rng rng(derive_seed(cfg.seed, 0xf1c));
  auto normal = [&](double sd) { return std::normal_distribution<double>(0.0, sd)(rng); };
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

  const auto terms = detail::fixture_terms(cfg.labels);
  b.dag = GoDag::from_terms(terms.raw);

  // Family label sets and sequence prototypes.
  const std::size_t families = (cfg.proteins_per_species + cfg.family_size - 1) / cfg.family_size;
  std::vector<std::vector<std::string>> family_leaves(families);
  DenseMatrix prototype(families, cfg.seq_dim);
  for (std::size_t f = 0; f < families; ++f) {
    auto leaves = terms.category_leaves[f % terms.category_leaves.size()];
    std::shuffle(leaves.begin(), leaves.end(), rng);
    leaves.resize(std::min(cfg.leaves_per_family, leaves.size()));
    family_leaves[f] = std::move(leaves);
    for (double& v : prototype.row(f)) v = normal(1.0);
  }

  static constexpr std::string_view kStandard = "ACDEFGHIKLMNPQRSTVWY";
  static constexpr std::array<std::string_view, 2> kPreferred = {"AELMQKR", "VIYFWTC"};
  DenseMatrix seq_values(cfg.species * cfg.proteins_per_species, cfg.seq_dim);
  std::vector<std::string> ids;
  for (std::size_t s = 0; s < cfg.species; ++s) {
    for (std::size_t i = 0; i < cfg.proteins_per_species; ++i) {
      FixtureProtein p;
      char buf[32];
      std::snprintf(buf, sizeof buf, "SP%zu_%04zu", s + 1, i + 1);
      p.id = buf;
      p.species = s;
      p.family = i / cfg.family_size;
      p.fold = uniform01(rng) < 0.5 ? 0 : 1;
      const double u = uniform01(rng);
      p.split = u < cfg.train_fraction ? "train" : u < cfg.train_fraction + cfg.valid_fraction ? "valid" : "test";
      p.planted = family_leaves[p.family];
      p.planted.push_back(terms.fold_leaf[p.fold]);

      const std::size_t len = cfg.min_length + pick(cfg.max_length - cfg.min_length + 1);
      std::string seq;
      for (std::size_t k = 0; k < len; ++k) {
        const auto& pool = uniform01(rng) < cfg.composition_bias ? kPreferred[p.fold] : kStandard;
        seq += pool[pick(pool.size())];
      }
      const auto trace = p.fold == 0 ? detail::helix_trace(len) : detail::meander_trace(len);
      CoordinateRecord rec{p.id, {}};
      for (std::size_t k = 0; k < len; ++k) {
        Residue r{static_cast<long>(k + 1), seq[k], trace[k]};
        for (double& c : r.ca) c += normal(cfg.coord_noise);
        rec.residues.push_back(r);
      }
      const std::size_t row = b.proteins.size();
      double norm = 0.0;
      for (std::size_t d = 0; d < cfg.seq_dim; ++d) {
        seq_values(row, d) = prototype(p.family, d) + normal(cfg.seq_noise);
        norm += seq_values(row, d) * seq_values(row, d);
      }
      for (std::size_t d = 0; d < cfg.seq_dim; ++d) seq_values(row, d) /= std::sqrt(norm);

      b.sequences.push_back({p.id, seq});
      b.structures.push_back(std::move(rec));
      ids.push_back(p.id);
      b.proteins.push_back(std::move(p));
    }
  }
  b.seq_features = FeatureTable(ids, std::move(seq_values));

  // Annotation dates place each protein in its split.
  const std::array<std::pair<std::string_view, Date>, 3> split_dates = {
      {{"train", Date{2019, 6, 1}}, {"valid", Date{2021, 9, 1}}, {"test", Date{2023, 2, 1}}}};
  for (const auto& p : b.proteins) {
    Date base{};
    for (const auto& [name, d] : split_dates)
      if (p.split == name) base = d;
    for (const auto& t : p.planted) {
      Date d = base;
      d.day = 1 + static_cast<unsigned>(pick(28));
      b.annotations.push_back({p.id, t, d});
    }
  }
  std::sort(b.annotations.begin(), b.annotations.end());

  // PPI inside each species, dense within families.
  const std::size_t per = cfg.proteins_per_species;
  for (std::size_t s = 0; s < cfg.species; ++s) {
    for (std::size_t i = 0; i < per; ++i) {
      for (std::size_t j = i + 1; j < per; ++j) {
        const auto& a = b.proteins[s * per + i];
        const auto& c = b.proteins[s * per + j];
        const bool same = a.family == c.family;
        if (uniform01(rng) < (same ? cfg.ppi_family_prob : cfg.ppi_noise_prob)) {
          const double score = same ? 500.0 + std::floor(500.0 * uniform01(rng)) : 150.0 + std::floor(250.0 * uniform01(rng));
          b.ppi.edges.push_back({a.id, c.id, std::min(score, 999.0)});
        }
      }
    }
  }
  // Homology between orthologs (same index) across species, plus noise.
  for (std::size_t s = 0; s < cfg.species; ++s) {
    for (std::size_t t = s + 1; t < cfg.species; ++t) {
      for (std::size_t i = 0; i < per; ++i) {
        for (std::size_t j = 0; j < per; ++j) {
          const auto& a = b.proteins[s * per + i];
          const auto& c = b.proteins[t * per + j];
          if (i == j) {
            b.homology.edges.push_back({a.id, c.id, 0.6 + 0.4 * uniform01(rng)});
          } else if (uniform01(rng) < cfg.homology_noise_prob) {
            b.homology.edges.push_back({a.id, c.id, 0.3 + 0.2 * uniform01(rng)});
          }
        }
      }
    }
  }
  return b;
}

// Closed planted label sets of two proteins: share of a's labels that b has.
inline double label_share(const GoDag& dag, std::span<const std::string> a, std::span<const std::string> b) {
  auto closed = [&](std::span<const std::string> leaves) {
    std::set<std::size_t> out;
    for (const auto& t : leaves)
      for (std::size_t anc : dag.ancestors(*dag.index_of(t))) out.insert(anc);
    return out;
  };
  const auto ca = closed(a), cb = closed(b);
  std::size_t shared = 0;
  for (std::size_t t : ca) shared += cb.count(t);
  return ca.empty() ? 1.0 : static_cast<double>(shared) / static_cast<double>(ca.size());
}

inline std::string fixture_manifest(const FixtureBundle& b) {
  const auto& c = b.config;
  std::string out;
  out += "# synthetic fixture, seed " + std::to_string(c.seed) + "\n";
  out += "# " + std::to_string(c.species) + " species x " + std::to_string(c.proteins_per_species) + " proteins, " +
         std::to_string(c.labels) + " " + std::string(to_string(kFixtureNamespace)) + " terms\n";
  out += "# family: members share family leaf labels; protein i of every species are orthologs (same family)\n";
  out += "# fold: 0 helix, 1 strand meander; sets one fold leaf label, coordinates and residue composition\n";
  out += "# sequence features: family prototype + N(0, " + format_double(c.seq_noise) + ") per coordinate, rows scaled to unit length\n";
  out += "# ppi: within species, p=" + format_double(c.ppi_family_prob) + " inside a family, p=" +
         format_double(c.ppi_noise_prob) + " otherwise\n";
  out += "# homology: every ortholog pair, plus cross-species noise p=" + format_double(c.homology_noise_prob) + "\n";
  out += "protein\tspecies\tfamily\tfold\tsplit\tplanted\n";
  for (const auto& p : b.proteins) {
    out += p.id + '\t' + std::to_string(p.species + 1) + '\t' + std::to_string(p.family) + '\t' +
           std::to_string(p.fold) + '\t' + p.split + '\t';
    for (std::size_t k = 0; k < p.planted.size(); ++k) out += (k ? "," : "") + p.planted[k];
    out += '\n';
  }
  return out;
}

// Hyperparameters sized for the fixture, in run-config syntax.
inline std::string fixture_run_config(const FixtureBundle& b) {
  std::string out;
  out += "# pipeline settings for the synthetic fixture\n";
  out += "branch = " + std::string(to_string(kFixtureNamespace)) + "\n";
  out += "seq_features = seq_features.txt\n";
  out += "seed = " + std::to_string(b.config.seed) + "\n";
  out += "emb_dim = 16\nwalk_length = 20\nwalks_per_node = 4\nemb_epochs = 1\n";
  out += "struct_hidden = 16\nstruct_lr = 0.01\nstruct_batch = 8\nstruct_dropout = 0.2\n";
  out += "prop_hidden = 128\nprop_lr = 0.005\nprop_epochs = 50\ndropout = 0.3\n";
  return out;
}

// Writes go.obo, sequences.fasta, structures/<id>.ca, ppi.tsv, homology.tsv,
// annotations.tsv, seq_features.txt, manifest.tsv and run.cfg under `dir`.
inline void write_fixture(const FixtureBundle& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "structures");
  write_file_atomic(dir / "go.obo", serialize_obo(b.dag));
  write_file_atomic(dir / "sequences.fasta", serialize_fasta(b.sequences));
  for (const auto& s : b.structures) write_file_atomic(dir / "structures" / (s.id + ".ca"), serialize_coords(s));
  write_file_atomic(dir / "ppi.tsv", serialize_ppi(b.ppi));
  write_file_atomic(dir / "homology.tsv", serialize_similarity(b.homology));
  write_file_atomic(dir / "annotations.tsv", serialize_annotations(b.annotations));
  write_file_atomic(dir / "seq_features.txt", serialize_feature_text(b.seq_features));
  write_file_atomic(dir / "manifest.tsv", fixture_manifest(b));
  write_file_atomic(dir / "run.cfg", fixture_run_config(b));
}

}  // namespace msngo
