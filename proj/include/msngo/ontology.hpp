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
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "msngo/error.hpp"
#include "msngo/log.hpp"
#include "msngo/tensor.hpp"
#include "msngo/text.hpp"

namespace msngo {

enum class Namespace { BPO, MFO, CCO };

inline std::string_view to_string(Namespace ns) {
  switch (ns) {
    case Namespace::BPO: return "BPO";
    case Namespace::MFO: return "MFO";
    case Namespace::CCO: return "CCO";
  }
  return "?";
}

inline std::string_view obo_namespace_name(Namespace ns) {
  switch (ns) {
    case Namespace::BPO: return "biological_process";
    case Namespace::MFO: return "molecular_function";
    case Namespace::CCO: return "cellular_component";
  }
  return "?";
}

// Accepts both the branch tags (BPO/MFO/CCO) and OBO namespace names.
inline std::optional<Namespace> parse_namespace(std::string_view s) {
  if (s == "BPO" || s == "biological_process") return Namespace::BPO;
  if (s == "MFO" || s == "molecular_function") return Namespace::MFO;
  if (s == "CCO" || s == "cellular_component") return Namespace::CCO;
  return std::nullopt;
}

enum class Relation { is_a, part_of };

struct GoTerm {
  std::string id;
  Namespace ns = Namespace::BPO;
  // Indices into the owning GoDag.
  std::vector<std::size_t> parents;
  std::vector<Relation> relations;  // parallel to parents
};

// Term description before index resolution.
struct RawTerm {
  std::string id;
  Namespace ns = Namespace::BPO;
  std::vector<std::pair<std::string, Relation>> parents;
};

// Acyclic ontology restricted to is_a/part_of edges. Terms are stored sorted
// by id; immutable after construction.
class GoDag {
 public:
  GoDag() = default;

  // Parent ids must all be present; throws FormatError on dangling links or
  // cycles.
  static GoDag from_terms(std::vector<RawTerm> raw) {
    std::sort(raw.begin(), raw.end(), [](const RawTerm& a, const RawTerm& b) { return a.id < b.id; });
    GoDag dag;
    dag.terms_.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (!dag.index_.emplace(raw[i].id, i).second) {
        throw FormatError("duplicate term id " + raw[i].id);
      }
      dag.terms_.push_back(GoTerm{raw[i].id, raw[i].ns, {}, {}});
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
      std::set<std::pair<std::size_t, Relation>> seen;
      for (const auto& [pid, rel] : raw[i].parents) {
        auto it = dag.index_.find(pid);
        if (it == dag.index_.end()) {
          throw FormatError("term " + raw[i].id + " has dangling parent id " + pid);
        }
        if (it->second == i) throw FormatError("cycle detected: " + pid + " is its own parent");
        // One edge per parent; is_a wins over part_of when both are stated.
        bool duplicate = false;
        for (std::size_t k = 0; k < dag.terms_[i].parents.size(); ++k) {
          if (dag.terms_[i].parents[k] == it->second) {
            duplicate = true;
            if (rel == Relation::is_a) dag.terms_[i].relations[k] = Relation::is_a;
          }
        }
        if (duplicate) continue;
        dag.terms_[i].parents.push_back(it->second);
        dag.terms_[i].relations.push_back(rel);
      }
    }
    dag.build_closure();
    return dag;
  }

  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  const GoTerm& term(std::size_t i) const { return terms_[i]; }
  const std::vector<GoTerm>& terms() const { return terms_; }

  std::optional<std::size_t> index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(std::string_view id) const { return index_of(id).has_value(); }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& t : terms_) n += t.parents.size();
    return n;
  }

  // Sorted ancestor indices, including the term itself.
  std::span<const std::size_t> ancestors(std::size_t i) const { return ancestors_[i]; }

  std::vector<std::size_t> roots() const {
    std::vector<std::size_t> r;
    for (std::size_t i = 0; i < terms_.size(); ++i)
      if (terms_[i].parents.empty()) r.push_back(i);
    return r;
  }

  std::vector<std::string> term_ids() const {
    std::vector<std::string> ids;
    ids.reserve(terms_.size());
    for (const auto& t : terms_) ids.push_back(t.id);
    return ids;
  }

  std::vector<RawTerm> to_raw() const {
    std::vector<RawTerm> raw;
    raw.reserve(terms_.size());
    for (const auto& t : terms_) {
      RawTerm r{t.id, t.ns, {}};
      for (std::size_t k = 0; k < t.parents.size(); ++k)
        r.parents.emplace_back(terms_[t.parents[k]].id, t.relations[k]);
      raw.push_back(std::move(r));
    }
    return raw;
  }

 private:
  void build_closure() {
    // Kahn's algorithm over child -> parent edges; leftover nodes sit on a cycle.
    const std::size_t n = terms_.size();
    std::vector<std::size_t> pending(n);
    std::vector<std::vector<std::size_t>> children(n);
    for (std::size_t i = 0; i < n; ++i) {
      pending[i] = terms_[i].parents.size();
      for (std::size_t p : terms_[i].parents) children[p].push_back(i);
    }
    std::vector<std::size_t> order;
    order.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      if (pending[i] == 0) order.push_back(i);
    for (std::size_t head = 0; head < order.size(); ++head) {
      for (std::size_t c : children[order[head]])
        if (--pending[c] == 0) order.push_back(c);
    }
    if (order.size() != n) {
      for (std::size_t i = 0; i < n; ++i) {
        if (pending[i] != 0) throw FormatError("cycle detected involving term " + terms_[i].id);
      }
    }
    ancestors_.assign(n, {});
    for (std::size_t i : order) {
      std::vector<std::size_t> acc{i};
      for (std::size_t p : terms_[i].parents)
        acc.insert(acc.end(), ancestors_[p].begin(), ancestors_[p].end());
      std::sort(acc.begin(), acc.end());
      acc.erase(std::unique(acc.begin(), acc.end()), acc.end());
      ancestors_[i] = std::move(acc);
    }
  }

  std::vector<GoTerm> terms_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> ancestors_;
};

// Parses the [Term] stanzas of a go-basic style OBO file. Only is_a and
// relationship: part_of links are kept; obsolete terms are dropped.
inline GoDag parse_obo(std::string_view text) {
  struct Pending {
    RawTerm term;
    bool obsolete = false;
    bool has_namespace = false;
    std::size_t line = 0;
  };
  std::vector<Pending> parsed;
  std::optional<Pending> current;
  bool in_term = false;

  auto finish = [&] {
    if (current) {
      if (current->term.id.empty()) throw FormatError(at_line(current->line, "[Term] without id"));
      if (!current->has_namespace && !current->obsolete) {
        throw FormatError(at_line(current->line, "term " + current->term.id + " has no namespace"));
      }
      parsed.push_back(std::move(*current));
      current.reset();
    }
  };

  std::size_t line_no = 0;
  for (std::string_view raw_line : split_lines(text)) {
    ++line_no;
    const std::string_view line = trim(raw_line);
    if (line.empty() || line.front() == '!') continue;
    if (line.front() == '[') {
      finish();
      in_term = line == "[Term]";
      if (in_term) current = Pending{{}, false, false, line_no};
      continue;
    }
    if (!in_term) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw FormatError(at_line(line_no, "expected 'tag: value'"));
    }
    const std::string_view tag = trim(line.substr(0, colon));
    std::string_view value = line.substr(colon + 1);
    if (auto bang = value.find(" !"); bang != std::string_view::npos) value = value.substr(0, bang);
    if (auto brace = value.find(" {"); brace != std::string_view::npos) value = value.substr(0, brace);
    value = trim(value);

    if (tag == "id") {
      current->term.id = std::string(value);
    } else if (tag == "namespace") {
      auto ns = parse_namespace(value);
      if (!ns) throw FormatError(at_line(line_no, "unknown namespace '" + std::string(value) + "'"));
      current->term.ns = *ns;
      current->has_namespace = true;
    } else if (tag == "is_a") {
      current->term.parents.emplace_back(std::string(value), Relation::is_a);
    } else if (tag == "relationship") {
      const auto parts = split_whitespace(value);
      if (parts.size() < 2) throw FormatError(at_line(line_no, "malformed relationship"));
      if (parts[0] == "part_of") current->term.parents.emplace_back(std::string(parts[1]), Relation::part_of);
    } else if (tag == "is_obsolete") {
      current->obsolete = value == "true";
    }
  }
  finish();

  std::set<std::string> obsolete;
  for (const auto& p : parsed)
    if (p.obsolete) obsolete.insert(p.term.id);

  std::vector<RawTerm> terms;
  for (auto& p : parsed) {
    if (p.obsolete) continue;
    auto& parents = p.term.parents;
    const auto removed = std::remove_if(parents.begin(), parents.end(), [&](const auto& link) {
      if (obsolete.count(link.first)) {
        log::warn("term " + p.term.id + ": dropping link to obsolete term " + link.first);
        return true;
      }
      return false;
    });
    parents.erase(removed, parents.end());
    terms.push_back(std::move(p.term));
  }
  return GoDag::from_terms(std::move(terms));
}

inline std::string serialize_obo(const GoDag& dag) {
  std::ostringstream out;
  out << "format-version: 1.2\n";
  for (const auto& t : dag.terms()) {
    out << "\n[Term]\nid: " << t.id << "\nnamespace: " << obo_namespace_name(t.ns) << '\n';
    for (std::size_t k = 0; k < t.parents.size(); ++k) {
      const auto& pid = dag.term(t.parents[k]).id;
      if (t.relations[k] == Relation::is_a) {
        out << "is_a: " << pid << '\n';
      } else {
        out << "relationship: part_of " << pid << '\n';
      }
    }
  }
  return out.str();
}

// Sub-DAG holding only the terms of one namespace; links that leave the
// namespace are cut.
inline GoDag branch_filter(const GoDag& dag, Namespace ns) {
  std::vector<RawTerm> raw;
  for (auto& t : dag.to_raw()) {
    if (t.ns != ns) continue;
    std::erase_if(t.parents, [&](const auto& link) {
      return dag.term(*dag.index_of(link.first)).ns != ns;
    });
    raw.push_back(std::move(t));
  }
  if (raw.empty()) log::warn("branch " + std::string(to_string(ns)) + " has no terms");
  return GoDag::from_terms(std::move(raw));
}

struct ProteinTerm {
  std::string protein;
  std::string term;
  friend auto operator<=>(const ProteinTerm&, const ProteinTerm&) = default;
};

// Binary protein x term annotation matrix.
class LabelMatrix {
 public:
  LabelMatrix() = default;
  LabelMatrix(std::vector<std::string> proteins, std::vector<std::string> terms)
      : proteins_(std::move(proteins)), terms_(std::move(terms)), y_(proteins_.size(), terms_.size()) {
    for (std::size_t i = 0; i < proteins_.size(); ++i) {
      if (!protein_index_.emplace(proteins_[i], i).second)
        throw IngestError("duplicate protein id " + proteins_[i]);
    }
    for (std::size_t j = 0; j < terms_.size(); ++j) {
      if (!term_index_.emplace(terms_[j], j).second) throw IngestError("duplicate term id " + terms_[j]);
    }
  }

  std::size_t num_proteins() const { return proteins_.size(); }
  std::size_t num_terms() const { return terms_.size(); }
  const std::vector<std::string>& proteins() const { return proteins_; }
  const std::vector<std::string>& terms() const { return terms_; }
  const DenseMatrix& matrix() const { return y_; }

  std::optional<std::size_t> protein_row(std::string_view id) const {
    auto it = protein_index_.find(std::string(id));
    if (it == protein_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<std::size_t> term_column(std::string_view id) const {
    auto it = term_index_.find(std::string(id));
    if (it == term_index_.end()) return std::nullopt;
    return it->second;
  }

  bool get(std::size_t row, std::size_t col) const { return y_(row, col) != 0.0; }
  void set(std::size_t row, std::size_t col) { y_(row, col) = 1.0; }

  std::vector<std::string> labels_of(std::size_t row) const {
    std::vector<std::string> out;
    for (std::size_t j = 0; j < terms_.size(); ++j)
      if (get(row, j)) out.push_back(terms_[j]);
    return out;
  }

  std::size_t count(std::size_t col) const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < proteins_.size(); ++i) c += get(i, col) ? 1 : 0;
    return c;
  }

  // Rows for `ids` in the given order; ids absent from this matrix get empty rows.
  LabelMatrix select_proteins(std::span<const std::string> ids) const {
    LabelMatrix out(std::vector<std::string>(ids.begin(), ids.end()), terms_);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (auto r = protein_row(ids[i])) {
        std::copy(y_.row(*r).begin(), y_.row(*r).end(), out.y_.row(i).begin());
      }
    }
    return out;
  }

  LabelMatrix select_terms(std::span<const std::string> ids) const {
    LabelMatrix out(proteins_, std::vector<std::string>(ids.begin(), ids.end()));
    for (std::size_t j = 0; j < ids.size(); ++j) {
      auto c = term_column(ids[j]);
      if (!c) continue;
      for (std::size_t i = 0; i < proteins_.size(); ++i) out.y_(i, j) = y_(i, *c);
    }
    return out;
  }

  friend bool operator==(const LabelMatrix& a, const LabelMatrix& b) {
    return a.proteins_ == b.proteins_ && a.terms_ == b.terms_ && a.y_ == b.y_;
  }

 private:
  std::vector<std::string> proteins_;
  std::vector<std::string> terms_;
  std::unordered_map<std::string, std::size_t> protein_index_;
  std::unordered_map<std::string, std::size_t> term_index_;
  DenseMatrix y_;
};

// Propagates each annotation to every is_a/part_of ancestor. Rows follow
// `proteins` when given, otherwise the sorted distinct annotated proteins;
// columns are all DAG terms in DAG order. Annotations for proteins outside
// `proteins` are ignored.
inline LabelMatrix true_path_closure(const GoDag& dag, std::span<const ProteinTerm> annotations,
                                     std::span<const std::string> proteins = {}) {
  std::vector<std::string> unknown;
  for (const auto& a : annotations)
    if (!dag.contains(a.term)) unknown.push_back(a.term);
  if (!unknown.empty()) {
    std::sort(unknown.begin(), unknown.end());
    unknown.erase(std::unique(unknown.begin(), unknown.end()), unknown.end());
    std::string msg = "annotations reference terms missing from the ontology:";
    for (const auto& u : unknown) msg += " " + u;
    throw IngestError(msg);
  }
  std::vector<std::string> rows;
  if (proteins.empty()) {
    for (const auto& a : annotations) rows.push_back(a.protein);
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  } else {
    rows.assign(proteins.begin(), proteins.end());
  }
  LabelMatrix y(std::move(rows), dag.term_ids());
  for (const auto& a : annotations) {
    auto r = y.protein_row(a.protein);
    if (!r) continue;
    for (std::size_t anc : dag.ancestors(*dag.index_of(a.term))) y.set(*r, anc);
  }
  return y;
}

// Column ids must be DAG term ids; a matrix is closed when every set label's
// ancestors that are also columns are set.
inline bool is_closed(const LabelMatrix& y, const GoDag& dag) {
  for (std::size_t j = 0; j < y.num_terms(); ++j) {
    auto t = dag.index_of(y.terms()[j]);
    if (!t) throw IngestError("label column " + y.terms()[j] + " missing from the ontology");
    for (std::size_t i = 0; i < y.num_proteins(); ++i) {
      if (!y.get(i, j)) continue;
      for (std::size_t anc : dag.ancestors(*t)) {
        auto c = y.term_column(dag.term(anc).id);
        if (c && !y.get(i, *c)) return false;
      }
    }
  }
  return true;
}

inline std::vector<ProteinTerm> to_annotations(const LabelMatrix& y) {
  std::vector<ProteinTerm> out;
  for (std::size_t i = 0; i < y.num_proteins(); ++i)
    for (std::size_t j = 0; j < y.num_terms(); ++j)
      if (y.get(i, j)) out.push_back({y.proteins()[i], y.terms()[j]});
  return out;
}

// "protein<TAB>GO:1,GO:2" per row; proteins without labels keep an empty list.
inline std::string serialize_labels(const LabelMatrix& y) {
  std::string out;
  for (std::size_t i = 0; i < y.num_proteins(); ++i) {
    out += y.proteins()[i];
    out += '\t';
    bool first = true;
    for (std::size_t j = 0; j < y.num_terms(); ++j) {
      if (!y.get(i, j)) continue;
      if (!first) out += ',';
      out += y.terms()[j];
      first = false;
    }
    out += '\n';
  }
  return out;
}

// Loads a label TSV against `dag`. Labels are closed on load; a warning is
// emitted when the file itself was not closed.
inline LabelMatrix parse_labels(std::string_view text, const GoDag& dag) {
  std::vector<std::string> proteins;
  std::vector<ProteinTerm> annotations;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    const std::string protein(trim(line.substr(0, tab)));
    if (protein.empty()) throw FormatError(at_line(line_no, "empty protein id"));
    proteins.push_back(protein);
    if (tab == std::string_view::npos) continue;
    for (std::string_view term : split(trim(line.substr(tab + 1)), ',')) {
      term = trim(term);
      if (!term.empty()) annotations.push_back({protein, std::string(term)});
    }
  }
  LabelMatrix y = true_path_closure(dag, annotations, proteins);
  std::size_t given = annotations.size();
  std::size_t closed = to_annotations(y).size();
  if (closed != given) {
    log::warn("label file was not closed under the true path rule; added " +
              std::to_string(closed - given) + " ancestor labels");
  }
  return y;
}

// Information content per term column, in bits.
class ICWeights {
 public:
  ICWeights() = default;
  ICWeights(std::vector<std::string> terms, std::vector<double> values)
      : terms_(std::move(terms)), values_(std::move(values)) {
    if (terms_.size() != values_.size()) throw DimensionError("ICWeights: size mismatch");
    for (std::size_t j = 0; j < terms_.size(); ++j) index_.emplace(terms_[j], j);
  }

  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  std::optional<double> of(std::string_view term) const {
    auto it = index_.find(std::string(term));
    if (it == index_.end()) return std::nullopt;
    return values_[it->second];
  }

  // Values aligned with `columns`; throws if any term has no weight.
  std::vector<double> aligned(std::span<const std::string> columns) const {
    std::vector<double> out;
    out.reserve(columns.size());
    for (const auto& c : columns) {
      auto v = of(c);
      if (!v) throw IngestError("no information content for term " + c);
      out.push_back(*v);
    }
    return out;
  }

 private:
  std::vector<std::string> terms_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct ICOptions {
  // IC(t) = -log_base((count(t) + pseudocount) / (N + pseudocount))
  double pseudocount = 1.0;
  double log_base = 2.0;
};

inline ICWeights compute_ic(const LabelMatrix& train, const ICOptions& opts = {}) {
  if (train.num_proteins() == 0 || train.num_terms() == 0) {
    throw ConfigError("compute_ic: empty training label matrix");
  }
  const double n = static_cast<double>(train.num_proteins());
  std::vector<double> ic(train.num_terms());
  for (std::size_t j = 0; j < train.num_terms(); ++j) {
    const double c = static_cast<double>(train.count(j));
    const double p = (c + opts.pseudocount) / (n + opts.pseudocount);
    // Negating log(1) would give -0.0.
    ic[j] = p >= 1.0 ? 0.0 : -std::log(p) / std::log(opts.log_base);
  }
  return ICWeights(train.terms(), std::move(ic));
}

}  // namespace msngo
