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
#include <array>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "msngo/error.hpp"
#include "msngo/log.hpp"
#include "msngo/ontology.hpp"
#include "msngo/text.hpp"

namespace msngo {

// ---------------------------------------------------------------------------
// Sequences

struct SequenceRecord {
  std::string id;
  std::string sequence;
  friend bool operator==(const SequenceRecord&, const SequenceRecord&) = default;
};

inline bool is_sequence_letter(char c) {
  static constexpr std::string_view kAlphabet = "ACDEFGHIKLMNPQRSTVWYBZUOX";
  return kAlphabet.find(c) != std::string_view::npos;
}

inline std::vector<SequenceRecord> parse_fasta(std::string_view text) {
  std::vector<SequenceRecord> records;
  std::vector<std::size_t> header_lines;
  std::size_t line_no = 0;
  auto close_record = [&] {
    if (!records.empty() && records.back().sequence.empty()) {
      throw FormatError(at_line(header_lines.back(), "empty sequence " + records.back().id));
    }
  };
  for (std::string_view raw : split_lines(text)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '>') {
      close_record();
      const auto fields = split_whitespace(line.substr(1));
      if (fields.empty()) throw FormatError(at_line(line_no, "header without id"));
      records.push_back({std::string(fields[0]), {}});
      header_lines.push_back(line_no);
      continue;
    }
    if (records.empty()) throw FormatError(at_line(line_no, "sequence before any header"));
    for (char c : line) {
      if (c == ' ' || c == '\t') continue;
      const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      if (!std::isalpha(static_cast<unsigned char>(u)) && u != '*') {
        throw FormatError(at_line(line_no, std::string("invalid sequence character '") + c + "'"));
      }
      if (u == '*') continue;
      records.back().sequence.push_back(u);
    }
  }
  close_record();
  return records;
}

inline std::string serialize_fasta(std::span<const SequenceRecord> records, std::size_t width = 60) {
  std::string out;
  for (const auto& r : records) {
    out += '>' + r.id + '\n';
    for (std::size_t i = 0; i < r.sequence.size(); i += width) {
      out += r.sequence.substr(i, width);
      out += '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cα coordinates

struct Residue {
  long index = 0;   // residue number from the source file
  char letter = 'X';
  std::array<double, 3> ca{};
  friend bool operator==(const Residue&, const Residue&) = default;
};

struct CoordinateRecord {
  std::string id;
  std::vector<Residue> residues;
  friend bool operator==(const CoordinateRecord&, const CoordinateRecord&) = default;
};

inline char three_letter_to_one(std::string_view name) {
  static const std::map<std::string_view, char> kCodes = {
      {"ALA", 'A'}, {"CYS", 'C'}, {"ASP", 'D'}, {"GLU", 'E'}, {"PHE", 'F'}, {"GLY", 'G'},
      {"HIS", 'H'}, {"ILE", 'I'}, {"LYS", 'K'}, {"LEU", 'L'}, {"MET", 'M'}, {"ASN", 'N'},
      {"PRO", 'P'}, {"GLN", 'Q'}, {"ARG", 'R'}, {"SER", 'S'}, {"THR", 'T'}, {"VAL", 'V'},
      {"TRP", 'W'}, {"TYR", 'Y'}, {"ASX", 'B'}, {"GLX", 'Z'}, {"SEC", 'U'}, {"PYL", 'O'},
      {"MSE", 'M'}};
  auto it = kCodes.find(name);
  return it == kCodes.end() ? 'X' : it->second;
}

namespace detail {

inline std::string_view pdb_field(std::string_view line, std::size_t first_col, std::size_t last_col) {
  // 1-based inclusive columns per the PDB fixed-width layout.
  if (line.size() < first_col) return {};
  return trim(line.substr(first_col - 1, last_col - first_col + 1));
}

inline void require_increasing(const CoordinateRecord& rec, long index, std::size_t line_no) {
  if (!rec.residues.empty() && index <= rec.residues.back().index) {
    if (index == rec.residues.back().index) {
      throw FormatError(at_line(line_no, "duplicate residue index " + std::to_string(index)));
    }
    throw FormatError(at_line(line_no, "residue indices must increase (" + std::to_string(index) +
                                           " after " + std::to_string(rec.residues.back().index) + ")"));
  }
}

inline CoordinateRecord parse_pdb_ca(std::string_view text, std::string id) {
  CoordinateRecord rec{std::move(id), {}};
  std::optional<char> chain;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    if (line.starts_with("ENDMDL")) break;  // first model only
    if (!line.starts_with("ATOM") && !line.starts_with("HETATM")) continue;
    if (pdb_field(line, 13, 16) != "CA") continue;
    if (line.size() < 54) throw FormatError(at_line(line_no, "truncated ATOM record"));
    const char alt = line[16];
    if (alt != ' ' && alt != 'A') continue;
    const char chain_id = line[21];
    if (!chain) chain = chain_id;
    if (chain_id != *chain) continue;  // first chain only
    const auto seq = parse_int<long>(pdb_field(line, 23, 26));
    const auto x = parse_double(pdb_field(line, 31, 38));
    const auto y = parse_double(pdb_field(line, 39, 46));
    const auto z = parse_double(pdb_field(line, 47, 54));
    if (!seq) throw FormatError(at_line(line_no, "unparseable residue number"));
    if (!x || !y || !z) throw FormatError(at_line(line_no, "unparseable coordinates"));
    if (line.starts_with("HETATM") && three_letter_to_one(pdb_field(line, 18, 20)) == 'X') continue;
    require_increasing(rec, *seq, line_no);
    rec.residues.push_back({*seq, three_letter_to_one(pdb_field(line, 18, 20)), {*x, *y, *z}});
  }
  return rec;
}

}  // namespace detail

// Accepts either the simple "index aa x y z" layout or PDB ATOM records
// (CA atoms, first model, first chain).
inline CoordinateRecord parse_coords(std::string_view text, std::string id = {}) {
  for (std::string_view line : split_lines(text)) {
    if (line.starts_with("ATOM") || line.starts_with("HETATM") || line.starts_with("HEADER") ||
        line.starts_with("MODEL")) {
      return detail::parse_pdb_ca(text, std::move(id));
    }
  }
  CoordinateRecord rec{std::move(id), {}};
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto f = split_whitespace(line);
    if (f.size() != 5) throw FormatError(at_line(line_no, "expected 'index aa x y z'"));
    const auto idx = parse_int<long>(f[0]);
    if (!idx) throw FormatError(at_line(line_no, "unparseable residue index"));
    if (f[1].size() != 1) throw FormatError(at_line(line_no, "amino acid must be one letter"));
    const auto x = parse_double(f[2]);
    const auto y = parse_double(f[3]);
    const auto z = parse_double(f[4]);
    if (!x || !y || !z) throw FormatError(at_line(line_no, "unparseable coordinates"));
    detail::require_increasing(rec, *idx, line_no);
    const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(f[1][0])));
    rec.residues.push_back({*idx, letter, {*x, *y, *z}});
  }
  return rec;
}

inline std::string serialize_coords(const CoordinateRecord& rec) {
  std::string out;
  for (const auto& r : rec.residues) {
    out += std::to_string(r.index) + ' ' + r.letter + ' ' + format_double(r.ca[0]) + ' ' +
           format_double(r.ca[1]) + ' ' + format_double(r.ca[2]) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Network edges

struct WeightedEdge {
  std::string a;  // a < b after normalization
  std::string b;
  double weight = 0.0;
  friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

// STRING-style scores in [0, 1000].
struct PpiEdgeList {
  std::vector<WeightedEdge> edges;
};

// Homology similarities in [0, 1].
struct SimilarityEdgeList {
  std::vector<WeightedEdge> edges;
};

namespace detail {

// Orders endpoints, drops self edges, merges duplicates by max weight; sorted.
inline std::vector<WeightedEdge> normalize_edges(std::vector<WeightedEdge> edges) {
  std::map<std::pair<std::string, std::string>, double> merged;
  for (auto& e : edges) {
    if (e.a == e.b) {
      log::warn("dropping self edge " + e.a);
      continue;
    }
    if (e.b < e.a) std::swap(e.a, e.b);
    auto [it, inserted] = merged.emplace(std::make_pair(e.a, e.b), e.weight);
    if (!inserted) it->second = std::max(it->second, e.weight);
  }
  std::vector<WeightedEdge> out;
  out.reserve(merged.size());
  for (const auto& [k, w] : merged) out.push_back({k.first, k.second, w});
  return out;
}

inline std::vector<WeightedEdge> parse_edge_lines(std::string_view text, double lo, double hi,
                                                  const char* what) {
  std::vector<WeightedEdge> edges;
  std::size_t line_no = 0;
  bool first_content = true;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto f = split_whitespace(line);
    const bool header = first_content && f.size() == 3 && !parse_double(f[2]);
    first_content = false;
    if (header) continue;
    if (f.size() != 3) throw FormatError(at_line(line_no, std::string("expected 'idA idB ") + what + "'"));
    const auto w = parse_double(f[2]);
    if (!w) throw FormatError(at_line(line_no, std::string("unparseable ") + what));
    if (*w < lo || *w > hi) {
      throw FormatError(at_line(line_no, std::string(what) + " " + std::string(f[2]) + " outside [" +
                                             format_double(lo) + ", " + format_double(hi) + "]"));
    }
    edges.push_back({std::string(f[0]), std::string(f[1]), *w});
  }
  return edges;
}

inline std::string serialize_edges(std::span<const WeightedEdge> edges) {
  std::string out;
  for (const auto& e : edges) out += e.a + '\t' + e.b + '\t' + format_double(e.weight) + '\n';
  return out;
}

}  // namespace detail

// Edges scoring below `min_score` are discarded.
inline PpiEdgeList parse_ppi_tsv(std::string_view text, double min_score = 0.0) {
  auto edges = detail::parse_edge_lines(text, 0.0, 1000.0, "score");
  std::erase_if(edges, [&](const WeightedEdge& e) { return e.weight < min_score; });
  return {detail::normalize_edges(std::move(edges))};
}

inline std::string serialize_ppi(const PpiEdgeList& ppi) { return detail::serialize_edges(ppi.edges); }

inline SimilarityEdgeList parse_similarity_tsv(std::string_view text) {
  return {detail::normalize_edges(detail::parse_edge_lines(text, 0.0, 1.0, "similarity"))};
}

inline std::string serialize_similarity(const SimilarityEdgeList& s) {
  return detail::serialize_edges(s.edges);
}

// ---------------------------------------------------------------------------
// Annotations and temporal split

struct Date {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;

  static std::optional<Date> parse(std::string_view s) {
    s = trim(s);
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    const auto y = parse_int<int>(s.substr(0, 4));
    const auto m = parse_int<unsigned>(s.substr(5, 2));
    const auto d = parse_int<unsigned>(s.substr(8, 2));
    if (!y || !m || !d) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year(*y), std::chrono::month(*m),
                                          std::chrono::day(*d)};
    if (!ymd.ok()) return std::nullopt;
    return Date{*y, *m, *d};
  }

  std::string to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
    return buf;
  }

  friend auto operator<=>(const Date&, const Date&) = default;
};

struct Annotation {
  std::string protein;
  std::string term;
  Date date;
  friend auto operator<=>(const Annotation&, const Annotation&) = default;
};

inline bool is_go_id(std::string_view s) {
  if (s.size() != 10 || !s.starts_with("GO:")) return false;
  return std::all_of(s.begin() + 3, s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// "protein<TAB>GO:id<TAB>YYYY-MM-DD[<TAB>evidence]". Evidence is accepted and
// ignored. Exact duplicate rows are removed; output is sorted.
inline std::vector<Annotation> parse_annotations(std::string_view text) {
  std::vector<Annotation> out;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    auto f = split(line, '\t');
    if (f.size() < 3 || f.size() > 4) {
      throw FormatError(at_line(line_no, "expected 'protein<TAB>GO id<TAB>date[<TAB>evidence]'"));
    }
    const std::string_view protein = trim(f[0]);
    const std::string_view term = trim(f[1]);
    if (protein.empty()) throw FormatError(at_line(line_no, "empty protein id"));
    if (!is_go_id(term)) throw FormatError(at_line(line_no, "malformed GO id '" + std::string(term) + "'"));
    const auto date = Date::parse(f[2]);
    if (!date) throw FormatError(at_line(line_no, "malformed date '" + std::string(trim(f[2])) + "'"));
    out.push_back({std::string(protein), std::string(term), *date});
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::string serialize_annotations(std::span<const Annotation> anns) {
  std::string out;
  for (const auto& a : anns) out += a.protein + '\t' + a.term + '\t' + a.date.to_string() + '\n';
  return out;
}

inline std::vector<ProteinTerm> protein_terms(std::span<const Annotation> anns) {
  std::vector<ProteinTerm> out;
  out.reserve(anns.size());
  for (const auto& a : anns) out.push_back({a.protein, a.term});
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Annotations whose term lies in `ns`; terms unknown to `dag` abort.
inline std::vector<Annotation> annotations_in_branch(std::span<const Annotation> anns, const GoDag& dag,
                                                     Namespace ns) {
  std::vector<std::string> unknown;
  std::vector<Annotation> out;
  for (const auto& a : anns) {
    auto idx = dag.index_of(a.term);
    if (!idx) {
      unknown.push_back(a.term);
      continue;
    }
    if (dag.term(*idx).ns == ns) out.push_back(a);
  }
  if (!unknown.empty()) {
    std::sort(unknown.begin(), unknown.end());
    unknown.erase(std::unique(unknown.begin(), unknown.end()), unknown.end());
    std::string msg = "annotations reference terms missing from the ontology:";
    for (const auto& u : unknown) msg += " " + u;
    throw IngestError(msg);
  }
  return out;
}

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> valid;
  std::vector<std::string> test;
};

struct SplitDates {
  Date t1{2021, 1, 1};   // train: earliest < t1
  Date t2{2022, 8, 1};   // valid: [t1, t2)
  Date t3{2023, 8, 31};  // test:  [t2, t3]
};

// Each protein is placed by its earliest annotation date; proteins first
// annotated after t3 are excluded. Lists are sorted.
inline DatasetSplit temporal_split(std::span<const Annotation> anns, const SplitDates& cuts = {}) {
  if (!(cuts.t1 < cuts.t2 && cuts.t2 < cuts.t3)) {
    throw ConfigError("temporal split requires t1 < t2 < t3");
  }
  std::map<std::string, Date> earliest;
  for (const auto& a : anns) {
    auto [it, inserted] = earliest.emplace(a.protein, a.date);
    if (!inserted && a.date < it->second) it->second = a.date;
  }
  DatasetSplit s;
  for (const auto& [protein, d] : earliest) {
    if (d < cuts.t1) {
      s.train.push_back(protein);
    } else if (d < cuts.t2) {
      s.valid.push_back(protein);
    } else if (d <= cuts.t3) {
      s.test.push_back(protein);
    }
  }
  return s;
}

}  // namespace msngo
