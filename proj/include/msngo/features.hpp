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

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "msngo/error.hpp"
#include "msngo/ingest.hpp"
#include "msngo/log.hpp"
#include "msngo/random.hpp"
#include "msngo/tensor.hpp"
#include "msngo/text.hpp"

namespace msngo {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written with native little-endian layout");

// Protein id -> fixed-width feature vector. Row order is the load order.
class FeatureTable {
 public:
  FeatureTable() = default;
  FeatureTable(std::vector<std::string> ids, DenseMatrix values)
      : ids_(std::move(ids)), values_(std::move(values)) {
    if (ids_.size() != values_.rows()) throw DimensionError("FeatureTable: id count != row count");
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (!index_.emplace(ids_[i], i).second) throw FormatError("FeatureTable: duplicate id " + ids_[i]);
    }
    if (!values_.all_finite()) throw FormatError("FeatureTable: non-finite value");
  }

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return values_.cols(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const DenseMatrix& values() const { return values_; }

  std::optional<std::size_t> row_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::span<const double> row(std::string_view id) const {
    auto r = row_of(id);
    if (!r) throw IngestError("no features for protein " + std::string(id));
    return values_.row(*r);
  }

  // Rows in `order`; every id must be present.
  DenseMatrix aligned(std::span<const std::string> order) const {
    DenseMatrix out(order.size(), dim());
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < order.size(); ++i) {
      auto r = row_of(order[i]);
      if (!r) {
        missing.push_back(order[i]);
        continue;
      }
      std::copy(values_.row(*r).begin(), values_.row(*r).end(), out.row(i).begin());
    }
    if (!missing.empty()) {
      std::string msg = "feature table is missing " + std::to_string(missing.size()) + " proteins:";
      for (std::size_t k = 0; k < std::min<std::size_t>(missing.size(), 10); ++k) msg += " " + missing[k];
      throw IngestError(msg);
    }
    return out;
  }

  friend bool operator==(const FeatureTable& a, const FeatureTable& b) {
    return a.ids_ == b.ids_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::string> ids_;
  DenseMatrix values_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr char kFeatureMagic[4] = {'H', 'S', 'E', '1'};

namespace detail {

inline FeatureTable parse_feature_text(std::string_view text) {
  const auto lines = split_lines(text);
  std::size_t line_no = 0;
  std::optional<std::size_t> count, dim;
  std::vector<std::string> ids;
  std::vector<double> values;
  for (std::string_view line : lines) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto f = split_whitespace(line);
    if (!dim) {
      if (f.size() != 2) throw FormatError(at_line(line_no, "expected header 'count dim'"));
      count = parse_int<std::size_t>(f[0]);
      dim = parse_int<std::size_t>(f[1]);
      if (!count || !dim) throw FormatError(at_line(line_no, "unparseable header"));
      if (*dim == 0) throw FormatError(at_line(line_no, "feature dimension must be positive"));
      continue;
    }
    if (f.size() != *dim + 1) {
      throw FormatError(at_line(line_no, "expected id and " + std::to_string(*dim) + " values, got " +
                                             std::to_string(f.size() - 1)));
    }
    ids.emplace_back(f[0]);
    for (std::size_t k = 1; k < f.size(); ++k) {
      auto v = parse_double(f[k]);
      if (!v) throw FormatError(at_line(line_no, "unparseable value '" + std::string(f[k]) + "'"));
      values.push_back(*v);
    }
  }
  if (!dim) throw FormatError("feature table has no header");
  if (ids.size() != *count) {
    throw FormatError("feature table header announces " + std::to_string(*count) + " rows, found " +
                      std::to_string(ids.size()));
  }
  const std::size_t n = ids.size();
  return FeatureTable(std::move(ids), DenseMatrix(n, *dim, std::move(values)));
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T read() {
    if (pos_ + sizeof(T) > bytes_.size()) throw FormatError("binary payload truncated");
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string read_string(std::size_t len) {
    if (pos_ + len > bytes_.size()) throw FormatError("binary payload truncated");
    std::string s(bytes_.substr(pos_, len));
    pos_ += len;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

class ByteWriter {
 public:
  template <typename T>
  void write(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void write_bytes(std::string_view s) { out_.append(s); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

inline FeatureTable parse_feature_binary(std::string_view bytes) {
  ByteReader r(bytes.substr(4));
  const auto count = r.read<std::uint32_t>();
  const auto dim = r.read<std::uint32_t>();
  if (dim == 0) throw FormatError("feature dimension must be positive");
  std::vector<std::string> ids;
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(count) * dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.read<std::uint32_t>();
    ids.push_back(r.read_string(len));
    for (std::uint32_t k = 0; k < dim; ++k) values.push_back(r.read<double>());
  }
  if (!r.done()) throw FormatError("trailing bytes after feature table");
  return FeatureTable(std::move(ids), DenseMatrix(count, dim, std::move(values)));
}

}  // namespace detail

// Text ("count dim" header, then "id v1 ... vd" rows) or HSE1 binary, chosen
// by the leading magic bytes.
inline FeatureTable load_feature_table(std::string_view bytes) {
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kFeatureMagic, 4) == 0) {
    return detail::parse_feature_binary(bytes);
  }
  return detail::parse_feature_text(bytes);
}

inline std::string serialize_feature_text(const FeatureTable& t) {
  std::string out = std::to_string(t.size()) + ' ' + std::to_string(t.dim()) + '\n';
  for (std::size_t i = 0; i < t.size(); ++i) {
    out += t.ids()[i];
    for (double v : t.values().row(i)) out += ' ' + format_double(v);
    out += '\n';
  }
  return out;
}

// HSE1: magic, u32 count, u32 dim, then per row u32 id length, id bytes and
// dim little-endian f64 values.
inline std::string serialize_feature_binary(const FeatureTable& t) {
  detail::ByteWriter w;
  w.write_bytes(std::string_view(kFeatureMagic, 4));
  w.write(static_cast<std::uint32_t>(t.size()));
  w.write(static_cast<std::uint32_t>(t.dim()));
  for (std::size_t i = 0; i < t.size(); ++i) {
    w.write(static_cast<std::uint32_t>(t.ids()[i].size()));
    w.write_bytes(t.ids()[i]);
    for (double v : t.values().row(i)) w.write(v);
  }
  return w.take();
}

// ---------------------------------------------------------------------------
// Sequence stand-ins

// Stand-in for language-model embeddings: 3-mer counts hashed into `dim`
// buckets, L2-normalized. Not a substitute for ESM-2 quality features.
inline FeatureTable toy_sequence_features(std::span<const SequenceRecord> seqs, std::size_t dim,
                                          std::size_t k = 3) {
  if (dim == 0) throw ConfigError("feature dimension must be positive");
  if (k == 0) throw ConfigError("k-mer length must be positive");
  std::vector<std::string> ids;
  DenseMatrix values(seqs.size(), dim);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    ids.push_back(seqs[i].id);
    const std::string& s = seqs[i].sequence;
    auto row = values.row(i);
    for (std::size_t p = 0; p + k <= s.size(); ++p)
      row[stable_hash(std::string_view(s).substr(p, k)) % dim] += 1.0;
    double norm = 0.0;
    for (double v : row) norm += v * v;
    if (norm > 0) {
      norm = std::sqrt(norm);
      for (double& v : row) v /= norm;
    }
  }
  return FeatureTable(std::move(ids), std::move(values));
}

using KmerProfile = std::map<std::string, double>;

inline KmerProfile kmer_profile(std::string_view s, std::size_t k) {
  KmerProfile p;
  for (std::size_t i = 0; i + k <= s.size(); ++i) p[std::string(s.substr(i, k))] += 1.0;
  return p;
}

inline double cosine_similarity(const KmerProfile& a, const KmerProfile& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [kmer, c] : a) {
    na += c * c;
    auto it = b.find(kmer);
    if (it != b.end()) dot += c * it->second;
  }
  for (const auto& [kmer, c] : b) nb += c * c;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Stand-in for an alignment-based homology search: cosine similarity of k-mer
// count profiles over all pairs; edges with similarity >= threshold are kept.
inline SimilarityEdgeList build_homology_network(std::span<const SequenceRecord> seqs, std::size_t k = 3,
                                                 double threshold = 0.5) {
  if (k < 2) throw ConfigError("homology k-mer length must be >= 2");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("homology threshold must be in (0, 1)");
  std::vector<KmerProfile> profiles;
  profiles.reserve(seqs.size());
  for (const auto& s : seqs) {
    if (s.sequence.size() < k) log::warn("sequence " + s.id + " is shorter than k; left isolated");
    profiles.push_back(kmer_profile(s.sequence, k));
  }
  std::vector<WeightedEdge> edges;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (profiles[i].empty()) continue;
    for (std::size_t j = i + 1; j < seqs.size(); ++j) {
      if (profiles[j].empty() || seqs[i].id == seqs[j].id) continue;
      const double sim = std::min(1.0, cosine_similarity(profiles[i], profiles[j]));
      if (sim >= threshold) edges.push_back({seqs[i].id, seqs[j].id, sim});
    }
  }
  return {detail::normalize_edges(std::move(edges))};
}

}  // namespace msngo
