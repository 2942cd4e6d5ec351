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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msngo/error.hpp"
#include "msngo/ingest.hpp"
#include "msngo/tensor.hpp"
#include "msngo/text.hpp"

namespace msngo {

inline constexpr double kContactThreshold = 10.0;  // Å

// Undirected residue graph. Neighbor lists are sorted and exclude i itself.
struct ContactGraph {
  std::string letters;
  std::vector<std::vector<std::size_t>> neighbors;
  bool self_loops_added = false;

  std::size_t size() const { return neighbors.size(); }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& nb : neighbors) n += nb.size();
    return n / 2;
  }

  bool has_edge(std::size_t i, std::size_t j) const {
    return std::binary_search(neighbors[i].begin(), neighbors[i].end(), j);
  }

  friend bool operator==(const ContactGraph&, const ContactGraph&) = default;
};

inline ContactGraph graph_from_edges(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges,
                                     std::string letters = {}) {
  ContactGraph g;
  g.letters = letters.empty() ? std::string(n, 'X') : std::move(letters);
  if (g.letters.size() != n) throw DimensionError("graph_from_edges: letters length != node count");
  g.neighbors.assign(n, {});
  for (const auto& [a, b] : edges) {
    if (a >= n || b >= n) throw DimensionError("graph_from_edges: node out of range");
    if (a == b) continue;
    g.neighbors[a].push_back(b);
    g.neighbors[b].push_back(a);
  }
  for (auto& nb : g.neighbors) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return g;
}

// Edge (i, j), i != j, iff the Cα distance is <= threshold. No self-loops.
inline ContactGraph build_contact_map(const CoordinateRecord& coords, double threshold = kContactThreshold) {
  if (!(threshold > 0.0)) throw ConfigError("contact threshold must be positive");
  if (coords.residues.empty()) throw IngestError("structure " + coords.id + " has no residues");
  for (const auto& r : coords.residues) {
    for (double c : r.ca) {
      if (!std::isfinite(c)) throw NumericError("structure " + coords.id + ": non-finite coordinate");
    }
  }
  const std::size_t n = coords.residues.size();
  ContactGraph g;
  g.neighbors.assign(n, {});
  g.letters.reserve(n);
  const double t2 = threshold * threshold;
  for (std::size_t i = 0; i < n; ++i) {
    g.letters.push_back(coords.residues[i].letter);
    const auto& a = coords.residues[i].ca;
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& b = coords.residues[j].ca;
      const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
      if (dx * dx + dy * dy + dz * dz <= t2) {
        g.neighbors[i].push_back(j);
        g.neighbors[j].push_back(i);
      }
    }
  }
  for (auto& nb : g.neighbors) std::sort(nb.begin(), nb.end());
  return g;
}

// D̂^(-1/2) (A + I) D̂^(-1/2).
inline SparseMatrix normalized_adjacency(const ContactGraph& g) {
  const std::size_t n = g.size();
  std::vector<double> deg(n);
  for (std::size_t i = 0; i < n; ++i) deg[i] = static_cast<double>(g.neighbors[i].size() + 1);
  std::vector<Triplet> t;
  t.reserve(n + 2 * g.edge_count());
  for (std::size_t i = 0; i < n; ++i) {
    t.push_back({i, i, 1.0 / deg[i]});
    for (std::size_t j : g.neighbors[i]) t.push_back({i, j, 1.0 / std::sqrt(deg[i] * deg[j])});
  }
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

// Subgraph induced by `idx` (sorted ascending); node k of the result is idx[k].
inline ContactGraph induced_subgraph(const ContactGraph& g, std::span<const std::size_t> idx) {
  std::vector<std::size_t> position(g.size(), static_cast<std::size_t>(-1));
  for (std::size_t k = 0; k < idx.size(); ++k) position[idx[k]] = k;
  ContactGraph sub;
  sub.neighbors.assign(idx.size(), {});
  for (std::size_t k = 0; k < idx.size(); ++k) {
    sub.letters.push_back(g.letters.empty() ? 'X' : g.letters[idx[k]]);
    for (std::size_t j : g.neighbors[idx[k]])
      if (position[j] != static_cast<std::size_t>(-1)) sub.neighbors[k].push_back(position[j]);
    std::sort(sub.neighbors[k].begin(), sub.neighbors[k].end());
  }
  return sub;
}

// "# nodes <n> letters <seq>" then one "i j" line per edge with i < j.
inline std::string serialize_edge_list(const ContactGraph& g) {
  std::string out = "# nodes " + std::to_string(g.size()) + " letters " + g.letters + "\n";
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j : g.neighbors[i])
      if (i < j) out += std::to_string(i) + ' ' + std::to_string(j) + '\n';
  return out;
}

inline ContactGraph parse_edge_list(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw FormatError("empty edge list");
  const auto header = split_whitespace(lines[0]);
  if (header.size() != 5 || header[0] != "#" || header[1] != "nodes" || header[3] != "letters") {
    throw FormatError(at_line(1, "expected '# nodes <n> letters <seq>'"));
  }
  const auto n = parse_int<std::size_t>(header[2]);
  if (!n || *n == 0 || header[4].size() != *n) throw FormatError(at_line(1, "bad node count"));
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto f = split_whitespace(lines[k]);
    if (f.empty()) continue;
    const auto a = f.size() == 2 ? parse_int<std::size_t>(f[0]) : std::nullopt;
    const auto b = f.size() == 2 ? parse_int<std::size_t>(f[1]) : std::nullopt;
    if (!a || !b || *a >= *n || *b >= *n) throw FormatError(at_line(k + 1, "expected 'i j' node pair"));
    edges.emplace_back(*a, *b);
  }
  return graph_from_edges(*n, edges, std::string(header[4]));
}

}  // namespace msngo
