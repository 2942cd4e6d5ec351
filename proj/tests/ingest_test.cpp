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

#include <gtest/gtest.h>

#include "msngo/features.hpp"
#include "msngo/ingest.hpp"

namespace msngo {
namespace {

TEST(ParseFasta, SingleRecord) {
  const auto recs = parse_fasta(">p1\nACDE");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0], (SequenceRecord{"p1", "ACDE"}));
}

TEST(ParseFasta, WrappedLinesAndLowercase) {
  const auto recs = parse_fasta(">p1 some description\nacd\nEFG\nhik\n>p2\nMM\n");
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].sequence, "ACDEFGHIK");
  EXPECT_EQ(recs[1].id, "p2");
}

TEST(ParseFasta, EmptySequenceIsAnError) {
  try {
    parse_fasta(">p1\n>p2\nAA");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("empty sequence p1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
}

TEST(ParseFasta, SequenceBeforeHeaderIsAnError) {
  EXPECT_THROW(parse_fasta("ACDE\n>p1\nA"), FormatError);
}

TEST(ParseFasta, RoundTrip) {
  const std::vector<SequenceRecord> recs{{"a", std::string(130, 'K')}, {"b", "MV"}};
  EXPECT_EQ(parse_fasta(serialize_fasta(recs)), recs);
}

TEST(ParseCoords, SimpleFormat) {
  const auto rec = parse_coords("1 A 0 0 0\n2 C 0 0 5\n");
  ASSERT_EQ(rec.residues.size(), 2u);
  EXPECT_EQ(rec.residues[1].letter, 'C');
  const auto& a = rec.residues[0].ca;
  const auto& b = rec.residues[1].ca;
  EXPECT_DOUBLE_EQ(std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]), 5.0);
}

TEST(ParseCoords, PdbCaRecords) {
  const std::string pdb =
      "HEADER    TEST\n"
      "ATOM      1  N   MET A   1      11.104   6.134  -6.504  1.00  0.00           N\n"
      "ATOM      2  CA  MET A   1      11.639   6.071  -5.147  1.00  0.00           C\n"
      "ATOM      3  CA  GLY A   2      12.500  -1.250   3.000  1.00  0.00           C\n"
      "ATOM      4  CA  ALA B   1       0.000   0.000   0.000  1.00  0.00           C\n"
      "ENDMDL\n"
      "ATOM      5  CA  ALA A   3       9.000   9.000   9.000  1.00  0.00           C\n";
  const auto rec = parse_coords(pdb, "x");
  ASSERT_EQ(rec.residues.size(), 2u);
  EXPECT_EQ(rec.residues[0].letter, 'M');
  EXPECT_EQ(rec.residues[0].index, 1);
  EXPECT_DOUBLE_EQ(rec.residues[0].ca[0], 11.639);
  EXPECT_DOUBLE_EQ(rec.residues[0].ca[2], -5.147);
  EXPECT_EQ(rec.residues[1].letter, 'G');
  EXPECT_DOUBLE_EQ(rec.residues[1].ca[1], -1.25);
}

TEST(ParseCoords, DuplicateIndexIsAnError) {
  try {
    parse_coords("1 A 0 0 0\n1 C 0 0 5\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ParseCoords, NonMonotoneAndGarbageAreErrors) {
  EXPECT_THROW(parse_coords("2 A 0 0 0\n1 C 0 0 5\n"), FormatError);
  EXPECT_THROW(parse_coords("1 A 0 zero 0\n"), FormatError);
  EXPECT_THROW(parse_coords("1 A 0 0 nan\n"), FormatError);
}

TEST(ParseCoords, RoundTrip) {
  CoordinateRecord rec{"p", {{3, 'A', {0.1, -2.5, 1e-3}}, {7, 'W', {1.0 / 3.0, 2, 3}}}};
  auto again = parse_coords(serialize_coords(rec), "p");
  EXPECT_EQ(again, rec);
}

TEST(ParsePpi, SingleEdge) {
  const auto ppi = parse_ppi_tsv("p1 p2 700");
  ASSERT_EQ(ppi.edges.size(), 1u);
  EXPECT_EQ(ppi.edges[0], (WeightedEdge{"p1", "p2", 700}));
}

TEST(ParsePpi, DuplicatesMergeByMax) {
  const auto ppi = parse_ppi_tsv("protein1 protein2 combined_score\np1 p2 700\np2 p1 900\n");
  ASSERT_EQ(ppi.edges.size(), 1u);
  EXPECT_EQ(ppi.edges[0].weight, 900);
}

TEST(ParsePpi, SelfEdgeDroppedWithWarning) {
  log::WarningCapture warnings;
  EXPECT_TRUE(parse_ppi_tsv("p1 p1 500").edges.empty());
  EXPECT_TRUE(warnings.contains("self edge"));
}

TEST(ParsePpi, MalformedLineCarriesLineNumber) {
  try {
    parse_ppi_tsv("p1 p2 700\np3 p4\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(parse_ppi_tsv("p1 p2 1700"), FormatError);
}

TEST(ParsePpi, ScoreThreshold) {
  EXPECT_EQ(parse_ppi_tsv("a b 100\nc d 800\n", 400).edges.size(), 1u);
}

TEST(ParsePpi, RoundTrip) {
  const auto ppi = parse_ppi_tsv("b a 150\nc a 999\n");
  EXPECT_EQ(parse_ppi_tsv(serialize_ppi(ppi)).edges, ppi.edges);
}

TEST(ParseAnnotations, OneTuple) {
  const auto anns = parse_annotations("p1\tGO:0003674\t2020-05-01\n");
  ASSERT_EQ(anns.size(), 1u);
  EXPECT_EQ(anns[0].term, "GO:0003674");
  EXPECT_EQ(anns[0].date, (Date{2020, 5, 1}));
}

TEST(ParseAnnotations, InvalidDateOrIdIsAnError) {
  EXPECT_THROW(parse_annotations("p1\tGO:0003674\t2021-13-01\n"), FormatError);
  EXPECT_THROW(parse_annotations("p1\tGO:0003674\t2021-02-30\n"), FormatError);
  EXPECT_THROW(parse_annotations("p1\tGO:003674\t2021-01-01\n"), FormatError);
}

TEST(ParseAnnotations, DuplicatesRemovedAndEvidenceIgnored) {
  const auto anns = parse_annotations(
      "p1\tGO:0003674\t2020-05-01\tEXP\np1\tGO:0003674\t2020-05-01\tIDA\np1\tGO:0003674\t2020-05-01\n");
  EXPECT_EQ(anns.size(), 1u);
}

TEST(ParseAnnotations, RoundTrip) {
  const auto anns = parse_annotations("p2\tGO:0000001\t2019-01-02\np1\tGO:0000002\t2022-12-31\n");
  EXPECT_EQ(parse_annotations(serialize_annotations(anns)), anns);
}

TEST(TemporalSplit, EarliestDateDecides) {
  const auto anns = parse_annotations(
      "old\tGO:0000001\t2019-06-01\n"
      "old\tGO:0000002\t2022-09-01\n"
      "edge\tGO:0000001\t2021-01-01\n"
      "mid\tGO:0000001\t2022-07-31\n"
      "new\tGO:0000001\t2022-08-01\n"
      "last\tGO:0000001\t2023-08-31\n"
      "late\tGO:0000001\t2024-01-01\n");
  const auto s = temporal_split(anns);
  EXPECT_EQ(s.train, std::vector<std::string>{"old"});
  EXPECT_EQ(s.valid, (std::vector<std::string>{"edge", "mid"}));
  EXPECT_EQ(s.test, (std::vector<std::string>{"last", "new"}));
}

TEST(TemporalSplit, UnannotatedProteinsAreExcludedAndCutsValidated) {
  EXPECT_TRUE(temporal_split({}).train.empty());
  EXPECT_THROW(temporal_split({}, SplitDates{{2022, 1, 1}, {2021, 1, 1}, {2023, 1, 1}}), ConfigError);
}

TEST(FeatureTable, TextTwoRows) {
  const auto t = load_feature_table("2 4\np1 1 2 3 4\np2 0 0 0 0.5\n");
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(t.dim(), 4u);
  EXPECT_EQ(t.row("p2")[3], 0.5);
}

TEST(FeatureTable, RaggedRowIsAnError) {
  try {
    load_feature_table("2 4\np1 1 2 3 4\np2 1 2 3\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(load_feature_table("1 0\np1\n"), FormatError);
}

TEST(FeatureTable, Width1280Accepted) {
  DenseMatrix m(3, 1280);
  for (std::size_t i = 0; i < m.size(); ++i) m.values()[i] = std::sin(static_cast<double>(i));
  const FeatureTable t({"a", "b", "c"}, m);
  EXPECT_EQ(load_feature_table(serialize_feature_binary(t)).dim(), 1280u);
}

TEST(FeatureTable, TextAndBinaryRoundTrip) {
  DenseMatrix m = DenseMatrix::from_rows({{1.0 / 3.0, -2e-300, 5}, {0, 1e10, -0.125}});
  const FeatureTable t({"x", "y"}, m);
  EXPECT_EQ(load_feature_table(serialize_feature_text(t)), t);
  EXPECT_EQ(load_feature_table(serialize_feature_binary(t)), t);
  const std::string bin = serialize_feature_binary(t);
  EXPECT_EQ(bin.substr(0, 4), "HSE1");
  EXPECT_THROW(load_feature_table(bin.substr(0, bin.size() - 3)), FormatError);
}

TEST(FeatureTable, AlignmentChecksIds) {
  const FeatureTable t({"a", "b"}, DenseMatrix::from_rows({{1}, {2}}));
  const std::vector<std::string> order{"b", "a"};
  EXPECT_EQ(t.aligned(order), DenseMatrix::from_rows({{2}, {1}}));
  const std::vector<std::string> bad{"a", "zz"};
  EXPECT_THROW(t.aligned(bad), IngestError);
}

TEST(ToyFeaturizer, NormalizedAndDeterministic) {
  const std::vector<SequenceRecord> seqs{{"a", "MKVLAAGIVG"}, {"b", "MK"}};
  const auto t = toy_sequence_features(seqs, 16);
  double norm = 0;
  for (double v : t.row("a")) norm += v * v;
  EXPECT_NEAR(norm, 1.0, 1e-12);
  for (double v : t.row("b")) EXPECT_EQ(v, 0.0);  // shorter than k
  EXPECT_EQ(toy_sequence_features(seqs, 16), t);
}

TEST(HomologyNetwork, IdenticalAndDisjointSequences) {
  const std::vector<SequenceRecord> seqs{{"a", "MKVLAAG"}, {"b", "MKVLAAG"}, {"c", "AAAA"}, {"d", "CCCC"}};
  const auto net = build_homology_network(seqs, 2, 0.5);
  ASSERT_EQ(net.edges.size(), 1u);
  EXPECT_EQ(net.edges[0].a, "a");
  EXPECT_EQ(net.edges[0].b, "b");
  EXPECT_NEAR(net.edges[0].weight, 1.0, 1e-12);
  EXPECT_EQ(cosine_similarity(kmer_profile("AAAA", 2), kmer_profile("CCCC", 2)), 0.0);
}

TEST(HomologyNetwork, HandEnumeratedProfiles) {
  // k = 2. ACACAC: AC x3, CA x2. ACACGT: AC x2, CA x1, CG x1, GT x1.
  // dot = 3*2 + 2*1 = 8; norms sqrt(13) and sqrt(7).
  const double expected = 8.0 / std::sqrt(13.0 * 7.0);
  EXPECT_NEAR(cosine_similarity(kmer_profile("ACACAC", 2), kmer_profile("ACACGT", 2)), expected, 1e-15);
  const std::vector<SequenceRecord> seqs{{"x", "ACACAC"}, {"y", "ACACGT"}};
  const auto net = build_homology_network(seqs, 2, 0.8);
  ASSERT_EQ(net.edges.size(), 1u);
  EXPECT_NEAR(net.edges[0].weight, expected, 1e-15);
  EXPECT_TRUE(build_homology_network(seqs, 2, 0.85).edges.empty());
}

TEST(HomologyNetwork, ShortSequenceIsIsolatedWithWarning) {
  log::WarningCapture warnings;
  const std::vector<SequenceRecord> seqs{{"a", "MK"}, {"b", "MKV"}};
  EXPECT_TRUE(build_homology_network(seqs, 3, 0.1).edges.empty());
  EXPECT_TRUE(warnings.contains("shorter than k"));
  EXPECT_THROW(build_homology_network(seqs, 1, 0.5), ConfigError);
  EXPECT_THROW(build_homology_network(seqs, 3, 1.0), ConfigError);
}

TEST(HomologyNetwork, SymmetricSelfFreeOnRandomSequences) {
  Rng rng(3);
  std::vector<SequenceRecord> seqs;
  const std::string alphabet = "ACDEFG";
  for (int i = 0; i < 15; ++i) {
    std::string s;
    for (int k = 0; k < 20; ++k) s += alphabet[rng() % alphabet.size()];
    seqs.push_back({"s" + std::to_string(i), s});
  }
  const auto net = build_homology_network(seqs, 2, 0.3);
  for (const auto& e : net.edges) {
    EXPECT_LT(e.a, e.b);
    const double back = cosine_similarity(kmer_profile(seqs[std::stoi(e.b.substr(1))].sequence, 2),
                                          kmer_profile(seqs[std::stoi(e.a.substr(1))].sequence, 2));
    EXPECT_NEAR(back, e.weight, 1e-12);
  }
  EXPECT_EQ(parse_similarity_tsv(serialize_similarity(net)).edges, net.edges);
}

}  // namespace
}  // namespace msngo
