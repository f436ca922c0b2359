#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "forte/corpus.hpp"
#include "forte/fusion.hpp"
#include "forte/rng.hpp"
#include "test_util.hpp"

using namespace forte;
using testutil::make_part;
using testutil::note;

namespace {

// Brute-force group-by-onset reducer, written independently of fuse().
ClassBasisMatrix oracle_fuse(const PartBasisMatrix& merged) {
  ClassBasisMatrix out;
  out.instrument_class = merged.instrument_class;
  out.columns = merged.columns;

  std::vector<Beat> unique_onsets;
  for (const auto& row : merged.rows)
    if (unique_onsets.empty() || !(unique_onsets.back() == row.onset))
      unique_onsets.push_back(row.onset);

  for (const auto& onset : unique_onsets) {
    std::vector<const BasisRow*> group;
    for (const auto& row : merged.rows)
      if (row.onset == onset) group.push_back(&row);

    std::vector<std::pair<int, double>> fused_row;
    for (std::size_t c = 0; c < merged.columns.size(); ++c) {
      std::vector<double> values;
      for (const BasisRow* row : group) {
        for (const auto& [col, v] : row->entries)
          if (col == static_cast<int>(c)) values.push_back(v);
      }
      if (values.empty()) continue;
      double v = 0.0;
      switch (merged.columns[c].policy) {
        case FusionPolicy::Max:
          v = *std::max_element(values.begin(), values.end());
          break;
        case FusionPolicy::Sum:
          for (const double x : values) v += x;
          break;
        case FusionPolicy::Mean:
          for (const double x : values) v += x;
          v /= static_cast<double>(group.size());
          break;
      }
      if (v != 0.0) fused_row.emplace_back(static_cast<int>(c), v);
    }
    out.onsets.push_back(onset);
    out.rows.push_back(std::move(fused_row));
  }
  return out;
}

bool same_class_matrix(const ClassBasisMatrix& a, const ClassBasisMatrix& b) {
  if (a.onsets.size() != b.onsets.size()) return false;
  for (std::size_t i = 0; i < a.onsets.size(); ++i) {
    if (!(a.onsets[i] == b.onsets[i])) return false;
    if (a.rows[i].size() != b.rows[i].size()) return false;
    for (std::size_t j = 0; j < a.rows[i].size(); ++j) {
      if (a.rows[i][j].first != b.rows[i][j].first) return false;
      if (a.rows[i][j].second != doctest::Approx(b.rows[i][j].second).epsilon(1e-12))
        return false;
    }
  }
  return true;
}

double binary_ish(FusionPolicy policy, Rng& rng) {
  if (policy == FusionPolicy::Max) return 1.0;           // step/impulse style
  if (policy == FusionPolicy::Sum) return 1.0 + std::floor(rng.uniform() * 3);
  return rng.uniform();                                  // mean style
}

PartBasisMatrix random_part_matrix(Rng& rng, const std::string& cls) {
  static const char* kLabels[] = {"pitch",          "duration",       "ioi",
                                  "vertical.total", "dyn.f.step",     "dyn.p.step",
                                  "impulse.accent", "metrical.4/4.beat0"};
  PartBasisMatrix m;
  m.instrument_class = cls;
  const int n_cols = 2 + static_cast<int>(rng.integer(5));
  std::set<int> chosen;
  while (static_cast<int>(chosen.size()) < n_cols)
    chosen.insert(static_cast<int>(rng.integer(std::size(kLabels))));
  for (const int c : chosen)
    m.columns.push_back(BasisDescriptor{cls, kLabels[c], default_policy(kLabels[c])});

  const int n_rows = 1 + static_cast<int>(rng.integer(8));
  Beat onset(0);
  for (int r = 0; r < n_rows; ++r) {
    if (r > 0 && rng.uniform() < 0.6) onset += Beat(1 + (int)rng.integer(3), 2);
    BasisRow row;
    row.onset = onset;
    row.pitch = 40 + static_cast<int>(rng.integer(50));
    for (std::size_t c = 0; c < m.columns.size(); ++c)
      if (rng.uniform() < 0.7)
        row.entries.emplace_back(static_cast<int>(c),
                                 binary_ish(m.columns[c].policy, rng));
    m.rows.push_back(std::move(row));
  }
  return m;
}

}  // namespace

TEST_CASE("merging a single part is the identity") {
  const Part part = make_part("oboe", {note(Beat(0), Beat(1), 60), note(Beat(1), Beat(1), 62)});
  const PartBasisMatrix matrix = extract_part_bases(part);
  const PartBasisMatrix merged = merge({matrix});
  CHECK(merged.columns.size() == matrix.columns.size());
  REQUIRE(merged.rows.size() == matrix.rows.size());
  for (std::size_t i = 0; i < merged.rows.size(); ++i)
    CHECK(merged.rows[i].entries == matrix.rows[i].entries);
}

TEST_CASE("two-desk oboe fixture: 4 merged rows fuse to 3 onsets") {
  const Part oboe1 = make_part("oboe", {note(Beat(0), Beat(1), 72), note(Beat(1), Beat(1, 2), 74),
                                        note(Beat(3, 2), Beat(1, 2), 76)});
  const Part oboe2 = make_part("oboe", {note(Beat(1), Beat(1), 69)});
  const PartBasisMatrix merged =
      merge({extract_part_bases(oboe1), extract_part_bases(oboe2)});
  REQUIRE(merged.rows.size() == 4);
  // simultaneous notes consecutively listed, stable by part order
  CHECK(merged.rows[1].onset == Beat(1));
  CHECK(merged.rows[2].onset == Beat(1));
  CHECK(merged.rows[1].pitch == 74);  // oboe 1 first
  CHECK(merged.rows[2].pitch == 69);

  const ClassBasisMatrix fused = fuse(merged);
  REQUIRE(fused.onsets.size() == 3);
  CHECK(fused.onsets[0] == Beat(0));
  CHECK(fused.onsets[1] == Beat(1));
  CHECK(fused.onsets[2] == Beat(3, 2));
}

TEST_CASE("pitch fusion under mean averages the simultaneous notes") {
  const Part a = make_part("violin", {note(Beat(1), Beat(1), 70)});
  const Part b = make_part("violin", {note(Beat(1), Beat(1), 62)});
  const PartBasisMatrix merged = merge({extract_part_bases(a), extract_part_bases(b)});
  const ClassBasisMatrix fused = fuse(merged);
  const int col = [&] {
    for (std::size_t c = 0; c < fused.columns.size(); ++c)
      if (fused.columns[c].label == "pitch") return static_cast<int>(c);
    return -1;
  }();
  REQUIRE(col >= 0);
  double value = 0.0;
  for (const auto& [c, v] : fused.rows[0])
    if (c == col) value = v;
  CHECK(value == doctest::Approx(66.0 / 127.0).epsilon(1e-12));
  CHECK(value == doctest::Approx(0.519685).epsilon(1e-6));
}

TEST_CASE("step values fuse idempotently under max") {
  PartBasisMatrix merged;
  merged.instrument_class = "horn";
  merged.columns.push_back(BasisDescriptor{"horn", "dyn.f.step", FusionPolicy::Max});
  for (int i = 0; i < 2; ++i) {
    BasisRow row;
    row.onset = Beat(3);
    row.pitch = 60;
    row.entries.emplace_back(0, 1.0);
    merged.rows.push_back(row);
  }
  const ClassBasisMatrix fused = fuse(merged);
  REQUIRE(fused.rows.size() == 1);
  CHECK(fused.rows[0] == std::vector<std::pair<int, double>>{{0, 1.0}});
}

TEST_CASE("merge refuses mixed instrument classes") {
  const Part a = make_part("violin", {note(Beat(0), Beat(1), 70)});
  const Part b = make_part("viola", {note(Beat(0), Beat(1), 62)});
  CHECK_THROWS_AS((void)merge({extract_part_bases(a), extract_part_bases(b)}),
                  ContractViolation);
}

TEST_CASE("merged column count is the union of unique labels") {
  const Part plain = make_part("violin", {note(Beat(0), Beat(1), 70)});
  const Part marked = make_part("violin", {note(Beat(2), Beat(1), 66)},
                                {Marking::constant(Beat(2), DynamicLevel::f)});
  const PartBasisMatrix ma = extract_part_bases(plain);
  const PartBasisMatrix mb = extract_part_bases(marked);
  std::set<std::string> expected;
  for (const auto& d : ma.columns) expected.insert(d.label);
  for (const auto& d : mb.columns) expected.insert(d.label);
  const PartBasisMatrix merged = merge({ma, mb});
  CHECK(merged.columns.size() == expected.size());
}

TEST_CASE("vertical neighbors are recounted class-wide after merging") {
  const Part a = make_part("violin", {note(Beat(0), Beat(1), 70)});
  const Part b = make_part("violin", {note(Beat(0), Beat(1), 62)});
  PartBasisMatrix merged = merge({extract_part_bases(a), extract_part_bases(b)});
  recount_vertical_neighbors(merged);
  const int lower = merged.column_index("vertical.lower");
  const int total = merged.column_index("vertical.total");
  CHECK(merged.rows[0].value(lower) == 1.0);   // 70 sees 62 below
  CHECK(merged.rows[1].value(lower) == 0.0);
  CHECK(merged.rows[0].value(total) == 1.0);
  CHECK(merged.rows[1].value(total) == 1.0);
}

TEST_CASE("fuse is insensitive to row order within an onset group") {
  Rng rng(5150);
  for (int trial = 0; trial < 50; ++trial) {
    PartBasisMatrix merged = random_part_matrix(rng, "violin");
    ClassBasisMatrix base = fuse(merged);
    // reverse each onset group
    for (std::size_t i = 0; i < merged.rows.size();) {
      std::size_t j = i;
      while (j < merged.rows.size() && merged.rows[j].onset == merged.rows[i].onset) ++j;
      std::reverse(merged.rows.begin() + i, merged.rows.begin() + j);
      i = j;
    }
    CHECK(same_class_matrix(base, fuse(merged)));
  }
}

TEST_CASE("aggregate_piece unions onsets and zero-fills silent classes") {
  const Part violin = make_part("violin", {note(Beat(0), Beat(1), 70), note(Beat(2), Beat(1), 71)});
  const Part flute = make_part("flute", {note(Beat(1), Beat(1), 84), note(Beat(2), Beat(1), 86)});
  const ClassBasisMatrix cv = fuse(merge({extract_part_bases(violin)}));
  const ClassBasisMatrix cf = fuse(merge({extract_part_bases(flute)}));
  const PieceMatrix piece = aggregate_piece({cv, cf}, "demo");
  REQUIRE(piece.row_count() == 3);
  CHECK(piece.column_count() == cv.columns.size() + cf.columns.size());
  CHECK(piece.onsets == std::vector<Beat>{Beat(0), Beat(1), Beat(2)});
  // row at onset 1 holds zeros in the violin block
  for (const auto& [col, v] : piece.rows[1]) {
    CHECK(col >= static_cast<int>(cv.columns.size()));
    CHECK(v != 0.0);
  }
}

TEST_CASE("duplicate descriptors across classes are a contract violation") {
  const Part a = make_part("violin", {note(Beat(0), Beat(1), 70)});
  const ClassBasisMatrix cls = fuse(merge({extract_part_bases(a)}));
  CHECK_THROWS_AS((void)aggregate_piece({cls, cls}, "dup"), ContractViolation);
}

TEST_CASE("dataset assembly: shared and disjoint label arithmetic") {
  const Part a = make_part("violin", {note(Beat(0), Beat(1), 70)});
  const Part b = make_part("violin", {note(Beat(0), Beat(1), 72)});
  const Part c = make_part("flute", {note(Beat(0), Beat(1), 84)});

  PieceMatrix p1 = aggregate_piece({fuse(merge({extract_part_bases(a)}))}, "p1");
  PieceMatrix p2 = aggregate_piece({fuse(merge({extract_part_bases(b)}))}, "p2");
  PieceMatrix p3 = aggregate_piece({fuse(merge({extract_part_bases(c)}))}, "p3");

  {
    const DatasetMatrix ds = assemble_dataset({p1, p2});
    CHECK(ds.columns.size() == p1.column_count());  // same labels
    CHECK(ds.total_rows() == p1.row_count() + p2.row_count());
    CHECK(ds.singular_bases.empty());
  }
  {
    const DatasetMatrix ds = assemble_dataset({p1, p3});
    CHECK(ds.columns.size() == p1.column_count() + p3.column_count());
    // every column with support lives in exactly one piece here; the
    // all-zero vertical columns of these single-note pieces are active
    // in none and therefore not singular
    std::size_t supported = 0;
    for (const auto& block : ds.pieces) {
      std::set<int> cols;
      for (const auto& row : block.rows)
        for (const auto& [col, v] : row) cols.insert(col);
      supported += cols.size();
    }
    CHECK(ds.singular_bases.size() == supported);
  }
  {
    const DatasetMatrix ds = assemble_dataset({p1});
    CHECK(ds.columns.size() == p1.column_count());
    CHECK(ds.total_rows() == p1.row_count());
  }
}

TEST_CASE("merge then fuse equals the one-shot group-by oracle on random fixtures") {
  Rng rng(20250102);
  for (int trial = 0; trial < 200; ++trial) {
    const int n_parts = 1 + static_cast<int>(rng.integer(3));
    std::vector<PartBasisMatrix> parts;
    for (int p = 0; p < n_parts; ++p) parts.push_back(random_part_matrix(rng, "violin"));
    const PartBasisMatrix merged = merge(parts);
    CHECK(same_class_matrix(fuse(merged), oracle_fuse(merged)));
  }
}

TEST_CASE("K_P bookkeeping matches a recount on a synthetic 3-class fixture") {
  const Part violin = make_part("violin", {note(Beat(0), Beat(1), 70), note(Beat(1), Beat(1), 74)});
  const Part flute = make_part("flute", {note(Beat(1, 2), Beat(1), 84)});
  const Part horn = make_part("horn", {note(Beat(1), Beat(2), 55)},
                              {Marking::constant(Beat(0), DynamicLevel::p)});
  std::vector<ClassBasisMatrix> classes;
  for (const Part* part : {&violin, &flute, &horn})
    classes.push_back(fuse(merge({extract_part_bases(*part)})));
  const PieceMatrix piece = aggregate_piece(classes, "three");

  std::size_t k_recount = 0;
  for (const auto& cls : classes) k_recount += cls.columns.size();
  CHECK(piece.column_count() == k_recount);

  std::set<Beat> onsets;
  for (const auto& cls : classes) onsets.insert(cls.onsets.begin(), cls.onsets.end());
  CHECK(piece.row_count() == onsets.size());
}

TEST_CASE("policy overrides rewrite descriptor policies by group") {
  const Part part = make_part("violin", {note(Beat(0), Beat(1), 70)});
  PartBasisMatrix matrix = extract_part_bases(part);
  apply_policy_overrides(matrix.columns, {{"pitch", FusionPolicy::Max}});
  for (const auto& d : matrix.columns)
    if (d.label == "pitch" || d.label == "pitch^2") CHECK(d.policy == FusionPolicy::Max);
}

TEST_CASE("beat strings and policy overrides parse strictly") {
  CHECK(parse_beat_string("0.1") == Beat(1, 10));
  CHECK(parse_beat_string("1/10") == Beat(1, 10));
  CHECK(parse_beat_string("3") == Beat(3));
  CHECK(parse_beat_string("2.25") == Beat(9, 4));
  CHECK_THROWS_AS((void)parse_beat_string("x"), ConfigError);

  const PolicyOverrides overrides = parse_policy_overrides("vertical=max,duration=sum");
  CHECK(overrides.at("vertical") == FusionPolicy::Max);
  CHECK(overrides.at("duration") == FusionPolicy::Sum);
  CHECK_THROWS_AS((void)parse_policy_overrides("bogus=max"), ConfigError);
  CHECK_THROWS_AS((void)parse_policy_overrides("pitch=zzz"), ConfigError);
}

TEST_CASE("piece matrix serialization round-trips bit-identically") {
  const Part violin = make_part("violin", {note(Beat(0), Beat(1), 70), note(Beat(1, 2), Beat(1), 62)});
  const Part flute = make_part("flute", {note(Beat(1, 2), Beat(3, 2), 84)});
  Score score;
  score.id = "roundtrip";
  score.parts = {violin, flute};
  const PieceMatrix piece = build_piece_matrix(score);

  const std::string triplet = piece_matrix_to_triplet(piece);
  const std::string sidecar = piece_matrix_sidecar_json(piece);
  const PieceMatrix back = piece_matrix_from_files(triplet, sidecar);

  CHECK(back.piece_id == piece.piece_id);
  CHECK(piece_matrix_to_triplet(back) == triplet);
  CHECK(piece_matrix_sidecar_json(back) == sidecar);

  CHECK_THROWS_AS((void)piece_matrix_from_files("0 nonsense 1\n", sidecar), FormatError);
  CHECK_THROWS_AS((void)piece_matrix_from_files("999 0 1.0\n", sidecar), FormatError);
  CHECK_THROWS_AS((void)piece_matrix_from_files(triplet, "{not json"), FormatError);
}
