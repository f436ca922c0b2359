#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "forte/basis.hpp"
#include "forte/rng.hpp"
#include "test_util.hpp"

using namespace forte;
using testutil::make_part;
using testutil::note;

namespace {

// Independent per-note, per-basis evaluation: straight-line formulas, no
// shared helpers with the implementation.
std::map<std::string, std::map<std::size_t, double>> oracle_extract(const Part& part) {
  std::map<std::string, std::map<std::size_t, double>> out;
  const std::size_t n = part.notes.size();
  auto put = [&out](const std::string& label, std::size_t row, double v) {
    if (v != 0.0) out[label][row] = v;
    else out.try_emplace(label);  // column exists even when all-zero
  };

  // Constant markings, last-wins per onset, sorted.
  std::vector<std::pair<double, std::string>> constants;
  for (const auto& m : part.markings) {
    if (m.type != Marking::Type::ConstantDynamic) continue;
    const double t = m.onset.to_double();
    bool replaced = false;
    for (auto& [onset, level] : constants)
      if (onset == t) {
        level = to_string(m.level);
        replaced = true;
      }
    if (!replaced) constants.emplace_back(t, to_string(m.level));
  }
  std::sort(constants.begin(), constants.end());

  for (std::size_t i = 0; i < n; ++i) {
    const NoteEvent& x = part.notes[i];
    const int sp = x.pitch + part.transposition;
    const double q = sp / 127.0;
    put("pitch", i, q);
    put("pitch^2", i, q * q);
    put("pitch^3", i, q * q * q);
    put("duration", i, x.duration.to_double());

    // next distinct onset
    double ioi = x.duration.to_double();
    for (std::size_t j = 0; j < n; ++j) {
      if (part.notes[j].onset > x.onset) {
        ioi = (part.notes[j].onset - x.onset).to_double();
        break;
      }
    }
    put("ioi", i, ioi);

    int lower = 0, higher = 0, total = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !(part.notes[j].onset == x.onset)) continue;
      const int other = part.notes[j].pitch + part.transposition;
      if (other < sp) ++lower;
      if (other > sp) ++higher;
      ++total;
    }
    put("vertical.lower", i, lower);
    put("vertical.higher", i, higher);
    put("vertical.total", i, total);

    // metrical: last signature with anchor <= onset
    const TimeSignature* sig = &part.time_signatures.front();
    for (const auto& s : part.time_signatures)
      if (s.anchor <= x.onset) sig = &s;
    const double bar = 4.0 * sig->numerator / sig->denominator;
    const double unit = 4.0 / sig->denominator;
    double offset = std::fmod((x.onset - sig->anchor).to_double(), bar);
    if (offset < 0) offset += bar;
    const double beats = offset / unit;
    const std::string sig_name =
        std::to_string(sig->numerator) + "/" + std::to_string(sig->denominator);
    if (std::abs(beats - std::round(beats)) < 1e-9) {
      out["metrical." + sig_name + ".beat" + std::to_string((int)std::lround(beats))][i] = 1.0;
    } else {
      out["metrical." + sig_name + ".offbeat"][i] = 1.0;
    }

    if (x.accent) out["impulse.accent"][i] = 1.0;
    if (x.staccato) out["impulse.staccato"][i] = 1.0;
    if (x.fermata) out["impulse.fermata"][i] = 1.0;
    for (const auto& r : part.repeat_marks)
      if (r == x.onset) out["impulse.repeat-sign"][i] = 1.0;

    const double onset = x.onset.to_double();

    // constant markings: step + anticipations
    for (std::size_t ci = 0; ci < constants.size(); ++ci) {
      const auto& [t, level] = constants[ci];
      const double next =
          ci + 1 < constants.size() ? constants[ci + 1].first : 1e300;
      const double prev = ci > 0 ? constants[ci - 1].first : -1e300;
      if (onset >= t && onset < next) {
        double& cell = out["dyn." + level + ".step"][i];
        cell = std::max(cell, 1.0);
      }
      for (const double length : {1.0, 8.0}) {
        if (onset <= t && onset >= prev) {
          const double v = (onset - (t - length)) / length;
          if (v > 0.0) {
            const std::string label =
                "dyn." + level + (length == 1.0 ? ".ant-short" : ".ant-long");
            double& cell = out[label][i];
            cell = std::max(cell, v);
          }
        }
      }
    }

    // wedges: ramp then hold until the next constant
    for (const auto& m : part.markings) {
      if (m.type != Marking::Type::Wedge) continue;
      const double s = m.onset.to_double();
      const double e = m.end->to_double();
      double next = 1e300;
      for (const auto& [t, level] : constants)
        if (t > s) {
          next = t;
          break;
        }
      if (onset < s || onset >= next) continue;
      const double v = std::min((onset - s) / (e - s), 1.0);
      if (v > 0.0) {
        const std::string label = std::string("dyn.") + to_string(m.wedge) + ".ramp";
        double& cell = out[label][i];
        cell = std::max(cell, v);
      }
    }

    // impulse markings
    for (const auto& m : part.markings) {
      if (m.type != Marking::Type::Impulse) continue;
      if (m.onset == x.onset) out[std::string("impulse.") + to_string(m.impulse)][i] = 1.0;
    }
  }

  // columns never activated by any marking do not exist; drop empty
  // non-core labels the oracle may have created defensively
  for (auto it = out.begin(); it != out.end();) {
    const std::string& label = it->first;
    const bool core = label == "pitch" || label == "pitch^2" || label == "pitch^3" ||
                      label == "duration" || label == "ioi" ||
                      label.rfind("vertical.", 0) == 0;
    if (!core && it->second.empty()) it = out.erase(it);
    else ++it;
  }
  return out;
}

Part random_part(Rng& rng) {
  const int n_notes = 1 + static_cast<int>(rng.integer(20));
  std::vector<NoteEvent> notes;
  Beat onset(0);
  for (int i = 0; i < n_notes; ++i) {
    if (i > 0 && rng.uniform() < 0.75) onset += Beat(1 + (int)rng.integer(4), 2);
    const Beat dur(1 + (int)rng.integer(4), 2);
    notes.push_back(note(onset, dur, 40 + (int)rng.integer(50), rng.uniform() < 0.1,
                         rng.uniform() < 0.1, rng.uniform() < 0.05));
  }
  std::stable_sort(notes.begin(), notes.end(),
                   [](const NoteEvent& a, const NoteEvent& b) { return a.onset < b.onset; });

  std::vector<Marking> markings;
  const int n_markings = static_cast<int>(rng.integer(4));
  static const DynamicLevel levels[] = {DynamicLevel::p, DynamicLevel::mf, DynamicLevel::f,
                                        DynamicLevel::ff};
  const double span = notes.back().onset.to_double() + 2.0;
  for (int i = 0; i < n_markings; ++i) {
    const double roll = rng.uniform();
    const Beat at((int)rng.integer((int)(2 * span) + 1), 2);
    if (roll < 0.5) {
      markings.push_back(Marking::constant(at, levels[rng.integer(4)]));
    } else if (roll < 0.8) {
      const Beat end = at + Beat(1 + (int)rng.integer(8), 1);
      markings.push_back(Marking::make_wedge(
          at, end, rng.uniform() < 0.5 ? WedgeKind::crescendo : WedgeKind::diminuendo));
    } else {
      static const ImpulseKind kinds[] = {ImpulseKind::sfz, ImpulseKind::fp,
                                          ImpulseKind::marcato};
      markings.push_back(Marking::make_impulse(at, kinds[rng.integer(3)]));
    }
  }
  std::stable_sort(markings.begin(), markings.end(),
                   [](const Marking& a, const Marking& b) { return a.onset < b.onset; });

  Part part = make_part("violin", notes, markings, rng.uniform() < 0.5 ? 4 : 3, 4);
  part.transposition = rng.uniform() < 0.2 ? -2 : 0;
  if (rng.uniform() < 0.3) part.repeat_marks.push_back(notes.front().onset);
  return part;
}

}  // namespace

TEST_CASE("pitch polynomial boundary and reference values") {
  CHECK(pitch_poly(0) == std::array<double, 3>{0.0, 0.0, 0.0});
  CHECK(pitch_poly(127) == std::array<double, 3>{1.0, 1.0, 1.0});
  const auto poly = pitch_poly(60);
  CHECK(poly[0] == doctest::Approx(0.472441).epsilon(1e-6));
  CHECK(poly[1] == doctest::Approx(0.223200).epsilon(1e-5));
  CHECK(poly[2] == doctest::Approx(0.105449).epsilon(1e-5));
  // derived oracle: direct computation of (60/127)^k
  CHECK(poly[1] == doctest::Approx(std::pow(60.0 / 127.0, 2)).epsilon(1e-12));
  CHECK(poly[2] == doctest::Approx(std::pow(60.0 / 127.0, 3)).epsilon(1e-12));
}

TEST_CASE("vertical neighbor counting") {
  {
    const std::vector<int> solo{60};
    const VerticalCounts c = vertical_neighbors(solo, 0);
    CHECK(c.lower == 0);
    CHECK(c.higher == 0);
    CHECK(c.total == 0);
  }
  {
    const std::vector<int> chord{60, 64, 67};
    const VerticalCounts c = vertical_neighbors(chord, 1);
    CHECK(c.lower == 1);
    CHECK(c.higher == 1);
    CHECK(c.total == 2);
  }
  {
    const std::vector<int> unison{60, 60};
    const VerticalCounts c = vertical_neighbors(unison, 0);
    CHECK(c.lower == 0);
    CHECK(c.higher == 0);
    CHECK(c.total == 1);
  }
}

TEST_CASE("metrical positions") {
  const TimeSignature common{Beat(0), 4, 4};
  CHECK(metrical_position(Beat(4), common).beat == 0);
  CHECK(metrical_position(Beat(9, 2), common).beat == -1);  // onset 4.5
  const TimeSignature waltz{Beat(0), 3, 4};
  CHECK(metrical_position(Beat(5), waltz).beat == 2);
  const TimeSignature six_eight{Beat(0), 6, 8};
  CHECK(metrical_position(Beat(1, 2), six_eight).beat == 1);  // second eighth
  CHECK(metrical_position(Beat(7, 2), six_eight).beat == 1);  // next bar
}

TEST_CASE("duration and inter-onset interval") {
  const Part part = make_part("flute", {note(Beat(0), Beat(1), 60), note(Beat(1), Beat(1), 62)});
  CHECK(duration_and_ioi(part, 0) == std::pair<Beat, Beat>{Beat(1), Beat(1)});

  const Part overlap =
      make_part("flute", {note(Beat(0), Beat(2), 60), note(Beat(1), Beat(1), 62)});
  CHECK(duration_and_ioi(overlap, 0) == std::pair<Beat, Beat>{Beat(2), Beat(1)});

  const Part final_note = make_part("flute", {note(Beat(0), Beat(2), 60)});
  CHECK(duration_and_ioi(final_note, 0) == std::pair<Beat, Beat>{Beat(2), Beat(2)});
}

TEST_CASE("articulation flags map to their impulse labels") {
  CHECK(articulation_impulses(note(Beat(0), Beat(1), 60)).empty());
  CHECK(articulation_impulses(note(Beat(0), Beat(1), 60, true)) ==
        std::vector<std::string>{"impulse.accent"});
  const auto all = articulation_impulses(note(Beat(2), Beat(1), 60, false, true, true));
  CHECK(all == std::vector<std::string>{"impulse.staccato", "impulse.fermata"});
}

TEST_CASE("single note part has exactly the unconditional catalogue") {
  const Part part = make_part("oboe", {note(Beat(0), Beat(1), 69)});
  const PartBasisMatrix matrix = extract_part_bases(part);
  std::set<std::string> labels;
  for (const auto& d : matrix.columns) labels.insert(d.label);
  CHECK(labels == std::set<std::string>{"pitch", "pitch^2", "pitch^3", "duration", "ioi",
                                        "vertical.lower", "vertical.higher", "vertical.total",
                                        "metrical.4/4.beat0"});
  REQUIRE(matrix.rows.size() == 1);
}

TEST_CASE("p, crescendo, f and a marcato produce their dynamics columns") {
  std::vector<NoteEvent> notes;
  for (int i = 0; i < 12; ++i) notes.push_back(note(Beat(i), Beat(1), 60 + (i % 7)));
  const Part part = make_part(
      "violin", notes,
      {Marking::constant(Beat(0), DynamicLevel::p),
       Marking::make_wedge(Beat(2), Beat(5), WedgeKind::crescendo),
       Marking::constant(Beat(6), DynamicLevel::f),
       Marking::make_impulse(Beat(9), ImpulseKind::marcato)});
  const PartBasisMatrix matrix = extract_part_bases(part);
  for (const char* label :
       {"dyn.p.step", "dyn.crescendo.ramp", "dyn.f.step", "impulse.marcato"})
    CHECK(matrix.column_index(label) >= 0);
  // the marcato impulse hits exactly its own onset row
  const int col = matrix.column_index("impulse.marcato");
  for (std::size_t i = 0; i < matrix.rows.size(); ++i)
    CHECK(matrix.rows[i].value(col) == (matrix.rows[i].onset == Beat(9) ? 1.0 : 0.0));
}

TEST_CASE("lone f: step is 0 before onset 8 and 1 from it on") {
  std::vector<NoteEvent> notes;
  for (int i = 0; i < 16; ++i) notes.push_back(note(Beat(i), Beat(1), 60));
  const Part part = make_part("horn", notes, {Marking::constant(Beat(8), DynamicLevel::f)});
  const auto columns = dynamics_bases(part);
  const std::vector<double>* step = nullptr;
  for (const auto& [d, values] : columns)
    if (d.label == "dyn.f.step") step = &values;
  REQUIRE(step != nullptr);
  for (int i = 0; i < 16; ++i) CHECK((*step)[i] == (i >= 8 ? 1.0 : 0.0));
}

TEST_CASE("crescendo ramp interpolates and hands over to the step") {
  std::vector<NoteEvent> notes;
  for (int i = 0; i < 10; ++i) notes.push_back(note(Beat(i), Beat(1), 60));
  const Part part = make_part(
      "horn", notes,
      {Marking::make_wedge(Beat(0), Beat(4), WedgeKind::crescendo),
       Marking::constant(Beat(8), DynamicLevel::f)});
  const auto columns = dynamics_bases(part);
  const std::vector<double>* ramp = nullptr;
  const std::vector<double>* step = nullptr;
  for (const auto& [d, values] : columns) {
    if (d.label == "dyn.crescendo.ramp") ramp = &values;
    if (d.label == "dyn.f.step") step = &values;
  }
  REQUIRE(ramp != nullptr);
  REQUIRE(step != nullptr);
  CHECK((*ramp)[2] == doctest::Approx(0.5));
  CHECK((*ramp)[6] == doctest::Approx(1.0));  // held after the wedge ends
  CHECK((*ramp)[8] == 0.0);                   // the constant takes over
  CHECK((*step)[8] == 1.0);
  CHECK((*step)[7] == 0.0);
}

TEST_CASE("no dynamics markings, no dynamics columns") {
  const Part part = make_part("viola", {note(Beat(0), Beat(1), 60)});
  CHECK(dynamics_bases(part).empty());
}

TEST_CASE("overlapping constants at one onset: last wins, with a warning") {
  std::vector<NoteEvent> notes;
  for (int i = 0; i < 6; ++i) notes.push_back(note(Beat(i), Beat(1), 60));
  const Part part = make_part("viola", notes,
                              {Marking::constant(Beat(2), DynamicLevel::p),
                               Marking::constant(Beat(2), DynamicLevel::ff)});
  std::vector<std::string> warnings;
  const auto columns = dynamics_bases(part, &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("overlapping") != std::string::npos);
  bool saw_ff = false;
  for (const auto& [d, values] : columns) {
    CHECK(d.label != "dyn.p.step");  // discarded duplicate
    if (d.label == "dyn.ff.step") {
      saw_ff = true;
      CHECK(values[2] == 1.0);
    }
  }
  CHECK(saw_ff);
}

TEST_CASE("label grammar round-trips every generated column") {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const Part part = random_part(rng);
    const PartBasisMatrix matrix = extract_part_bases(part);
    std::set<std::string> seen;
    for (const auto& d : matrix.columns) {
      const BasisKind kind = parse_basis_label(d.label);
      CHECK(basis_label(kind) == d.label);
      CHECK(seen.insert(d.label).second);  // unique within the part
      CHECK_NOTHROW((void)basis_group(d.label));
    }
  }
  CHECK_THROWS_AS((void)parse_basis_label("dyn.zzz.step"), ConfigError);
  CHECK_THROWS_AS((void)parse_basis_label("nonsense"), ConfigError);
}

TEST_CASE("basis values stay in range") {
  Rng rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    const Part part = random_part(rng);
    const PartBasisMatrix matrix = extract_part_bases(part);
    for (const auto& row : matrix.rows) {
      for (const auto& [col, v] : row.entries) {
        CHECK(std::isfinite(v));
        const std::string group = basis_group(matrix.columns[col].label);
        if (group == "impulse" || group == "metrical" || group == "dyn.step")
          CHECK((v == 0.0 || v == 1.0));
        if (group == "dyn.ramp" || group == "dyn.ant") {
          CHECK(v >= 0.0);
          CHECK(v <= 1.0);
        }
      }
    }
  }
}

TEST_CASE("random parts match the naive double-loop oracle entry for entry") {
  Rng rng(20250101);
  for (int trial = 0; trial < 120; ++trial) {
    const Part part = random_part(rng);
    const PartBasisMatrix matrix = extract_part_bases(part);
    const auto expected = oracle_extract(part);

    std::set<std::string> actual_labels;
    for (const auto& d : matrix.columns) actual_labels.insert(d.label);
    std::set<std::string> expected_labels;
    for (const auto& [label, cells] : expected) expected_labels.insert(label);
    REQUIRE(actual_labels == expected_labels);

    for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
      for (const auto& [label, cells] : expected) {
        const int col = matrix.column_index(label);
        REQUIRE(col >= 0);
        const double want = cells.count(i) ? cells.at(i) : 0.0;
        const double got = matrix.rows[i].value(col);
        CHECK(got == doctest::Approx(want).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("step columns form a single rectangular pulse per level") {
  std::vector<NoteEvent> notes;
  for (int i = 0; i < 20; ++i) notes.push_back(note(Beat(i), Beat(1), 55 + i % 5));
  const Part part = make_part("cello", notes,
                              {Marking::constant(Beat(4), DynamicLevel::p),
                               Marking::constant(Beat(12), DynamicLevel::f)});
  const PartBasisMatrix matrix = extract_part_bases(part);
  for (const char* label : {"dyn.p.step", "dyn.f.step"}) {
    const int col = matrix.column_index(label);
    REQUIRE(col >= 0);
    int transitions = 0;
    double prev = 0.0;
    for (const auto& row : matrix.rows) {
      const double v = row.value(col);
      if (v != prev) ++transitions;
      prev = v;
    }
    CHECK(transitions <= 2);  // up once, down at most once
  }
}

TEST_CASE("sparse CSV dump has a label header and onset-keyed rows") {
  const Part part = make_part("oboe", {note(Beat(1, 2), Beat(1), 60)});
  const std::string csv = part_matrix_to_csv(extract_part_bases(part));
  CHECK(csv.find("pitch,pitch^2") != std::string::npos);
  CHECK(csv.find("\n1,2,") != std::string::npos);  // onset 1/2
}
