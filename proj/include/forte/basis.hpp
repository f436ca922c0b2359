#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "forte/score.hpp"

namespace forte {

// Per-column reduction applied when same-onset rows are fused.
enum class FusionPolicy { Max, Mean, Sum };

const char* to_string(FusionPolicy policy);
std::optional<FusionPolicy> fusion_policy_from_string(const std::string& s);

// One basis-function column, indexed by (instrument class, label).
struct BasisDescriptor {
  std::string instrument_class;
  std::string label;
  FusionPolicy policy = FusionPolicy::Max;

  std::string key() const { return instrument_class + "/" + label; }
  friend bool operator==(const BasisDescriptor& a, const BasisDescriptor& b) {
    return a.instrument_class == b.instrument_class && a.label == b.label;
  }
};

// Structured form of a column label; every generated label round-trips
// through parse_basis_label.
struct BasisKind {
  enum class Group { Pitch, Duration, Ioi, Vertical, Metrical, DynStep, DynAnticipation,
                     DynRamp, Impulse };
  Group group;
  int degree = 0;            // Pitch: 1..3
  std::string detail;        // Vertical: lower/higher/total; Impulse: accent/...;
                             // Dyn*: level or wedge kind; DynAnticipation: + length
  int metrical_num = 0, metrical_den = 0, metrical_beat = -1;  // beat -1 = offbeat
};

BasisKind parse_basis_label(const std::string& label);   // throws ConfigError
std::string basis_label(const BasisKind& kind);          // inverse
// Coarse group token ("pitch", "duration", "ioi", "vertical", "metrical",
// "dyn.step", "dyn.ant", "dyn.ramp", "impulse"), used for policy overrides.
std::string basis_group(const std::string& label);
FusionPolicy default_policy(const std::string& label);

// Sparse row of a per-part matrix: one row per NoteEvent in onset order,
// simultaneous notes on consecutive rows. Absent entries are 0. The sounding
// pitch travels with the row so the fusion pass can recount vertical
// neighbors class-wide.
struct BasisRow {
  Beat onset;
  int pitch = -1;
  std::vector<std::pair<int, double>> entries;  // sorted by column index

  double value(int column) const;
};

struct PartBasisMatrix {
  std::string instrument_class;
  std::vector<BasisDescriptor> columns;
  std::vector<BasisRow> rows;

  int column_index(const std::string& label) const;  // -1 when absent
};

// --- individual basis evaluators ---------------------------------------

// (q, q^2, q^3) with q = sounding_pitch / 127, keeping all terms in [0,1].
std::array<double, 3> pitch_poly(int sounding_pitch);

struct VerticalCounts {
  int lower = 0, higher = 0, total = 0;
};
// Neighbor counts of pitches[query] among simultaneous pitches; the note
// itself is excluded, equal pitches count toward total only.
VerticalCounts vertical_neighbors(std::span<const int> simultaneous_pitches,
                                  std::size_t query);

struct MetricalPosition {
  int numerator = 4, denominator = 4;
  int beat = -1;  // integer beat index within the bar, -1 = off the beat grid
};
MetricalPosition metrical_position(const Beat& onset, const TimeSignature& sig);

// duration in beats and inter-onset interval to the next distinct onset in
// the part (last onsets fall back to their own duration).
std::pair<Beat, Beat> duration_and_ioi(const Part& part, std::size_t note_index);

// Impulse column labels a note's articulation flags activate
// (impulse.accent / impulse.staccato / impulse.fermata), each worth a 1 on
// that note's row only.
std::vector<std::string> articulation_impulses(const NoteEvent& note);

// Dynamics-marking columns of a part, evaluated densely at every note row.
// Step functions hold 1 on [t, next constant); wedges ramp 0..1 over their
// extent and hold 1 until the next constant marking; each constant level
// contributes short (1 beat) and long (8 beats) anticipation ramps clipped at
// the previous constant marking; impulse markings put a 1 on rows at their
// onset.
std::vector<std::pair<BasisDescriptor, std::vector<double>>> dynamics_bases(
    const Part& part, std::vector<std::string>* warnings = nullptr);

constexpr double kAnticipationShortBeats = 1.0;
constexpr double kAnticipationLongBeats = 8.0;

// Full per-part catalogue. Pitch/duration/ioi/vertical columns are always
// present; metrical, dynamics and impulse columns appear only when some row
// activates them.
PartBasisMatrix extract_part_bases(const Part& part,
                                   std::vector<std::string>* warnings = nullptr);

// Sparse CSV dump: header row of labels, then "onset_num,onset_den,idx=value,...".
std::string part_matrix_to_csv(const PartBasisMatrix& matrix);

}  // namespace forte
