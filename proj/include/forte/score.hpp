#pragma once

#include <optional>
#include <string>
#include <vector>

#include "forte/rational.hpp"

namespace forte {

// One note of the score. Onsets/durations are in quarter-note beats from the
// start of the piece timeline, exact rationals.
struct NoteEvent {
  Beat onset;
  Beat duration;     // > 0
  int pitch = 60;    // written MIDI number 0..127
  bool accent = false;
  bool staccato = false;
  bool fermata = false;
};

// Closed vocabulary of constant dynamic levels.
enum class DynamicLevel { ppp, pp, p, mp, mf, f, ff, fff };

enum class WedgeKind { crescendo, diminuendo };

// Impulse-style markings attached to a note or chord.
enum class ImpulseKind { sfz, fp, marcato };

const char* to_string(DynamicLevel level);
const char* to_string(WedgeKind kind);
const char* to_string(ImpulseKind kind);
std::optional<DynamicLevel> dynamic_level_from_string(const std::string& s);

struct Marking {
  enum class Type { ConstantDynamic, Wedge, Impulse };

  Type type = Type::ConstantDynamic;
  Beat onset;                 // wedge: start of the wedge
  std::optional<Beat> end;    // wedge: end (always set); others: open extent
  DynamicLevel level = DynamicLevel::mf;  // ConstantDynamic only
  WedgeKind wedge = WedgeKind::crescendo; // Wedge only
  ImpulseKind impulse = ImpulseKind::sfz; // Impulse only

  static Marking constant(Beat onset, DynamicLevel level) {
    Marking m;
    m.type = Type::ConstantDynamic;
    m.onset = onset;
    m.level = level;
    return m;
  }
  static Marking make_wedge(Beat start, Beat end, WedgeKind kind) {
    Marking m;
    m.type = Type::Wedge;
    m.onset = start;
    m.end = end;
    m.wedge = kind;
    return m;
  }
  static Marking make_impulse(Beat onset, ImpulseKind kind) {
    Marking m;
    m.type = Type::Impulse;
    m.onset = onset;
    m.impulse = kind;
    return m;
  }
};

// Active time signature. `anchor` is the onset of the bar grid, not of the
// first note under the signature: for a piece that begins with a pickup the
// anchor is negative so that within-bar positions line up with notated bars
// (note onsets themselves are always >= 0).
struct TimeSignature {
  Beat anchor;
  int numerator = 4;
  int denominator = 4;

  Beat bar_length() const { return Beat(4 * numerator, denominator); }
  Beat beat_unit() const { return Beat(4, denominator); }
};

// Resolved instrument identity: one of the closed canonical class table plus
// the string-matching score that produced it.
struct CanonicalInstrument {
  std::string class_name;
  double match_score = 0.0;
};

struct Part {
  CanonicalInstrument instrument;
  std::string raw_name;
  std::vector<NoteEvent> notes;              // sorted by onset, chords consecutive
  std::vector<Marking> markings;             // sorted by onset
  std::vector<TimeSignature> time_signatures;  // non-empty, sorted by anchor
  std::vector<Beat> repeat_marks;            // repeat-barline onsets, unfolded timeline
  int transposition = 0;                     // semitones, [-24, 24]

  const TimeSignature& signature_at(const Beat& onset) const;
};

// Measure skeleton retained for repeat unfolding and metrical bookkeeping.
struct MeasureInfo {
  Beat start;
  Beat length;
  bool repeat_forward = false;   // |: at the start of this measure
  bool repeat_backward = false;  // :| at the end of this measure
  int repeat_times = 2;          // total passes through the repeated span
  std::vector<int> ending_numbers;  // volta bracket covering this measure (empty = none)
};

struct Score {
  std::string id;
  int divisions = 1;           // MusicXML divisions per quarter note (metadata)
  std::vector<Part> parts;     // in source-document order
  std::vector<MeasureInfo> measures;

  void validate() const;       // throws ContractViolation on invariant breach
};

// Concert pitch of a written note: written + transposition semitones.
// Throws ContractViolation when the result leaves the MIDI range.
int sounding_pitch(const NoteEvent& note, int transposition);

// Canonical JSON dump of a Score (stable key order), for debugging.
std::string score_to_json(const Score& score);

}  // namespace forte
