#include "forte/basis.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "forte/errors.hpp"
#include "forte/textio.hpp"

namespace forte {

const char* to_string(FusionPolicy policy) {
  switch (policy) {
    case FusionPolicy::Max: return "max";
    case FusionPolicy::Mean: return "mean";
    case FusionPolicy::Sum: return "sum";
  }
  return "?";
}

std::optional<FusionPolicy> fusion_policy_from_string(const std::string& s) {
  if (s == "max") return FusionPolicy::Max;
  if (s == "mean") return FusionPolicy::Mean;
  if (s == "sum") return FusionPolicy::Sum;
  return std::nullopt;
}

double BasisRow::value(int column) const {
  for (const auto& [col, v] : entries)
    if (col == column) return v;
  return 0.0;
}

int PartBasisMatrix::column_index(const std::string& label) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].label == label) return static_cast<int>(i);
  return -1;
}

// --- label grammar -------------------------------------------------------

namespace {

const char* kImpulseDetails[] = {"sfz", "fp", "marcato", "accent", "staccato",
                                 "fermata", "repeat-sign"};

bool valid_impulse_detail(const std::string& d) {
  for (const char* k : kImpulseDetails)
    if (d == k) return true;
  return false;
}

bool valid_level(const std::string& d) { return dynamic_level_from_string(d).has_value(); }

}  // namespace

std::string basis_label(const BasisKind& kind) {
  using Group = BasisKind::Group;
  switch (kind.group) {
    case Group::Pitch:
      return kind.degree == 1 ? "pitch" : "pitch^" + std::to_string(kind.degree);
    case Group::Duration: return "duration";
    case Group::Ioi: return "ioi";
    case Group::Vertical: return "vertical." + kind.detail;
    case Group::Metrical: {
      std::string base = "metrical." + std::to_string(kind.metrical_num) + "/" +
                         std::to_string(kind.metrical_den) + ".";
      return kind.metrical_beat < 0 ? base + "offbeat"
                                    : base + "beat" + std::to_string(kind.metrical_beat);
    }
    case Group::DynStep: return "dyn." + kind.detail + ".step";
    case Group::DynAnticipation: return "dyn." + kind.detail;  // detail = "f.ant-short"
    case Group::DynRamp: return "dyn." + kind.detail + ".ramp";
    case Group::Impulse: return "impulse." + kind.detail;
  }
  throw ConfigError("unknown basis kind");
}

BasisKind parse_basis_label(const std::string& label) {
  using Group = BasisKind::Group;
  BasisKind kind;
  if (label == "pitch" || label == "pitch^2" || label == "pitch^3") {
    kind.group = Group::Pitch;
    kind.degree = label == "pitch" ? 1 : label.back() - '0';
    return kind;
  }
  if (label == "duration") { kind.group = Group::Duration; return kind; }
  if (label == "ioi") { kind.group = Group::Ioi; return kind; }

  const auto fields = split(label, '.');
  if (fields.size() == 2 && fields[0] == "vertical" &&
      (fields[1] == "lower" || fields[1] == "higher" || fields[1] == "total")) {
    kind.group = Group::Vertical;
    kind.detail = fields[1];
    return kind;
  }
  if (fields.size() == 3 && fields[0] == "metrical") {
    const auto sig = split(fields[1], '/');
    if (sig.size() == 2) {
      try {
        kind.metrical_num = std::stoi(sig[0]);
        kind.metrical_den = std::stoi(sig[1]);
        kind.group = Group::Metrical;
        if (fields[2] == "offbeat") {
          kind.metrical_beat = -1;
          return kind;
        }
        if (fields[2].rfind("beat", 0) == 0) {
          kind.metrical_beat = std::stoi(fields[2].substr(4));
          if (kind.metrical_beat >= 0 && kind.metrical_beat < kind.metrical_num) return kind;
        }
      } catch (const std::exception&) {
      }
    }
  }
  if (fields.size() == 3 && fields[0] == "dyn") {
    if (fields[2] == "step" && valid_level(fields[1])) {
      kind.group = Group::DynStep;
      kind.detail = fields[1];
      return kind;
    }
    if ((fields[2] == "ant-short" || fields[2] == "ant-long") && valid_level(fields[1])) {
      kind.group = Group::DynAnticipation;
      kind.detail = fields[1] + "." + fields[2];
      return kind;
    }
    if (fields[2] == "ramp" && (fields[1] == "crescendo" || fields[1] == "diminuendo")) {
      kind.group = Group::DynRamp;
      kind.detail = fields[1];
      return kind;
    }
  }
  if (fields.size() == 2 && fields[0] == "impulse" && valid_impulse_detail(fields[1])) {
    kind.group = Group::Impulse;
    kind.detail = fields[1];
    return kind;
  }
  throw ConfigError("unparseable basis label: '" + label + "'");
}

std::string basis_group(const std::string& label) {
  using Group = BasisKind::Group;
  switch (parse_basis_label(label).group) {
    case Group::Pitch: return "pitch";
    case Group::Duration: return "duration";
    case Group::Ioi: return "ioi";
    case Group::Vertical: return "vertical";
    case Group::Metrical: return "metrical";
    case Group::DynStep: return "dyn.step";
    case Group::DynAnticipation: return "dyn.ant";
    case Group::DynRamp: return "dyn.ramp";
    case Group::Impulse: return "impulse";
  }
  throw ConfigError("unknown basis label group");
}

FusionPolicy default_policy(const std::string& label) {
  const std::string group = basis_group(label);
  // {0,1}-valued and ramp columns keep binary/ramp semantics under max; the
  // numeric note descriptors average; counts aggregate across desks.
  if (group == "pitch" || group == "duration" || group == "ioi") return FusionPolicy::Mean;
  if (group == "vertical") return FusionPolicy::Sum;
  return FusionPolicy::Max;
}

// --- evaluators ----------------------------------------------------------

std::array<double, 3> pitch_poly(int sounding_pitch) {
  const double q = static_cast<double>(sounding_pitch) / 127.0;
  return {q, q * q, q * q * q};
}

VerticalCounts vertical_neighbors(std::span<const int> simultaneous_pitches,
                                  std::size_t query) {
  VerticalCounts counts;
  const int pitch = simultaneous_pitches[query];
  for (std::size_t i = 0; i < simultaneous_pitches.size(); ++i) {
    if (i == query) continue;
    if (simultaneous_pitches[i] < pitch) ++counts.lower;
    else if (simultaneous_pitches[i] > pitch) ++counts.higher;
    ++counts.total;
  }
  return counts;
}

MetricalPosition metrical_position(const Beat& onset, const TimeSignature& sig) {
  MetricalPosition pos;
  pos.numerator = sig.numerator;
  pos.denominator = sig.denominator;
  const Beat offset = Rational::mod(onset - sig.anchor, sig.bar_length());
  const Beat unit = sig.beat_unit();
  const Beat beats = offset / unit;
  if (beats.den() == 1) pos.beat = static_cast<int>(beats.num());
  else pos.beat = -1;
  return pos;
}

std::pair<Beat, Beat> duration_and_ioi(const Part& part, std::size_t note_index) {
  const NoteEvent& note = part.notes[note_index];
  std::size_t j = note_index;
  while (j < part.notes.size() && part.notes[j].onset == note.onset) ++j;
  const Beat ioi =
      j < part.notes.size() ? part.notes[j].onset - note.onset : note.duration;
  return {note.duration, ioi};
}

std::vector<std::string> articulation_impulses(const NoteEvent& note) {
  std::vector<std::string> labels;
  if (note.accent) labels.push_back("impulse.accent");
  if (note.staccato) labels.push_back("impulse.staccato");
  if (note.fermata) labels.push_back("impulse.fermata");
  return labels;
}

// --- dynamics ------------------------------------------------------------

namespace {

struct ConstantMark {
  Beat onset;
  DynamicLevel level;
};

// Constant markings with duplicates at equal onsets resolved to the last in
// document order.
std::vector<ConstantMark> constant_marks(const Part& part,
                                         std::vector<std::string>* warnings) {
  std::vector<ConstantMark> marks;
  for (const auto& m : part.markings) {
    if (m.type != Marking::Type::ConstantDynamic) continue;
    if (!marks.empty() && marks.back().onset == m.onset) {
      if (warnings)
        warnings->push_back("overlapping constant dynamics at beat " + m.onset.str() +
                            "; keeping the last");
      marks.back().level = m.level;
      continue;
    }
    marks.push_back({m.onset, m.level});
  }
  std::stable_sort(marks.begin(), marks.end(),
                   [](const ConstantMark& a, const ConstantMark& b) { return a.onset < b.onset; });
  return marks;
}

}  // namespace

std::vector<std::pair<BasisDescriptor, std::vector<double>>> dynamics_bases(
    const Part& part, std::vector<std::string>* warnings) {
  const std::vector<ConstantMark> constants = constant_marks(part, warnings);
  const std::size_t n = part.notes.size();

  // Deterministic column order: first-activation while scanning markings in
  // onset order, steps/anticipations before wedges before impulses.
  std::vector<std::pair<BasisDescriptor, std::vector<double>>> out;
  std::map<std::string, std::size_t> index;
  auto column = [&](const std::string& label) -> std::vector<double>& {
    const auto it = index.find(label);
    if (it != index.end()) return out[it->second].second;
    index.emplace(label, out.size());
    out.emplace_back(BasisDescriptor{part.instrument.class_name, label, default_policy(label)},
                     std::vector<double>(n, 0.0));
    return out.back().second;
  };

  auto next_constant_after = [&constants](const Beat& t) -> std::optional<Beat> {
    for (const auto& c : constants)
      if (c.onset > t) return c.onset;
    return std::nullopt;
  };
  auto previous_constant_before = [&constants](const Beat& t) -> std::optional<Beat> {
    std::optional<Beat> prev;
    for (const auto& c : constants)
      if (c.onset < t) prev = c.onset;
      else break;
    return prev;
  };

  // Constant markings: step plus the two anticipation ramps.
  for (const auto& c : constants) {
    const std::optional<Beat> next = next_constant_after(c.onset);
    const std::optional<Beat> prev = previous_constant_before(c.onset);
    const std::string name = to_string(c.level);

    std::vector<double>* step = nullptr;
    for (std::size_t i = 0; i < n; ++i) {
      const Beat& onset = part.notes[i].onset;
      if (onset < c.onset || (next && onset >= *next)) continue;
      if (!step) step = &column("dyn." + name + ".step");
      (*step)[i] = 1.0;
    }

    const double t = c.onset.to_double();
    for (const double length : {kAnticipationShortBeats, kAnticipationLongBeats}) {
      const char* suffix = length == kAnticipationShortBeats ? ".ant-short" : ".ant-long";
      std::vector<double>* ramp = nullptr;
      for (std::size_t i = 0; i < n; ++i) {
        const Beat& onset = part.notes[i].onset;
        if (onset > c.onset) continue;
        if (prev && onset < *prev) continue;
        const double v = (onset.to_double() - (t - length)) / length;
        if (v <= 0.0) continue;
        if (!ramp) ramp = &column("dyn." + name + suffix);
        (*ramp)[i] = std::max((*ramp)[i], v);
      }
    }
  }

  // Wedges: ramp over [start, end], held at 1 until the next constant.
  for (const auto& m : part.markings) {
    if (m.type != Marking::Type::Wedge) continue;
    const std::optional<Beat> next = next_constant_after(m.onset);
    const double s = m.onset.to_double();
    const double e = m.end->to_double();
    std::vector<double>* ramp = nullptr;
    for (std::size_t i = 0; i < n; ++i) {
      const Beat& onset = part.notes[i].onset;
      if (onset < m.onset || (next && onset >= *next)) continue;
      const double v = std::min((onset.to_double() - s) / (e - s), 1.0);
      if (v <= 0.0) continue;
      if (!ramp) ramp = &column(std::string("dyn.") + to_string(m.wedge) + ".ramp");
      (*ramp)[i] = std::max((*ramp)[i], v);
    }
  }

  // Impulse markings hit the rows at exactly their onset.
  for (const auto& m : part.markings) {
    if (m.type != Marking::Type::Impulse) continue;
    std::vector<double>* col = nullptr;
    for (std::size_t i = 0; i < n; ++i) {
      if (part.notes[i].onset == m.onset) {
        if (!col) col = &column(std::string("impulse.") + to_string(m.impulse));
        (*col)[i] = 1.0;
      }
    }
  }

  return out;
}

// --- full catalogue --------------------------------------------------------

PartBasisMatrix extract_part_bases(const Part& part, std::vector<std::string>* warnings) {
  PartBasisMatrix matrix;
  matrix.instrument_class = part.instrument.class_name;

  std::map<std::string, int> index;
  auto ensure = [&](const std::string& label) {
    const auto it = index.find(label);
    if (it != index.end()) return it->second;
    const int col = static_cast<int>(matrix.columns.size());
    index.emplace(label, col);
    matrix.columns.push_back(
        BasisDescriptor{part.instrument.class_name, label, default_policy(label)});
    return col;
  };

  // The note-derived core is unconditional.
  const int col_pitch = ensure("pitch");
  const int col_pitch2 = ensure("pitch^2");
  const int col_pitch3 = ensure("pitch^3");
  const int col_duration = ensure("duration");
  const int col_ioi = ensure("ioi");
  const int col_lower = ensure("vertical.lower");
  const int col_higher = ensure("vertical.higher");
  const int col_total = ensure("vertical.total");

  const std::size_t n = part.notes.size();
  matrix.rows.resize(n);

  // Onset groups for within-part vertical neighbors.
  std::vector<std::size_t> group_start(n, 0);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && part.notes[j].onset == part.notes[i].onset) ++j;
    for (std::size_t k = i; k < j; ++k) group_start[k] = i;
    i = j;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const NoteEvent& note = part.notes[i];
    BasisRow& row = matrix.rows[i];
    row.onset = note.onset;
    row.pitch = sounding_pitch(note, part.transposition);

    auto set = [&row](int col, double v) {
      if (v != 0.0) row.entries.emplace_back(col, v);
    };

    const auto poly = pitch_poly(row.pitch);
    set(col_pitch, poly[0]);
    set(col_pitch2, poly[1]);
    set(col_pitch3, poly[2]);

    const auto [duration, ioi] = duration_and_ioi(part, i);
    set(col_duration, duration.to_double());
    set(col_ioi, ioi.to_double());

    std::vector<int> chord;
    std::size_t g = group_start[i];
    std::size_t query = i - g;
    for (std::size_t k = g; k < n && part.notes[k].onset == note.onset; ++k)
      chord.push_back(sounding_pitch(part.notes[k], part.transposition));
    const VerticalCounts counts = vertical_neighbors(chord, query);
    set(col_lower, counts.lower);
    set(col_higher, counts.higher);
    set(col_total, counts.total);

    const MetricalPosition pos = metrical_position(note.onset, part.signature_at(note.onset));
    BasisKind mk;
    mk.group = BasisKind::Group::Metrical;
    mk.metrical_num = pos.numerator;
    mk.metrical_den = pos.denominator;
    mk.metrical_beat = pos.beat;
    set(ensure(basis_label(mk)), 1.0);

    for (const auto& label : articulation_impulses(note)) set(ensure(label), 1.0);
  }

  // Repeat-sign impulses recorded by unfold_repeats.
  if (!part.repeat_marks.empty()) {
    int col = -1;
    for (std::size_t i = 0; i < n; ++i) {
      const Beat& onset = part.notes[i].onset;
      if (std::binary_search(part.repeat_marks.begin(), part.repeat_marks.end(), onset)) {
        if (col < 0) col = ensure("impulse.repeat-sign");
        matrix.rows[i].entries.emplace_back(col, 1.0);
      }
    }
  }

  // Dynamics columns, appended in their own first-activation order.
  for (const auto& [descriptor, values] : dynamics_bases(part, warnings)) {
    const int col = ensure(descriptor.label);
    for (std::size_t i = 0; i < n; ++i)
      if (values[i] != 0.0) matrix.rows[i].entries.emplace_back(col, values[i]);
  }

  for (auto& row : matrix.rows)
    std::sort(row.entries.begin(), row.entries.end());

  return matrix;
}

std::string part_matrix_to_csv(const PartBasisMatrix& matrix) {
  std::string out;
  for (std::size_t c = 0; c < matrix.columns.size(); ++c) {
    if (c) out += ',';
    out += matrix.columns[c].label;
  }
  out += '\n';
  for (const auto& row : matrix.rows) {
    out += std::to_string(row.onset.num()) + "," + std::to_string(row.onset.den());
    for (const auto& [col, v] : row.entries)
      out += "," + std::to_string(col) + "=" + format_double(v);
    out += '\n';
  }
  return out;
}

}  // namespace forte
