#include "forte/score.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

namespace forte {

const char* to_string(DynamicLevel level) {
  switch (level) {
    case DynamicLevel::ppp: return "ppp";
    case DynamicLevel::pp: return "pp";
    case DynamicLevel::p: return "p";
    case DynamicLevel::mp: return "mp";
    case DynamicLevel::mf: return "mf";
    case DynamicLevel::f: return "f";
    case DynamicLevel::ff: return "ff";
    case DynamicLevel::fff: return "fff";
  }
  return "?";
}

const char* to_string(WedgeKind kind) {
  return kind == WedgeKind::crescendo ? "crescendo" : "diminuendo";
}

const char* to_string(ImpulseKind kind) {
  switch (kind) {
    case ImpulseKind::sfz: return "sfz";
    case ImpulseKind::fp: return "fp";
    case ImpulseKind::marcato: return "marcato";
  }
  return "?";
}

std::optional<DynamicLevel> dynamic_level_from_string(const std::string& s) {
  static const std::pair<const char*, DynamicLevel> table[] = {
      {"ppp", DynamicLevel::ppp}, {"pp", DynamicLevel::pp}, {"p", DynamicLevel::p},
      {"mp", DynamicLevel::mp},   {"mf", DynamicLevel::mf}, {"f", DynamicLevel::f},
      {"ff", DynamicLevel::ff},   {"fff", DynamicLevel::fff}};
  for (const auto& [name, level] : table)
    if (s == name) return level;
  return std::nullopt;
}

const TimeSignature& Part::signature_at(const Beat& onset) const {
  if (time_signatures.empty())
    throw ContractViolation("part '" + raw_name + "' has no time signature");
  const TimeSignature* active = &time_signatures.front();
  for (const auto& sig : time_signatures) {
    if (sig.anchor <= onset) active = &sig;
    else break;
  }
  return *active;
}

void Score::validate() const {
  for (const auto& part : parts) {
    if (part.notes.empty())
      throw ContractViolation("part '" + part.raw_name + "' has no notes");
    if (part.time_signatures.empty())
      throw ContractViolation("part '" + part.raw_name + "' has no time signature");
    if (part.transposition < -24 || part.transposition > 24)
      throw ContractViolation("part '" + part.raw_name + "' transposition out of [-24, 24]");
    const NoteEvent* prev = nullptr;
    for (const auto& n : part.notes) {
      if (n.onset < Beat(0))
        throw ContractViolation("negative note onset in part '" + part.raw_name + "'");
      if (!(n.duration > Beat(0)))
        throw ContractViolation("non-positive note duration in part '" + part.raw_name + "'");
      if (n.pitch < 0 || n.pitch > 127)
        throw ContractViolation("pitch outside MIDI range in part '" + part.raw_name + "'");
      if (prev && n.onset < prev->onset)
        throw ContractViolation("notes not sorted by onset in part '" + part.raw_name + "'");
      prev = &n;
    }
    if (!std::is_sorted(part.time_signatures.begin(), part.time_signatures.end(),
                        [](const TimeSignature& a, const TimeSignature& b) {
                          return a.anchor < b.anchor;
                        }))
      throw ContractViolation("time signatures not sorted in part '" + part.raw_name + "'");
    for (const auto& m : part.markings) {
      if (m.type == Marking::Type::Wedge && (!m.end || !(m.onset < *m.end)))
        throw ContractViolation("wedge with start >= end in part '" + part.raw_name + "'");
    }
  }
}

int sounding_pitch(const NoteEvent& note, int transposition) {
  const int result = note.pitch + transposition;
  if (result < 0 || result > 127)
    throw ContractViolation("sounding pitch " + std::to_string(result) +
                            " outside MIDI range 0..127");
  return result;
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json beat_json(const Beat& b) {
  return ordered_json{{"num", b.num()}, {"den", b.den()}};
}

ordered_json marking_json(const Marking& m) {
  ordered_json j;
  switch (m.type) {
    case Marking::Type::ConstantDynamic:
      j["kind"] = "constant";
      j["level"] = to_string(m.level);
      break;
    case Marking::Type::Wedge:
      j["kind"] = "wedge";
      j["wedge"] = to_string(m.wedge);
      break;
    case Marking::Type::Impulse:
      j["kind"] = "impulse";
      j["impulse"] = to_string(m.impulse);
      break;
  }
  j["onset"] = beat_json(m.onset);
  if (m.end) j["end"] = beat_json(*m.end);
  return j;
}

}  // namespace

std::string score_to_json(const Score& score) {
  ordered_json j;
  j["id"] = score.id;
  j["divisions"] = score.divisions;
  j["parts"] = ordered_json::array();
  for (const auto& part : score.parts) {
    ordered_json p;
    p["instrument"] = part.instrument.class_name;
    p["match_score"] = part.instrument.match_score;
    p["raw_name"] = part.raw_name;
    p["transposition"] = part.transposition;
    p["time_signatures"] = ordered_json::array();
    for (const auto& sig : part.time_signatures)
      p["time_signatures"].push_back(ordered_json{{"anchor", beat_json(sig.anchor)},
                                                  {"numerator", sig.numerator},
                                                  {"denominator", sig.denominator}});
    p["notes"] = ordered_json::array();
    for (const auto& n : part.notes)
      p["notes"].push_back(ordered_json{{"onset", beat_json(n.onset)},
                                        {"duration", beat_json(n.duration)},
                                        {"pitch", n.pitch},
                                        {"accent", n.accent},
                                        {"staccato", n.staccato},
                                        {"fermata", n.fermata}});
    p["markings"] = ordered_json::array();
    for (const auto& m : part.markings) p["markings"].push_back(marking_json(m));
    p["repeat_marks"] = ordered_json::array();
    for (const auto& r : part.repeat_marks) p["repeat_marks"].push_back(beat_json(r));
    j["parts"].push_back(std::move(p));
  }
  return j.dump(2) + "\n";
}

}  // namespace forte
