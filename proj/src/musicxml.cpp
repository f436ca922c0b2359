#include "forte/musicxml.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "forte/errors.hpp"
#include "forte/mxl.hpp"

namespace forte {

namespace {

using boost::property_tree::ptree;

struct RawNote {
  int measure = 0;
  Beat local_onset;
  Beat duration;
  int pitch = 60;
  int voice = 1;
  bool accent = false, staccato = false, fermata = false;
  bool marcato = false;
  bool tie_start = false, tie_stop = false;
};

struct RawMarking {
  int measure = 0;
  Beat local_onset;
  enum class Kind { Constant, Impulse, WedgeStart, WedgeStop, WordsWedge } kind;
  DynamicLevel level = DynamicLevel::mf;
  ImpulseKind impulse = ImpulseKind::sfz;
  WedgeKind wedge = WedgeKind::crescendo;
  int wedge_number = 1;
};

struct RawTime {
  int measure = 0;
  int numerator = 4, denominator = 4;
};

struct RawPart {
  std::string id;
  std::string name;
  std::vector<RawNote> notes;        // document order
  std::vector<RawMarking> markings;  // document order
  std::vector<RawTime> times;
  int transposition = 0;
  bool saw_transpose = false;
  std::vector<Beat> measure_extent;  // max cursor reached per measure
};

struct RawMeasure {
  std::string number;
  bool repeat_forward = false;
  bool repeat_backward = false;
  int repeat_times = 2;
  std::vector<int> ending_numbers;  // numbers of the bracket declared here
  bool ending_start = false;
  bool ending_stop = false;
};

void warn(const ParseOptions& opts, const std::string& msg) {
  if (opts.warnings) opts.warnings->push_back(msg);
}

int step_to_semitone(char step) {
  switch (step) {
    case 'C': return 0;
    case 'D': return 2;
    case 'E': return 4;
    case 'F': return 5;
    case 'G': return 7;
    case 'A': return 9;
    case 'B': return 11;
  }
  throw ParseError(std::string("invalid pitch step '") + step + "'");
}

int parse_pitch(const ptree& pitch) {
  const std::string step = pitch.get<std::string>("step", "C");
  const int alter = pitch.get<int>("alter", 0);
  const int octave = pitch.get<int>("octave", 4);
  const int midi = (octave + 1) * 12 + step_to_semitone(step.empty() ? 'C' : step[0]) + alter;
  if (midi < 0 || midi > 127)
    throw ParseError("pitch outside MIDI range: " + step + std::to_string(octave));
  return midi;
}

std::optional<ImpulseKind> impulse_from_dynamics_tag(const std::string& tag) {
  if (tag == "sfz" || tag == "sf" || tag == "sffz" || tag == "rf" || tag == "rfz" ||
      tag == "sfzp")
    return ImpulseKind::sfz;
  if (tag == "fp" || tag == "sfp" || tag == "sfpp") return ImpulseKind::fp;
  return std::nullopt;
}

bool is_cresc_word(std::string w) {
  std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
  return w.rfind("cresc", 0) == 0;
}

bool is_dim_word(std::string w) {
  std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
  return w.rfind("dim", 0) == 0 || w.rfind("decresc", 0) == 0;
}

std::vector<int> parse_ending_numbers(const std::string& attr) {
  std::vector<int> numbers;
  std::string token;
  std::istringstream iss(attr);
  while (std::getline(iss, token, ',')) {
    try {
      numbers.push_back(std::stoi(token));
    } catch (const std::exception&) {
      // non-numeric volta labels are ignored
    }
  }
  return numbers;
}

// Walk one <note> element.
void handle_note(const ptree& note, int measure_index, int divisions, Beat& cursor,
                 Beat& last_onset, RawPart& part, const ParseOptions& opts,
                 const std::string& measure_number) {
  if (note.get_child_optional("grace")) {
    warn(opts, "part '" + part.name + "' measure " + measure_number + ": grace note skipped");
    return;
  }
  const bool is_chord = note.get_child_optional("chord").has_value();
  const bool is_rest = note.get_child_optional("rest").has_value();
  const bool is_cue = note.get_child_optional("cue").has_value();

  const long dur_divs = note.get<long>("duration", 0);
  if (divisions <= 0) throw ParseError("note before any <divisions> declaration");
  const Beat dur(dur_divs, divisions);

  const Beat onset = is_chord ? last_onset : cursor;

  if (is_cue) {
    warn(opts, "part '" + part.name + "' measure " + measure_number + ": cue note skipped");
  } else if (!is_rest) {
    RawNote n;
    n.measure = measure_index;
    n.local_onset = onset;
    n.duration = dur;
    n.pitch = parse_pitch(note.get_child("pitch", ptree{}));
    n.voice = note.get<int>("voice", 1);
    for (const auto& [key, child] : note) {
      if (key == "tie") {
        const std::string type = child.get<std::string>("<xmlattr>.type", "");
        if (type == "start") n.tie_start = true;
        if (type == "stop") n.tie_stop = true;
      } else if (key == "notations") {
        if (child.get_child_optional("fermata")) n.fermata = true;
        if (auto artic = child.get_child_optional("articulations")) {
          for (const auto& [akey, avalue] : *artic) {
            (void)avalue;
            if (akey == "staccato" || akey == "staccatissimo") n.staccato = true;
            else if (akey == "accent") n.accent = true;
            else if (akey == "strong-accent") n.marcato = true;
          }
        }
      }
    }
    if (n.duration > Beat(0)) {
      part.notes.push_back(n);
    } else {
      warn(opts, "part '" + part.name + "' measure " + measure_number +
                     ": zero-duration note skipped");
    }
  }

  if (!is_chord) {
    last_onset = onset;
    cursor = cursor + dur;
  }
}

void handle_direction(const ptree& dir, int measure_index, int divisions, const Beat& cursor,
                      RawPart& part, const ParseOptions& opts,
                      const std::string& measure_number) {
  Beat offset(0);
  if (auto off = dir.get_optional<long>("offset")) {
    if (divisions > 0) offset = Beat(*off, divisions);
  }
  for (const auto& [key, dt] : dir) {
    if (key != "direction-type") continue;
    for (const auto& [dkey, delem] : dt) {
      if (dkey == "dynamics") {
        for (const auto& [tag, unused] : delem) {
          (void)unused;
          if (tag == "<xmlattr>") continue;
          RawMarking m;
          m.measure = measure_index;
          m.local_onset = cursor + offset;
          if (auto level = dynamic_level_from_string(tag)) {
            m.kind = RawMarking::Kind::Constant;
            m.level = *level;
          } else if (auto imp = impulse_from_dynamics_tag(tag)) {
            m.kind = RawMarking::Kind::Impulse;
            m.impulse = *imp;
          } else {
            warn(opts, "part '" + part.name + "' measure " + measure_number +
                           ": unsupported dynamics element <" + tag + "> skipped");
            continue;
          }
          part.markings.push_back(m);
        }
      } else if (dkey == "wedge") {
        const std::string type = delem.get<std::string>("<xmlattr>.type", "");
        RawMarking m;
        m.measure = measure_index;
        m.local_onset = cursor + offset;
        m.wedge_number = delem.get<int>("<xmlattr>.number", 1);
        if (type == "crescendo" || type == "diminuendo") {
          m.kind = RawMarking::Kind::WedgeStart;
          m.wedge = type == "crescendo" ? WedgeKind::crescendo : WedgeKind::diminuendo;
          part.markings.push_back(m);
        } else if (type == "stop") {
          m.kind = RawMarking::Kind::WedgeStop;
          part.markings.push_back(m);
        }
      } else if (dkey == "words") {
        const std::string text = delem.get_value<std::string>();
        if (is_cresc_word(text) || is_dim_word(text)) {
          RawMarking m;
          m.measure = measure_index;
          m.local_onset = cursor + offset;
          m.kind = RawMarking::Kind::WordsWedge;
          m.wedge = is_cresc_word(text) ? WedgeKind::crescendo : WedgeKind::diminuendo;
          part.markings.push_back(m);
        }
      }
    }
  }
}

void handle_barline(const ptree& barline, RawMeasure& measure) {
  if (auto repeat = barline.get_child_optional("repeat")) {
    const std::string direction = repeat->get<std::string>("<xmlattr>.direction", "");
    if (direction == "forward") {
      measure.repeat_forward = true;
    } else if (direction == "backward") {
      measure.repeat_backward = true;
      measure.repeat_times =
          std::max(2, repeat->get<int>("<xmlattr>.times", 1) + 1);
    }
  }
  if (auto ending = barline.get_child_optional("ending")) {
    const std::string type = ending->get<std::string>("<xmlattr>.type", "");
    if (type == "start") {
      auto numbers = parse_ending_numbers(ending->get<std::string>("<xmlattr>.number", "1"));
      if (!numbers.empty()) {
        measure.ending_numbers = numbers;
        measure.ending_start = true;
      }
    } else if (type == "stop" || type == "discontinue") {
      measure.ending_stop = true;
    }
  }
}

}  // namespace

Score parse_score(std::string_view document, const ParseOptions& opts) {
  std::string xml_storage;
  if (looks_like_zip(document)) {
    xml_storage = mxl_root_document(document);
    document = xml_storage;
  }

  ptree doc;
  try {
    std::istringstream stream{std::string(document)};
    boost::property_tree::read_xml(stream, doc,
                                   boost::property_tree::xml_parser::no_comments |
                                       boost::property_tree::xml_parser::trim_whitespace);
  } catch (const boost::property_tree::xml_parser_error& e) {
    throw ParseError(std::string("malformed XML: ") + e.message(),
                     static_cast<long>(e.line()));
  }

  auto root = doc.get_child_optional("score-partwise");
  if (!root) {
    if (doc.get_child_optional("score-timewise"))
      throw ParseError("score-timewise documents are not supported; export partwise");
    throw ParseError("not a MusicXML document (missing <score-partwise>)");
  }

  const InstrumentTable& instruments =
      opts.instruments ? *opts.instruments : InstrumentTable::builtin();

  // part-list: id -> display name.
  std::map<std::string, std::string> part_names;
  if (auto list = root->get_child_optional("part-list")) {
    for (const auto& [key, sp] : *list) {
      if (key != "score-part") continue;
      const std::string id = sp.get<std::string>("<xmlattr>.id", "");
      std::string name = sp.get<std::string>("part-name", "");
      if (name.empty()) name = sp.get<std::string>("part-abbreviation", "");
      if (name.empty()) name = id;
      part_names[id] = name;
    }
  }

  // Walk every <part>, recording events with measure-local cursors.
  std::vector<RawPart> raw_parts;
  std::vector<RawMeasure> raw_measures;
  int first_divisions = 0;

  for (const auto& [pkey, pnode] : *root) {
    if (pkey != "part") continue;
    RawPart part;
    part.id = pnode.get<std::string>("<xmlattr>.id", "");
    part.name = part_names.count(part.id) ? part_names[part.id] : part.id;

    int divisions = 0;
    int measure_index = 0;
    for (const auto& [mkey, mnode] : pnode) {
      if (mkey != "measure") continue;
      if (static_cast<std::size_t>(measure_index) >= raw_measures.size()) {
        RawMeasure rm;
        rm.number = mnode.get<std::string>("<xmlattr>.number",
                                           std::to_string(measure_index + 1));
        raw_measures.push_back(rm);
      }
      RawMeasure& rmeas = raw_measures[measure_index];

      Beat cursor(0);
      Beat extent(0);
      Beat last_onset(0);
      for (const auto& [key, child] : mnode) {
        if (key == "attributes") {
          if (auto div = child.get_optional<int>("divisions")) {
            if (*div <= 0) throw ParseError("non-positive <divisions>");
            divisions = *div;
            if (first_divisions == 0) first_divisions = *div;
          }
          for (const auto& [akey, anode] : child) {
            if (akey == "time") {
              RawTime t;
              t.measure = measure_index;
              t.numerator = anode.get<int>("beats", 4);
              t.denominator = anode.get<int>("beat-type", 4);
              if (t.numerator <= 0 || t.denominator <= 0)
                throw ParseError("invalid time signature in measure " + rmeas.number);
              part.times.push_back(t);
            } else if (akey == "transpose") {
              const int chromatic = anode.get<int>("chromatic", 0);
              const int octaves = anode.get<int>("octave-change", 0);
              const int semis = chromatic + 12 * octaves;
              if (part.saw_transpose && semis != part.transposition)
                warn(opts, "part '" + part.name + "': mid-piece transposition change ignored");
              else
                part.transposition = semis;
              part.saw_transpose = true;
            }
          }
        } else if (key == "note") {
          handle_note(child, measure_index, divisions, cursor, last_onset, part, opts,
                     rmeas.number);
          if (cursor > extent) extent = cursor;
        } else if (key == "backup") {
          if (divisions <= 0) throw ParseError("backup before <divisions>");
          cursor = cursor - Beat(child.get<long>("duration", 0), divisions);
          if (cursor < Beat(0)) cursor = Beat(0);
        } else if (key == "forward") {
          if (divisions <= 0) throw ParseError("forward before <divisions>");
          cursor = cursor + Beat(child.get<long>("duration", 0), divisions);
          if (cursor > extent) extent = cursor;
        } else if (key == "direction") {
          handle_direction(child, measure_index, divisions, cursor, part, opts, rmeas.number);
        } else if (key == "barline") {
          handle_barline(child, rmeas);
        }
        // print, sound, harmony, figured-bass etc. carry no timing content here
      }
      part.measure_extent.push_back(extent);
      ++measure_index;
    }
    raw_parts.push_back(std::move(part));
  }

  if (raw_parts.empty()) throw ParseError("document contains no <part> elements");

  // Global measure lengths: max extent over parts; nominal bar length when a
  // measure is empty everywhere.
  const std::size_t n_measures = raw_measures.size();
  std::vector<Beat> measure_length(n_measures, Beat(0));
  for (const auto& part : raw_parts)
    for (std::size_t m = 0; m < part.measure_extent.size(); ++m)
      if (part.measure_extent[m] > measure_length[m]) measure_length[m] = part.measure_extent[m];

  // Active nominal signature per measure (first part that declares one wins).
  std::vector<RawTime> score_times;
  for (const auto& part : raw_parts)
    if (!part.times.empty()) {
      score_times = part.times;
      break;
    }
  if (score_times.empty()) {
    warn(opts, "no time signature found; assuming 4/4");
    score_times.push_back(RawTime{0, 4, 4});
  }
  auto nominal_at = [&score_times](std::size_t measure) {
    RawTime active = score_times.front();
    for (const auto& t : score_times)
      if (static_cast<std::size_t>(t.measure) <= measure) active = t;
    return active;
  };
  for (std::size_t m = 0; m < n_measures; ++m) {
    if (measure_length[m] == Beat(0)) {
      const RawTime t = nominal_at(m);
      measure_length[m] = Beat(4 * t.numerator, t.denominator);
    }
  }

  std::vector<Beat> measure_start(n_measures, Beat(0));
  for (std::size_t m = 1; m < n_measures; ++m)
    measure_start[m] = measure_start[m - 1] + measure_length[m - 1];

  // Pickup: when the opening measure underfills its nominal bar, anchor the
  // bar grid before zero so within-bar positions match the notation.
  const RawTime first_sig = nominal_at(0);
  const Beat first_nominal = Beat(4 * first_sig.numerator, first_sig.denominator);
  const Beat grid_anchor =
      measure_length[0] < first_nominal ? measure_length[0] - first_nominal : Beat(0);

  // Spread each volta bracket's numbers over the measures it covers
  // (MusicXML only tags the bracket's first and last measure). Repeats nested
  // inside a bracket must not terminate it, hence the depth counter.
  {
    std::vector<int> active;
    int depth = 0;
    for (auto& rm : raw_measures) {
      if (rm.ending_start) {
        active = rm.ending_numbers;
        depth = 0;
      }
      if (!active.empty()) {
        rm.ending_numbers = active;
        if (rm.repeat_forward) ++depth;
        if (rm.ending_stop && depth == 0) {
          active.clear();
        } else if (rm.repeat_backward) {
          if (depth > 0) --depth;
          else active.clear();
        }
      }
    }
  }

  Score score;
  score.id = opts.piece_id;
  score.divisions = first_divisions > 0 ? first_divisions : 1;
  for (std::size_t m = 0; m < n_measures; ++m) {
    MeasureInfo info;
    info.start = measure_start[m];
    info.length = measure_length[m];
    info.repeat_forward = raw_measures[m].repeat_forward;
    info.repeat_backward = raw_measures[m].repeat_backward;
    info.repeat_times = raw_measures[m].repeat_times;
    info.ending_numbers = raw_measures[m].ending_numbers;
    score.measures.push_back(info);
  }

  for (auto& raw : raw_parts) {
    // Materialize onsets, merge ties, pair wedges.
    struct NoteRec {
      NoteEvent event;
      int voice;
      bool tie_start;
    };
    std::vector<NoteRec> notes;
    std::map<std::pair<int, int>, std::size_t> open_ties;  // (voice,pitch) -> index
    for (const auto& rn : raw.notes) {
      const Beat onset = measure_start[rn.measure] + rn.local_onset;
      if (rn.tie_stop) {
        const auto it = open_ties.find({rn.voice, rn.pitch});
        if (it != open_ties.end()) {
          NoteRec& open = notes[it->second];
          if (open.event.onset + open.event.duration == onset) {
            open.event.duration += rn.duration;
            open.event.accent |= rn.accent;
            open.event.staccato |= rn.staccato;
            open.event.fermata |= rn.fermata;
            if (!rn.tie_start) open_ties.erase(it);
            continue;
          }
          open_ties.erase(it);
        }
      }
      NoteRec rec;
      rec.event.onset = onset;
      rec.event.duration = rn.duration;
      rec.event.pitch = rn.pitch;
      rec.event.accent = rn.accent;
      rec.event.staccato = rn.staccato;
      rec.event.fermata = rn.fermata;
      rec.voice = rn.voice;
      rec.tie_start = rn.tie_start;
      notes.push_back(rec);
      if (rn.tie_start) open_ties[{rn.voice, rn.pitch}] = notes.size() - 1;
      if (rn.marcato) {
        raw.markings.push_back(RawMarking{rn.measure, rn.local_onset,
                                          RawMarking::Kind::Impulse, DynamicLevel::mf,
                                          ImpulseKind::marcato, WedgeKind::crescendo, 1});
      }
    }

    std::vector<Marking> markings;
    std::map<int, std::pair<Beat, WedgeKind>> open_wedges;  // number -> (start, kind)
    std::map<int, int> open_wedge_measure;
    std::vector<std::pair<Beat, WedgeKind>> words_wedges;
    for (const auto& rm : raw.markings) {
      const Beat onset = measure_start[rm.measure] + rm.local_onset;
      switch (rm.kind) {
        case RawMarking::Kind::Constant:
          markings.push_back(Marking::constant(onset, rm.level));
          break;
        case RawMarking::Kind::Impulse:
          markings.push_back(Marking::make_impulse(onset, rm.impulse));
          break;
        case RawMarking::Kind::WedgeStart:
          open_wedges[rm.wedge_number] = {onset, rm.wedge};
          open_wedge_measure[rm.wedge_number] = rm.measure;
          break;
        case RawMarking::Kind::WedgeStop: {
          const auto it = open_wedges.find(rm.wedge_number);
          if (it == open_wedges.end()) {
            warn(opts, "part '" + raw.name + "': wedge stop without start skipped");
            break;
          }
          if (it->second.first < onset)
            markings.push_back(Marking::make_wedge(it->second.first, onset, it->second.second));
          else
            warn(opts, "part '" + raw.name + "': empty wedge skipped");
          open_wedges.erase(it);
          break;
        }
        case RawMarking::Kind::WordsWedge:
          words_wedges.emplace_back(onset, rm.wedge);
          break;
      }
    }
    if (!open_wedges.empty()) {
      const int number = open_wedges.begin()->first;
      throw StructuralError("part '" + raw.name + "': wedge opened in measure " +
                            raw_measures[open_wedge_measure[number]].number +
                            " is never closed");
    }

    // Textual cresc./dim. extend to the next constant dynamic (or part end).
    std::sort(markings.begin(), markings.end(),
              [](const Marking& a, const Marking& b) { return a.onset < b.onset; });
    Beat part_end(0);
    for (const auto& n : notes)
      if (n.event.onset + n.event.duration > part_end) part_end = n.event.onset + n.event.duration;
    for (const auto& [start, kind] : words_wedges) {
      Beat end = part_end;
      for (const auto& m : markings) {
        if (m.type == Marking::Type::ConstantDynamic && m.onset > start) {
          end = m.onset;
          break;
        }
      }
      if (start < end) markings.push_back(Marking::make_wedge(start, end, kind));
      else warn(opts, "part '" + raw.name + "': textual wedge with empty extent skipped");
    }
    std::stable_sort(markings.begin(), markings.end(),
                     [](const Marking& a, const Marking& b) { return a.onset < b.onset; });

    // Time signatures with the pickup-aware grid anchor.
    std::vector<TimeSignature> signatures;
    const std::vector<RawTime>& times = raw.times.empty() ? score_times : raw.times;
    for (const auto& t : times) {
      TimeSignature sig;
      sig.anchor = t.measure == 0 ? grid_anchor : measure_start[t.measure];
      sig.numerator = t.numerator;
      sig.denominator = t.denominator;
      signatures.push_back(sig);
    }

    // Split voices into separate Parts, all with the same instrument.
    std::vector<int> voices;
    for (const auto& n : notes)
      if (std::find(voices.begin(), voices.end(), n.voice) == voices.end())
        voices.push_back(n.voice);
    std::sort(voices.begin(), voices.end());
    if (voices.empty()) {
      warn(opts, "part '" + raw.name + "' has no notes; skipped");
      continue;
    }

    const CanonicalInstrument instrument = instruments.resolve(raw.name);
    for (const int voice : voices) {
      Part part;
      part.instrument = instrument;
      part.raw_name = raw.name;
      part.transposition = raw.transposition;
      part.markings = markings;
      part.time_signatures = signatures;
      for (const auto& n : notes)
        if (n.voice == voice) part.notes.push_back(n.event);
      std::stable_sort(part.notes.begin(), part.notes.end(),
                       [](const NoteEvent& a, const NoteEvent& b) { return a.onset < b.onset; });
      score.parts.push_back(std::move(part));
    }
  }

  score.validate();
  return score;
}

}  // namespace forte
