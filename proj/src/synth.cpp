#include "forte/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "forte/rng.hpp"
#include "forte/targets.hpp"
#include "forte/textio.hpp"

namespace forte {

namespace {

// Synthetic features live in per-feature pseudo classes so descriptor keys
// stay unique and labels stay inside the catalogue grammar.
PieceMatrix dense_piece(const std::string& id, const Eigen::MatrixXd& values) {
  PieceMatrix piece;
  piece.piece_id = id;
  for (Eigen::Index c = 0; c < values.cols(); ++c)
    piece.columns.push_back(
        BasisDescriptor{"synth" + std::to_string(c), "pitch", FusionPolicy::Mean});
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    piece.onsets.emplace_back(r);
    std::vector<std::pair<int, double>> row;
    for (Eigen::Index c = 0; c < values.cols(); ++c)
      if (values(r, c) != 0.0) row.emplace_back(static_cast<int>(c), values(r, c));
    piece.rows.push_back(std::move(row));
  }
  return piece;
}

std::string piece_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "piece%02d", index);
  return buf;
}

}  // namespace

SynthDataset synth_linear(int pieces, int rows_per_piece, int k, double sigma,
                          std::uint64_t seed) {
  Rng rng(seed);
  SynthDataset out;
  Eigen::VectorXd w(k);
  for (int j = 0; j < k; ++j) w(j) = rng.uniform(-1.0, 1.0);
  // Var(x_j) = 1/3 for uniform[-1,1]; scale w so Var(Phi w) = 1.
  w *= std::sqrt(3.0 / w.squaredNorm());
  out.true_w = w;

  for (int p = 0; p < pieces; ++p) {
    Eigen::MatrixXd X(rows_per_piece, k);
    for (int r = 0; r < rows_per_piece; ++r)
      for (int c = 0; c < k; ++c) X(r, c) = rng.uniform(-1.0, 1.0);
    std::vector<double> raw(rows_per_piece);
    for (int r = 0; r < rows_per_piece; ++r)
      raw[r] = X.row(r).dot(w) + sigma * rng.normal();
    out.corpus.push_back({dense_piece(piece_name(p), X), standardize(raw)});
  }
  return out;
}

SynthDataset synth_interaction(int pieces, int rows_per_piece, std::uint64_t seed) {
  Rng rng(seed);
  SynthDataset out;
  for (int p = 0; p < pieces; ++p) {
    Eigen::MatrixXd X(rows_per_piece, 2);
    std::vector<double> raw(rows_per_piece);
    for (int r = 0; r < rows_per_piece; ++r) {
      X(r, 0) = rng.uniform(-1.0, 1.0);
      X(r, 1) = rng.uniform(-1.0, 1.0);
      raw[r] = X(r, 0) * X(r, 1);
    }
    out.corpus.push_back({dense_piece(piece_name(p), X), standardize(raw)});
  }
  return out;
}

SynthDataset synth_lagged(int pieces, int rows_per_piece, std::uint64_t seed) {
  Rng rng(seed);
  SynthDataset out;
  for (int p = 0; p < pieces; ++p) {
    Eigen::MatrixXd X(rows_per_piece, 2);
    std::vector<double> raw(rows_per_piece);
    for (int r = 0; r < rows_per_piece; ++r) {
      X(r, 0) = rng.uniform(-1.0, 1.0);
      X(r, 1) = rng.uniform(-1.0, 1.0);
      raw[r] = r > 0 ? X(r - 1, 0) : 0.0;
    }
    out.corpus.push_back({dense_piece(piece_name(p), X), standardize(raw)});
  }
  return out;
}

// --- score-level corpus ------------------------------------------------------

namespace {

struct DynamicEvent {
  int measure;        // event measure
  enum class Kind { Constant, WedgeStart } kind;
  const char* level;  // Constant
  bool crescendo;     // WedgeStart
  int wedge_measures; // WedgeStart: extent
};

const char* kInstrumentPool[] = {"Violin 1", "Violine 2", "Viola",   "Violoncello",
                                 "Flauto",   "Oboe",      "Klarinette", "Fagott",
                                 "Corno",    "Tromba"};
const int kInstrumentBase[] = {67, 62, 55, 48, 72, 69, 63, 46, 52, 60};

std::string pitch_xml(int midi) {
  static const char* steps[] = {"C", "C", "D", "D", "E", "F", "F", "G", "G", "A", "A", "B"};
  static const int alters[] = {0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 1, 0};
  const int pc = midi % 12;
  const int octave = midi / 12 - 1;
  std::string out = "<pitch><step>" + std::string(steps[pc]) + "</step>";
  if (alters[pc]) out += "<alter>1</alter>";
  out += "<octave>" + std::to_string(octave) + "</octave></pitch>";
  return out;
}

struct GeneratedPiece {
  std::string xml;
  int total_beats = 0;
  std::vector<double> intensity;  // per beat, from the dynamic plan
};

GeneratedPiece generate_score(std::uint64_t seed, int n_parts, int n_measures) {
  Rng rng(seed);
  constexpr int kDivisions = 2;  // eighth-note grid
  const int beats_per_measure = 4;
  const int total_beats = n_measures * beats_per_measure;

  // Piece-wide dynamic plan: alternating constants with occasional wedges.
  std::vector<DynamicEvent> plan;
  plan.push_back({0, DynamicEvent::Kind::Constant, "p", false, 0});
  int at = 2 + static_cast<int>(rng.integer(3));
  bool loud = false;
  while (at < n_measures - 2) {
    if (rng.uniform() < 0.4) {
      const int extent = 1 + static_cast<int>(rng.integer(2));
      plan.push_back({at, DynamicEvent::Kind::WedgeStart, "", !loud, extent});
      at += extent;
    }
    loud = !loud;
    plan.push_back({at, DynamicEvent::Kind::Constant, loud ? "f" : "p", false, 0});
    at += 3 + static_cast<int>(rng.integer(4));
  }

  // Per-beat intensity implied by the plan (constants step, wedges ramp).
  std::vector<double> intensity(total_beats + 1, 0.0);
  {
    double level = -1.0;
    std::size_t next = 0;
    double ramp_to = level, ramp_end = -1.0, ramp_start = -1.0, ramp_from = level;
    for (int beat = 0; beat <= total_beats; ++beat) {
      while (next < plan.size() && plan[next].measure * beats_per_measure <= beat) {
        const DynamicEvent& e = plan[next];
        if (e.kind == DynamicEvent::Kind::Constant) {
          level = std::string(e.level) == "f" ? 1.0 : -1.0;
          ramp_end = -1.0;
        } else {
          ramp_from = level;
          ramp_to = e.crescendo ? 1.0 : -1.0;
          ramp_start = e.measure * beats_per_measure;
          ramp_end = ramp_start + e.wedge_measures * beats_per_measure;
        }
        ++next;
      }
      if (ramp_end >= 0.0 && beat <= ramp_end) {
        const double t = (beat - ramp_start) / (ramp_end - ramp_start);
        intensity[beat] = ramp_from + t * (ramp_to - ramp_from);
        if (beat == static_cast<int>(ramp_end)) level = ramp_to;
      } else {
        intensity[beat] = level;
      }
    }
  }

  std::string xml;
  xml += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  xml += "<score-partwise version=\"3.1\">\n<part-list>\n";
  std::vector<int> chosen;
  for (int p = 0; p < n_parts; ++p) {
    int pick;
    do {
      pick = static_cast<int>(rng.integer(std::size(kInstrumentPool)));
    } while (std::find(chosen.begin(), chosen.end(), pick) != chosen.end());
    chosen.push_back(pick);
    xml += "  <score-part id=\"P" + std::to_string(p + 1) + "\"><part-name>" +
           kInstrumentPool[pick] + "</part-name></score-part>\n";
  }
  xml += "</part-list>\n";

  for (int p = 0; p < n_parts; ++p) {
    xml += "<part id=\"P" + std::to_string(p + 1) + "\">\n";
    int pitch = kInstrumentBase[chosen[p]];
    std::size_t next_event = 0;
    for (int m = 0; m < n_measures; ++m) {
      xml += " <measure number=\"" + std::to_string(m + 1) + "\">\n";
      if (m == 0) {
        xml += "  <attributes><divisions>" + std::to_string(kDivisions) +
               "</divisions><time><beats>4</beats><beat-type>4</beat-type></time></attributes>\n";
      }
      while (next_event < plan.size() && plan[next_event].measure == m) {
        const DynamicEvent& e = plan[next_event];
        if (e.kind == DynamicEvent::Kind::Constant) {
          xml += std::string("  <direction><direction-type><dynamics><") + e.level + "/>" +
                 "</dynamics></direction-type></direction>\n";
        } else {
          xml += std::string("  <direction><direction-type><wedge type=\"") +
                 (e.crescendo ? "crescendo" : "diminuendo") + "\"/></direction-type></direction>\n";
        }
        ++next_event;
      }
      // Wedge stops land at the start of the measure after the extent.
      for (std::size_t i = 0; i < plan.size(); ++i) {
        if (plan[i].kind == DynamicEvent::Kind::WedgeStart &&
            plan[i].measure + plan[i].wedge_measures == m) {
          xml += "  <direction><direction-type><wedge type=\"stop\"/></direction-type>"
                 "</direction>\n";
        }
      }

      int pos = 0;  // in divisions, measure length = 4 * kDivisions
      const int measure_divs = beats_per_measure * kDivisions;
      while (pos < measure_divs) {
        int dur = 1 + static_cast<int>(rng.integer(4));  // 1..4 divisions
        dur = std::min(dur, measure_divs - pos);
        if (rng.uniform() < 0.18) {
          xml += "  <note><rest/><duration>" + std::to_string(dur) + "</duration></note>\n";
        } else {
          pitch += static_cast<int>(rng.integer(9)) - 4;
          pitch = std::clamp(pitch, 36, 96);
          xml += "  <note>" + pitch_xml(pitch) + "<duration>" + std::to_string(dur) +
                 "</duration>";
          const bool staccato = rng.uniform() < 0.10;
          const bool accent = rng.uniform() < 0.06;
          const bool fermata = m == n_measures - 1 && pos + dur >= measure_divs;
          if (staccato || accent || fermata) {
            xml += "<notations>";
            if (fermata) xml += "<fermata/>";
            if (staccato || accent) {
              xml += "<articulations>";
              if (staccato) xml += "<staccato/>";
              if (accent) xml += "<accent/>";
              xml += "</articulations>";
            }
            xml += "</notations>";
          }
          xml += "</note>\n";
        }
        pos += dur;
      }
      xml += " </measure>\n";
    }
    xml += "</part>\n";
  }
  xml += "</score-partwise>\n";

  GeneratedPiece out;
  out.xml = std::move(xml);
  out.total_beats = total_beats;
  out.intensity = std::move(intensity);
  return out;
}

}  // namespace

std::string synthetic_musicxml(std::uint64_t seed, int n_parts, int n_measures) {
  return generate_score(seed, n_parts, n_measures).xml;
}

std::string write_synthetic_score_corpus(const std::string& out_dir, int pieces,
                                         std::uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  nlohmann::ordered_json manifest;
  manifest["pieces"] = nlohmann::ordered_json::array();

  for (int p = 0; p < pieces; ++p) {
    Rng rng(seed + 1000ULL * static_cast<std::uint64_t>(p));
    const int n_parts = 2 + static_cast<int>(rng.integer(3));
    const int n_measures = 12 + static_cast<int>(rng.integer(8));
    const GeneratedPiece piece =
        generate_score(seed + 1000ULL * static_cast<std::uint64_t>(p) + 1, n_parts, n_measures);

    // Alignment: mildly varying tempo around 0.5 s/beat, one entry per beat.
    std::vector<Alignment::Entry> entries;
    double seconds = 0.0;
    for (int beat = 0; beat <= piece.total_beats; ++beat) {
      entries.push_back({Beat(beat), seconds});
      seconds += 0.5 * (1.0 + 0.08 * std::sin(beat / 9.0)) + 0.01 * rng.uniform();
    }
    const Alignment alignment(entries);

    // Loudness: the dynamic plan's intensity plus density-ish wobble/noise.
    const double duration = entries.back().seconds + 0.5;
    std::vector<double> lufs;
    for (double t = 0.0; t <= duration; t += 0.1) {
      // invert the alignment by linear scan (generator-side only)
      double beat = 0.0;
      for (std::size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].seconds >= t) {
          const double f = (t - entries[i - 1].seconds) /
                           (entries[i].seconds - entries[i - 1].seconds);
          beat = entries[i - 1].beat.to_double() +
                 f * (entries[i].beat - entries[i - 1].beat).to_double();
          break;
        }
        beat = entries.back().beat.to_double();
      }
      const int bi = std::clamp(static_cast<int>(beat), 0, piece.total_beats);
      const double value = -24.0 + 5.0 * piece.intensity[bi] + 1.2 * std::sin(beat / 4.0) +
                           0.4 * rng.uniform(-1.0, 1.0);
      lufs.push_back(value);
    }
    const LoudnessCurve curve(0.0, 0.1, lufs);

    const std::string id = piece_name(p);
    const std::string score_file = id + ".xml";
    const std::string align_file = id + "_align.csv";
    const std::string loud_file = id + "_loud.csv";
    write_file_atomic((fs::path(out_dir) / score_file).string(), piece.xml);
    write_file_atomic((fs::path(out_dir) / align_file).string(), alignment.to_csv());
    write_file_atomic((fs::path(out_dir) / loud_file).string(), curve.to_csv());

    manifest["pieces"].push_back(nlohmann::ordered_json{{"id", id},
                                                        {"score", score_file},
                                                        {"alignment", align_file},
                                                        {"loudness", loud_file},
                                                        {"composer", "generated"},
                                                        {"tags", {"synthetic"}}});
  }

  const std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();
  write_file_atomic(manifest_path, manifest.dump(1) + "\n");
  return manifest_path;
}

}  // namespace forte
