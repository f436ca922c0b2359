#include "forte/corpus.hpp"

#include <filesystem>
#include <set>

#include <nlohmann/json.hpp>

#include "forte/errors.hpp"
#include "forte/loudness.hpp"
#include "forte/musicxml.hpp"
#include "forte/repeats.hpp"
#include "forte/textio.hpp"
#include "forte/wav.hpp"

namespace forte {

namespace fs = std::filesystem;

CorpusManifest CorpusManifest::load(const std::string& path) {
  CorpusManifest manifest;
  manifest.base_dir = fs::path(path).parent_path().string();

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
    for (const auto& p : j.at("pieces")) {
      ManifestPiece piece;
      piece.id = p.at("id").get<std::string>();
      piece.score = p.value("score", "");
      piece.alignment = p.value("alignment", "");
      piece.loudness = p.value("loudness", "");
      piece.audio = p.value("audio", "");
      piece.matrix = p.value("matrix", "");
      piece.descriptors = p.value("descriptors", "");
      piece.targets = p.value("targets", "");
      piece.composer = p.value("composer", "");
      if (p.contains("tags"))
        for (const auto& t : p.at("tags")) piece.tags.push_back(t.get<std::string>());
      manifest.pieces.push_back(std::move(piece));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest '" + path + "': " + e.what());
  }
  return manifest;
}

std::string CorpusManifest::resolve(const std::string& relative) const {
  const fs::path p(relative);
  if (p.is_absolute() || base_dir.empty()) return relative;
  return (fs::path(base_dir) / p).string();
}

std::vector<std::string> CorpusManifest::validate() const {
  std::vector<std::string> problems;
  std::set<std::string> seen;
  for (const auto& piece : pieces) {
    if (piece.id.empty()) problems.push_back("piece with empty id");
    if (!seen.insert(piece.id).second)
      problems.push_back("duplicate piece id '" + piece.id + "'");

    auto require = [&](const std::string& rel, const char* what) {
      if (rel.empty()) {
        problems.push_back("piece '" + piece.id + "': missing " + what + " path");
      } else if (!fs::exists(resolve(rel))) {
        problems.push_back("piece '" + piece.id + "': " + what + " file not found: " +
                           resolve(rel));
      }
    };

    if (piece.precomputed()) {
      require(piece.matrix, "matrix");
      require(piece.descriptors, "descriptors");
      require(piece.targets, "targets");
    } else {
      require(piece.score, "score");
      require(piece.alignment, "alignment");
      if (piece.loudness.empty() && piece.audio.empty())
        problems.push_back("piece '" + piece.id + "': needs a loudness or audio path");
      else if (!piece.loudness.empty())
        require(piece.loudness, "loudness");
      else
        require(piece.audio, "audio");
    }
  }
  if (pieces.empty()) problems.push_back("manifest lists no pieces");
  return problems;
}

namespace {

std::vector<double> read_targets_file(const std::string& path) {
  std::vector<double> values;
  std::size_t lineno = 0;
  for (const auto& line : split(read_file(path), '\n')) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    try {
      values.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw FormatError("targets file " + path + " line " + std::to_string(lineno) + ": '" +
                        line + "'");
    }
  }
  return values;
}

std::string overrides_fingerprint(const PolicyOverrides& overrides) {
  std::string s;
  for (const auto& [group, policy] : overrides) s += group + "=" + to_string(policy) + ";";
  return s;
}

PieceMatrix extract_matrix(const CorpusManifest& manifest, const ManifestPiece& piece,
                           const PieceLoadOptions& options) {
  const std::string score_bytes = read_file(manifest.resolve(piece.score));

  std::string cache_stem;
  if (!options.cache_dir.empty()) {
    std::uint64_t h = fnv1a64("forte-extract-v1");
    h = fnv1a64(score_bytes, h);
    h = fnv1a64(piece.id, h);
    h = fnv1a64(overrides_fingerprint(options.overrides), h);
    cache_stem = (fs::path(options.cache_dir) / to_hex(h)).string();
    if (fs::exists(cache_stem + ".triplet") && fs::exists(cache_stem + ".sidecar.json")) {
      return piece_matrix_from_files(read_file(cache_stem + ".triplet"),
                                     read_file(cache_stem + ".sidecar.json"));
    }
  }

  ParseOptions popts;
  popts.piece_id = piece.id;
  popts.warnings = options.warnings;
  const Score parsed = parse_score(score_bytes, popts);
  const Score unfolded = unfold_repeats(parsed);
  PieceMatrix matrix = build_piece_matrix(unfolded, options.overrides, options.warnings);

  if (!cache_stem.empty()) {
    fs::create_directories(options.cache_dir);
    write_file_atomic(cache_stem + ".triplet", piece_matrix_to_triplet(matrix));
    write_file_atomic(cache_stem + ".sidecar.json", piece_matrix_sidecar_json(matrix));
  }
  return matrix;
}

}  // namespace

CorpusPiece load_piece(const CorpusManifest& manifest, const ManifestPiece& piece,
                       const PieceLoadOptions& options) {
  CorpusPiece out;

  if (piece.precomputed()) {
    out.matrix = piece_matrix_from_files(read_file(manifest.resolve(piece.matrix)),
                                         read_file(manifest.resolve(piece.descriptors)));
    if (out.matrix.piece_id != piece.id)
      throw FormatError("piece '" + piece.id + "': matrix sidecar carries id '" +
                        out.matrix.piece_id + "'");
    out.targets = standardize(read_targets_file(manifest.resolve(piece.targets)));
    if (out.targets.values.size() != out.matrix.row_count())
      throw FormatError("piece '" + piece.id + "': " +
                        std::to_string(out.targets.values.size()) + " targets for " +
                        std::to_string(out.matrix.row_count()) + " matrix rows");
    return out;
  }

  out.matrix = extract_matrix(manifest, piece, options);

  const Alignment alignment = Alignment::from_csv(read_file(manifest.resolve(piece.alignment)));
  LoudnessCurve curve = !piece.loudness.empty()
                            ? LoudnessCurve::from_csv(read_file(manifest.resolve(piece.loudness)))
                            : r128_momentary(read_wav(read_file(manifest.resolve(piece.audio))));
  out.targets = build_targets(alignment, curve, out.matrix.onsets, options.delta);
  return out;
}

Beat parse_beat_string(const std::string& text) {
  if (text.empty()) throw ConfigError("empty beat value");
  const auto slash = text.find('/');
  try {
    if (slash != std::string::npos) {
      return Beat(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
    }
    const auto dot = text.find('.');
    if (dot == std::string::npos) return Beat(std::stoll(text));
    const std::string whole = text.substr(0, dot);
    const std::string frac = text.substr(dot + 1);
    if (frac.size() > 18) throw ConfigError("beat value has too many decimals: " + text);
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    const std::int64_t sign = !whole.empty() && whole[0] == '-' ? -1 : 1;
    const std::int64_t w = whole.empty() || whole == "-" ? 0 : std::stoll(whole);
    const std::int64_t f = frac.empty() ? 0 : std::stoll(frac);
    return Beat(w * den + sign * f, den);
  } catch (const std::invalid_argument&) {
    throw ConfigError("cannot parse beat value: '" + text + "'");
  } catch (const std::out_of_range&) {
    throw ConfigError("beat value out of range: '" + text + "'");
  }
}

PolicyOverrides parse_policy_overrides(const std::string& text) {
  PolicyOverrides overrides;
  if (text.empty()) return overrides;
  for (const auto& item : split(text, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw ConfigError("policy override must be group=policy: '" + item + "'");
    const std::string group = item.substr(0, eq);
    const auto policy = fusion_policy_from_string(item.substr(eq + 1));
    if (!policy) throw ConfigError("unknown fusion policy in override: '" + item + "'");
    static const std::set<std::string> kGroups = {"pitch",   "duration", "ioi",
                                                  "vertical", "metrical", "dyn.step",
                                                  "dyn.ant", "dyn.ramp", "impulse"};
    if (!kGroups.count(group))
      throw ConfigError("unknown basis group in override: '" + group + "'");
    overrides[group] = *policy;
  }
  return overrides;
}

}  // namespace forte
