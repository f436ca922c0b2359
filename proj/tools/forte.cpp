// forte: basis-function loudness modeling for ensemble scores.
//
// Subcommands: extract (score -> sparse piece matrix), loudness (WAV -> EBU
// R128 momentary curve), evaluate (leave-one-out experiment over a corpus
// manifest), synth (synthetic corpora for experiments and tests).

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "forte/corpus.hpp"
#include "forte/errors.hpp"
#include "forte/eval.hpp"
#include "forte/loudness.hpp"
#include "forte/musicxml.hpp"
#include "forte/repeats.hpp"
#include "forte/synth.hpp"
#include "forte/textio.hpp"
#include "forte/wav.hpp"

namespace fs = std::filesystem;
using namespace forte;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNumerical = 2;

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

struct ExtractArgs {
  std::string score_path;
  std::string out_dir = ".";
  std::string piece_id;
  std::string dump_score;
  std::string dump_parts_dir;
  std::string policy_overrides;
};

int run_extract(const ExtractArgs& args) {
  std::vector<std::string> warnings;
  const std::string bytes = read_file(args.score_path);
  ParseOptions opts;
  opts.piece_id = args.piece_id.empty() ? fs::path(args.score_path).stem().string()
                                        : args.piece_id;
  opts.warnings = &warnings;

  const Score parsed = parse_score(bytes, opts);
  const Score unfolded = unfold_repeats(parsed);
  if (!args.dump_score.empty()) {
    const fs::path parent = fs::path(args.dump_score).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    write_file_atomic(args.dump_score, score_to_json(unfolded));
  }

  if (!args.dump_parts_dir.empty()) {
    fs::create_directories(args.dump_parts_dir);
    for (std::size_t i = 0; i < unfolded.parts.size(); ++i) {
      const auto matrix = extract_part_bases(unfolded.parts[i], &warnings);
      const std::string name = "part" + std::to_string(i) + "_" +
                               matrix.instrument_class + ".csv";
      write_file_atomic((fs::path(args.dump_parts_dir) / name).string(),
                        part_matrix_to_csv(matrix));
    }
  }

  const PieceMatrix matrix =
      build_piece_matrix(unfolded, parse_policy_overrides(args.policy_overrides), &warnings);
  fs::create_directories(args.out_dir);
  const fs::path stem = fs::path(args.out_dir) / opts.piece_id;
  write_file_atomic(stem.string() + ".triplet", piece_matrix_to_triplet(matrix));
  write_file_atomic(stem.string() + ".sidecar.json", piece_matrix_sidecar_json(matrix));
  print_warnings(warnings);
  std::cout << opts.piece_id << ": " << matrix.row_count() << " onsets x "
            << matrix.column_count() << " basis functions -> " << stem.string()
            << ".triplet\n";
  return kExitOk;
}

struct LoudnessArgs {
  std::string wav_path;
  std::string out_path;
};

int run_loudness(const LoudnessArgs& args) {
  const AudioBuffer audio = read_wav(read_file(args.wav_path));
  const LoudnessCurve curve = r128_momentary(audio);
  write_file_atomic(args.out_path, curve.to_csv());
  std::cout << args.out_path << ": " << curve.values().size() << " momentary samples\n";
  return kExitOk;
}

struct EvaluateArgs {
  std::string manifest_path;
  std::string out_dir = "report";
  std::string variant = "all";
  std::uint64_t seed = 1;
  int hidden = 20;
  std::string delta_beats = "0.1";
  int validation_pieces = 2;
  std::string policy_overrides;
  int jobs = 1;
  bool raw_metrics = false;
  bool save_models = false;
  double learning_rate = 0.01;
  int max_epochs = 2000;
  int patience = 20;
  double clip_norm = 5.0;
  double ridge = 1e-3;
};

nlohmann::ordered_json config_echo(const EvaluateArgs& args) {
  nlohmann::ordered_json j;
  j["manifest"] = args.manifest_path;
  j["variant"] = args.variant;
  j["seed"] = args.seed;
  j["hidden"] = args.hidden;
  j["delta_beats"] = args.delta_beats;
  j["validation_pieces"] = args.validation_pieces;
  j["policy_overrides"] = args.policy_overrides;
  j["jobs"] = args.jobs;
  j["raw_metrics"] = args.raw_metrics;
  j["learning_rate"] = args.learning_rate;
  j["max_epochs"] = args.max_epochs;
  j["patience"] = args.patience;
  j["clip_norm"] = args.clip_norm;
  j["ridge"] = args.ridge;
  return j;
}

int run_evaluate(const EvaluateArgs& args) {
  const CorpusManifest manifest = CorpusManifest::load(args.manifest_path);
  const auto problems = manifest.validate();
  if (!problems.empty()) {
    std::cerr << "manifest validation failed:\n";
    for (const auto& p : problems) std::cerr << "  - " << p << "\n";
    return kExitInput;
  }

  ExperimentConfig config;
  config.seed = args.seed;
  config.jobs = args.jobs;
  config.raw_metrics = args.raw_metrics;
  config.train.hidden = args.hidden;
  config.train.validation_pieces = args.validation_pieces;
  config.train.learning_rate = args.learning_rate;
  config.train.max_epochs = args.max_epochs;
  config.train.patience = args.patience;
  config.train.clip_norm = args.clip_norm;
  config.train.ridge = args.ridge;
  config.train.validate();
  if (args.variant == "all") {
    config.variants = {ModelVariant::Linear, ModelVariant::FeedForward,
                       ModelVariant::Recurrent};
  } else {
    const auto variant = model_variant_from_string(args.variant);
    if (!variant) throw ConfigError("unknown variant '" + args.variant + "'");
    config.variants = {*variant};
  }

  PieceLoadOptions load_options;
  load_options.delta = parse_beat_string(args.delta_beats);
  load_options.overrides = parse_policy_overrides(args.policy_overrides);
  load_options.cache_dir = (fs::path(args.out_dir) / "cache").string();
  fs::create_directories(args.out_dir);

  // Per-piece extraction, parallel up to --jobs; warnings kept in piece
  // order so output is deterministic.
  std::vector<CorpusPiece> corpus(manifest.pieces.size());
  std::vector<std::vector<std::string>> piece_warnings(manifest.pieces.size());
  std::vector<std::string> piece_errors(manifest.pieces.size());
  {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= manifest.pieces.size()) break;
        PieceLoadOptions local = load_options;
        local.warnings = &piece_warnings[i];
        try {
          corpus[i] = load_piece(manifest, manifest.pieces[i], local);
        } catch (const std::exception& e) {
          piece_errors[i] = e.what();
        }
      }
    };
    const int jobs = std::max(1, std::min<int>(args.jobs, manifest.pieces.size()));
    std::vector<std::thread> threads;
    for (int t = 1; t < jobs; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
  }
  bool load_failed = false;
  for (std::size_t i = 0; i < manifest.pieces.size(); ++i) {
    print_warnings(piece_warnings[i]);
    if (!piece_errors[i].empty()) {
      std::cerr << "piece '" << manifest.pieces[i].id << "': " << piece_errors[i] << "\n";
      load_failed = true;
    }
  }
  if (load_failed) return kExitInput;

  const ExperimentResult result = run_experiment(corpus, config);

  write_file_atomic((fs::path(args.out_dir) / "config.json").string(),
                    config_echo(args).dump(1) + "\n");
  // The text report carries the full config echo for provenance.
  write_file_atomic((fs::path(args.out_dir) / "report.txt").string(),
                    report_table(result, config) + "\nconfig: " + config_echo(args).dump() +
                        "\n");
  write_file_atomic((fs::path(args.out_dir) / "report.csv").string(),
                    report_csv(result, args.raw_metrics));
  {
    std::string singular;
    for (const auto& key : result.singular_bases) singular += key + "\n";
    write_file_atomic((fs::path(args.out_dir) / "singular_bases.txt").string(), singular);
  }
  fs::create_directories(fs::path(args.out_dir) / "curves");
  for (const auto& curve : result.curves) {
    if (curve.onsets.empty()) continue;  // failed fold
    const std::string stem =
        (fs::path(args.out_dir) / "curves" / (curve.piece_id + "_" + to_string(curve.variant)))
            .string();
    write_file_atomic(stem + ".csv", curve_csv(curve));
    write_file_atomic(stem + ".svg", curve_svg(curve));
  }
  if (args.save_models) {
    fs::create_directories(fs::path(args.out_dir) / "models");
    for (std::size_t i = 0; i < result.folds.size(); ++i) {
      if (result.folds[i].failed) continue;
      const std::string name = result.folds[i].test_piece + "_" +
                               std::string(to_string(result.folds[i].variant)) + ".json";
      write_file_atomic((fs::path(args.out_dir) / "models" / name).string(),
                        model_to_json(result.fold_params[i], config.train,
                                      result.dataset_fingerprint));
    }
  }

  std::cout << report_table(result, config);

  bool any_numerical_failure = false;
  for (const auto& fold : result.folds)
    if (fold.failed) any_numerical_failure = true;
  return any_numerical_failure ? kExitNumerical : kExitOk;
}

struct SynthArgs {
  std::string kind = "manifest";
  std::string out_dir = "synth";
  int pieces = 6;
  int rows = 256;
  int features = 8;
  double sigma = 0.1;
  std::uint64_t seed = 1;
};

int run_synth(const SynthArgs& args) {
  if (args.kind == "manifest") {
    const std::string path = write_synthetic_score_corpus(args.out_dir, args.pieces, args.seed);
    std::cout << path << "\n";
    return kExitOk;
  }

  SynthDataset dataset;
  if (args.kind == "linear") {
    dataset = synth_linear(args.pieces, args.rows, args.features, args.sigma, args.seed);
  } else if (args.kind == "interaction") {
    dataset = synth_interaction(args.pieces, args.rows, args.seed);
  } else if (args.kind == "lagged") {
    dataset = synth_lagged(args.pieces, args.rows, args.seed);
  } else {
    throw ConfigError("unknown synth kind '" + args.kind + "'");
  }

  fs::create_directories(args.out_dir);
  nlohmann::ordered_json manifest;
  manifest["pieces"] = nlohmann::ordered_json::array();
  for (const auto& piece : dataset.corpus) {
    const std::string& id = piece.matrix.piece_id;
    write_file_atomic((fs::path(args.out_dir) / (id + ".triplet")).string(),
                      piece_matrix_to_triplet(piece.matrix));
    write_file_atomic((fs::path(args.out_dir) / (id + ".sidecar.json")).string(),
                      piece_matrix_sidecar_json(piece.matrix));
    std::string targets;
    for (const double v : piece.targets.values) targets += format_double(v) + "\n";
    write_file_atomic((fs::path(args.out_dir) / (id + ".targets")).string(), targets);
    manifest["pieces"].push_back(
        nlohmann::ordered_json{{"id", id},
                               {"matrix", id + ".triplet"},
                               {"descriptors", id + ".sidecar.json"},
                               {"targets", id + ".targets"}});
  }
  const std::string manifest_path = (fs::path(args.out_dir) / "manifest.json").string();
  write_file_atomic(manifest_path, manifest.dump(1) + "\n");
  std::cout << manifest_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"basis-function loudness modeling for ensemble scores"};
  app.require_subcommand(1);

  ExtractArgs extract_args;
  auto* extract = app.add_subcommand("extract", "score file -> sparse piece matrix");
  extract->add_option("score", extract_args.score_path, "MusicXML (.xml or .mxl) score")
      ->required();
  extract->add_option("--out", extract_args.out_dir, "output directory");
  extract->add_option("--id", extract_args.piece_id, "piece id (default: file stem)");
  extract->add_option("--dump-score", extract_args.dump_score,
                      "write the parsed score as canonical JSON");
  extract->add_option("--dump-parts", extract_args.dump_parts_dir,
                      "write per-part basis matrices as sparse CSV");
  extract->add_option("--policy-overrides", extract_args.policy_overrides,
                      "fusion overrides, e.g. vertical=max,duration=sum");

  LoudnessArgs loudness_args;
  auto* loudness = app.add_subcommand("loudness", "WAV -> EBU R128 momentary loudness CSV");
  loudness->add_option("wav", loudness_args.wav_path, "input WAV file")->required();
  loudness->add_option("--out", loudness_args.out_path, "output CSV path")->required();

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "leave-one-out experiment over a manifest");
  evaluate->add_option("manifest", eval_args.manifest_path, "corpus manifest JSON")->required();
  evaluate->add_option("--out", eval_args.out_dir, "report output directory");
  evaluate->add_option("--variant", eval_args.variant, "lin|ff|rnn|all");
  evaluate->add_option("--seed", eval_args.seed, "experiment seed");
  evaluate->add_option("--hidden", eval_args.hidden, "hidden units");
  evaluate->add_option("--delta-beats", eval_args.delta_beats,
                       "target sampling offset after each onset");
  evaluate->add_option("--validation-pieces", eval_args.validation_pieces,
                       "pieces held out for early stopping");
  evaluate->add_option("--policy-overrides", eval_args.policy_overrides,
                       "fusion overrides, e.g. vertical=max");
  evaluate->add_option("--jobs", eval_args.jobs, "parallel folds/extractions");
  evaluate->add_flag("--raw-metrics", eval_args.raw_metrics, "also report raw-LU MSE");
  evaluate->add_flag("--save-models", eval_args.save_models,
                     "write each fold's trained model as JSON");
  evaluate->add_option("--learning-rate", eval_args.learning_rate, "gradient descent step");
  evaluate->add_option("--max-epochs", eval_args.max_epochs, "training epoch cap");
  evaluate->add_option("--patience", eval_args.patience, "early stopping patience");
  evaluate->add_option("--clip-norm", eval_args.clip_norm, "gradient norm clip");
  evaluate->add_option("--ridge", eval_args.ridge, "ridge lambda for the linear variant");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate synthetic corpora");
  synth->add_option("--kind", synth_args.kind, "manifest|linear|interaction|lagged");
  synth->add_option("--out", synth_args.out_dir, "output directory");
  synth->add_option("--pieces", synth_args.pieces, "number of pieces");
  synth->add_option("--rows", synth_args.rows, "rows per piece (matrix kinds)");
  synth->add_option("--features", synth_args.features, "features (linear kind)");
  synth->add_option("--sigma", synth_args.sigma, "noise sigma (linear kind)");
  synth->add_option("--seed", synth_args.seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (extract->parsed()) return run_extract(extract_args);
    if (loudness->parsed()) return run_loudness(loudness_args);
    if (evaluate->parsed()) return run_evaluate(eval_args);
    if (synth->parsed()) return run_synth(synth_args);
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const TrainingFault& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
