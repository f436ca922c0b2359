#include "forte/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "forte/errors.hpp"
#include "forte/rng.hpp"
#include "forte/textio.hpp"

namespace forte {

double mse(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size() || y.size() < 2)
    throw ContractViolation("mse needs two equal-length vectors of size >= 2");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = yhat[i] - y[i];
    sum += d * d;
  }
  return sum / static_cast<double>(y.size());
}

double r2(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size() || y.size() < 2)
    throw ContractViolation("r2 needs two equal-length vectors of size >= 2");
  double mean = 0.0;
  for (const double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (yhat[i] - y[i]) * (yhat[i] - y[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (ss_tot == 0.0) throw DegenerateTargetError("r2 of a constant target vector");
  return 1.0 - ss_res / ss_tot;
}

double pearson(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size() || y.size() < 2)
    throw ContractViolation("pearson needs two equal-length vectors of size >= 2");
  const double n = static_cast<double>(y.size());
  double my = 0.0, mz = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    my += y[i];
    mz += yhat[i];
  }
  my /= n;
  mz /= n;
  double cov = 0.0, vy = 0.0, vz = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    cov += (y[i] - my) * (yhat[i] - mz);
    vy += (y[i] - my) * (y[i] - my);
    vz += (yhat[i] - mz) * (yhat[i] - mz);
  }
  if (vy == 0.0 || vz == 0.0)
    throw DegenerateTargetError("pearson correlation of a constant vector is undefined");
  return cov / std::sqrt(vy * vz);
}

FoldSpec loo_split(const std::vector<std::string>& piece_ids, const std::string& test_piece,
                   int n_validation, std::uint64_t seed) {
  if (n_validation < 0) throw ConfigError("validation piece count must be >= 0");
  if (static_cast<std::size_t>(n_validation) + 2 > piece_ids.size())
    throw ConfigError("need at least n_validation + 2 pieces, got " +
                      std::to_string(piece_ids.size()));
  if (std::find(piece_ids.begin(), piece_ids.end(), test_piece) == piece_ids.end())
    throw ConfigError("test piece '" + test_piece + "' is not in the corpus");

  FoldSpec fold;
  fold.test_piece = test_piece;
  std::vector<std::string> rest;
  for (const auto& id : piece_ids)
    if (id != test_piece) rest.push_back(id);
  std::sort(rest.begin(), rest.end());

  // Seeded Fisher-Yates, mixed with the test piece so folds differ.
  Rng rng(fnv1a64(test_piece, seed ^ 0x9e3779b97f4a7c15ULL));
  for (std::size_t i = rest.size(); i > 1; --i)
    std::swap(rest[i - 1], rest[rng.integer(i)]);

  fold.validation_pieces.assign(rest.begin(), rest.begin() + n_validation);
  fold.train_pieces.assign(rest.begin() + n_validation, rest.end());
  std::sort(fold.validation_pieces.begin(), fold.validation_pieces.end());
  std::sort(fold.train_pieces.begin(), fold.train_pieces.end());
  return fold;
}

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

struct FoldTask {
  std::string test_piece;
  ModelVariant variant;
};

}  // namespace

ExperimentResult run_experiment(const std::vector<CorpusPiece>& corpus,
                                const ExperimentConfig& config) {
  if (corpus.size() < static_cast<std::size_t>(config.train.validation_pieces) + 2)
    throw ConfigError("corpus too small for the requested validation split");
  for (const auto& piece : corpus)
    if (piece.matrix.row_count() != piece.targets.values.size())
      throw ContractViolation("piece '" + piece.matrix.piece_id +
                              "': target length != matrix rows");

  // Assemble Phi_S once; per-piece dense blocks carry the const column.
  std::vector<PieceMatrix> matrices;
  matrices.reserve(corpus.size());
  for (const auto& piece : corpus) matrices.push_back(piece.matrix);
  const DatasetMatrix dataset = assemble_dataset(std::move(matrices));

  std::map<std::string, TrainPiece> blocks;
  std::map<std::string, const CorpusPiece*> by_id;
  for (const auto& piece : corpus) by_id[piece.matrix.piece_id] = &piece;
  std::vector<std::string> ids;
  for (std::size_t p = 0; p < dataset.pieces.size(); ++p) {
    const std::string& id = dataset.pieces[p].piece_id;
    TrainPiece block;
    block.id = id;
    block.X = design_matrix(dataset, p, true);
    const auto& values = by_id.at(id)->targets.values;
    block.y = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                static_cast<Eigen::Index>(values.size()));
    blocks.emplace(id, std::move(block));
    ids.push_back(id);
  }

  ExperimentResult result;
  result.singular_bases = dataset.singular_bases;
  result.dataset_fingerprint = dataset.fingerprint();
  result.n_rows = dataset.total_rows();
  result.n_columns = dataset.columns.size();

  std::vector<FoldTask> tasks;
  for (const auto& id : ids)
    for (const ModelVariant variant : config.variants) tasks.push_back({id, variant});
  result.folds.resize(tasks.size());
  result.fold_params.resize(tasks.size());
  result.curves.resize(tasks.size());

  auto run_fold = [&](std::size_t index) {
    const FoldTask& task = tasks[index];
    FoldReport& report = result.folds[index];
    report.test_piece = task.test_piece;
    report.variant = task.variant;
    try {
      const FoldSpec fold =
          loo_split(ids, task.test_piece, config.train.validation_pieces, config.seed);
      report.train_pieces = fold.train_pieces;
      report.validation_pieces = fold.validation_pieces;

      std::vector<TrainPiece> train_set, val_set;
      for (const auto& id : fold.train_pieces) train_set.push_back(blocks.at(id));
      for (const auto& id : fold.validation_pieces) val_set.push_back(blocks.at(id));

      const std::uint64_t fold_seed = fnv1a64(task.test_piece, config.seed) ^
                                      static_cast<std::uint64_t>(task.variant);
      const TrainResult trained =
          train(task.variant, train_set, val_set, config.train, fold_seed);

      const TrainPiece& test = blocks.at(task.test_piece);
      const Eigen::VectorXd yhat = predict(trained.params, test.X);
      const std::vector<double> predicted = to_std(yhat);
      const std::vector<double> actual = to_std(test.y);

      report.mse = mse(actual, predicted);
      report.r2 = r2(actual, predicted);
      report.pearson = pearson(actual, predicted);
      const double s = by_id.at(task.test_piece)->targets.stddev;
      report.mse_raw_lu = report.mse * s * s;
      report.best_epoch = trained.best_epoch;
      report.epochs_run = trained.epochs_run;
      if (!trained.trace.empty()) {
        report.final_train_loss = trained.trace.back().train_loss;
        report.best_validation_mse = trained.trace[trained.best_epoch].validation_mse;
      }
      result.fold_params[index] = trained.params;

      PredictionCurve& curve = result.curves[index];
      curve.piece_id = task.test_piece;
      curve.variant = task.variant;
      curve.onsets = by_id.at(task.test_piece)->matrix.onsets;
      curve.actual = actual;
      curve.predicted = predicted;
    } catch (const std::exception& e) {
      report.failed = true;
      report.error = e.what();
    }
  };

  const int jobs = std::max(1, config.jobs);
  if (jobs == 1 || tasks.size() <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) run_fold(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    const int n_workers = std::min<int>(jobs, static_cast<int>(tasks.size()));
    workers.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) {
      workers.emplace_back([&] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= tasks.size()) break;
          run_fold(i);
        }
      });
    }
    for (auto& worker : workers) worker.join();
  }

  return result;
}

// --- reports -----------------------------------------------------------------

namespace {

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

const FoldReport* find_fold(const ExperimentResult& result, const std::string& piece,
                            ModelVariant variant) {
  for (const auto& fold : result.folds)
    if (fold.test_piece == piece && fold.variant == variant) return &fold;
  return nullptr;
}

}  // namespace

std::string report_table(const ExperimentResult& result, const ExperimentConfig& config) {
  std::vector<std::string> pieces;
  for (const auto& fold : result.folds)
    if (std::find(pieces.begin(), pieces.end(), fold.test_piece) == pieces.end())
      pieces.push_back(fold.test_piece);

  struct Measure {
    const char* name;
    double FoldReport::* field;
    bool larger_is_better;
  };
  std::vector<Measure> measures = {{"MSE", &FoldReport::mse, false},
                                   {"R2", &FoldReport::r2, true},
                                   {"r", &FoldReport::pearson, true}};
  if (config.raw_metrics) measures.push_back({"MSE[LU^2]", &FoldReport::mse_raw_lu, false});

  std::vector<std::string> header{"piece"};
  for (const auto& m : measures)
    for (const ModelVariant variant : config.variants)
      header.push_back(std::string(m.name) + "/" + to_string(variant));

  std::vector<std::vector<std::string>> cells;
  for (const auto& piece : pieces) {
    std::vector<std::string> row{piece};
    for (const auto& m : measures) {
      // Best value per piece and measure gets the '*' flag.
      double best = 0.0;
      bool have_best = false;
      for (const ModelVariant variant : config.variants) {
        const FoldReport* fold = find_fold(result, piece, variant);
        if (!fold || fold->failed) continue;
        const double value = fold->*(m.field);
        if (!have_best || (m.larger_is_better ? value > best : value < best)) {
          best = value;
          have_best = true;
        }
      }
      for (const ModelVariant variant : config.variants) {
        const FoldReport* fold = find_fold(result, piece, variant);
        if (!fold) {
          row.push_back("-");
        } else if (fold->failed) {
          row.push_back("FAIL");
        } else {
          const double value = fold->*(m.field);
          const bool is_best = have_best && value == best;
          row.push_back(is_best ? "*" + fixed2(value) + "*" : fixed2(value));
        }
      }
    }
    cells.push_back(std::move(row));
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());

  std::string out;
  auto emit_row = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += "  ";
      out += row[c];
      out.append(width[c] - row[c].size(), ' ');
    }
    out += '\n';
  };
  emit_row(header);
  for (const auto& row : cells) emit_row(row);

  out += "\nN_S=" + std::to_string(result.n_rows) + " rows, K_S=" +
         std::to_string(result.n_columns) + " basis functions, " +
         std::to_string(result.singular_bases.size()) + " singular (active in one piece)\n";
  for (const auto& fold : result.folds)
    if (fold.failed)
      out += "FAILED " + fold.test_piece + "/" + to_string(fold.variant) + ": " + fold.error +
             "\n";
  return out;
}

std::string report_csv(const ExperimentResult& result, bool raw_metrics) {
  std::string out = "piece,variant,mse,r2,pearson";
  if (raw_metrics) out += ",mse_raw_lu";
  out += ",best_epoch,epochs_run,failed,error\n";
  for (const auto& fold : result.folds) {
    out += fold.test_piece;
    out += ",";
    out += to_string(fold.variant);
    if (fold.failed) {
      out += raw_metrics ? ",,,,," : ",,,,";
      out += std::to_string(fold.best_epoch) + "," + std::to_string(fold.epochs_run);
      std::string msg = fold.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out += ",1," + msg + "\n";
      continue;
    }
    out += "," + format_double(fold.mse) + "," + format_double(fold.r2) + "," +
           format_double(fold.pearson);
    if (raw_metrics) out += "," + format_double(fold.mse_raw_lu);
    out += "," + std::to_string(fold.best_epoch) + "," + std::to_string(fold.epochs_run) +
           ",0,\n";
  }
  return out;
}

std::string curve_csv(const PredictionCurve& curve) {
  std::string out = "onset_num,onset_den,actual,predicted\n";
  for (std::size_t i = 0; i < curve.onsets.size(); ++i)
    out += std::to_string(curve.onsets[i].num()) + "," + std::to_string(curve.onsets[i].den()) +
           "," + format_double(curve.actual[i]) + "," + format_double(curve.predicted[i]) + "\n";
  return out;
}

std::string curve_svg(const PredictionCurve& curve) {
  const double width = 960.0, height = 480.0, margin = 40.0;
  const double lane = (height - 3.0 * margin) / 2.0;

  double lo = 0.0, hi = 1.0;
  if (!curve.actual.empty()) {
    lo = hi = curve.actual.front();
    for (const double v : curve.actual) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    for (const double v : curve.predicted) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi <= lo) hi = lo + 1.0;
  const double bmin = curve.onsets.empty() ? 0.0 : curve.onsets.front().to_double();
  const double bmax = curve.onsets.empty() ? 1.0 : std::max(curve.onsets.back().to_double(),
                                                            bmin + 1e-9);

  auto polyline = [&](const std::vector<double>& values, double top) {
    std::string points;
    for (std::size_t i = 0; i < curve.onsets.size(); ++i) {
      const double x =
          margin + (curve.onsets[i].to_double() - bmin) / (bmax - bmin) * (width - 2 * margin);
      const double yv = top + (1.0 - (values[i] - lo) / (hi - lo)) * lane;
      points += fixed2(x) + "," + fixed2(yv) + " ";
    }
    return points;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed2(width) +
         "\" height=\"" + fixed2(height) + "\" viewBox=\"0 0 " + fixed2(width) + " " +
         fixed2(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fixed2(margin) + "\" y=\"24\" font-family=\"sans-serif\" "
         "font-size=\"14\">" + curve.piece_id + " / " + to_string(curve.variant) +
         " (top: actual, bottom: predicted)</text>\n";
  svg += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" points=\"" +
         polyline(curve.actual, margin) + "\"/>\n";
  svg += "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1\" points=\"" +
         polyline(curve.predicted, 2 * margin + lane) + "\"/>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace forte
