#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "forte/models.hpp"
#include "forte/targets.hpp"

namespace forte {

// Mean squared residual.
double mse(std::span<const double> y, std::span<const double> yhat);
// 1 - SS_res / SS_tot; no lower bound, 0 for the mean predictor.
double r2(std::span<const double> y, std::span<const double> yhat);
// Pearson correlation; throws DegenerateTargetError on constant input.
double pearson(std::span<const double> y, std::span<const double> yhat);

struct FoldSpec {
  std::string test_piece;
  std::vector<std::string> train_pieces;
  std::vector<std::string> validation_pieces;
};

// Deterministic (seeded) split: n_validation pieces sampled from the non-test
// pieces, the remainder trains. Same inputs always give the same split.
FoldSpec loo_split(const std::vector<std::string>& piece_ids, const std::string& test_piece,
                   int n_validation, std::uint64_t seed);

// One report row group: a test piece evaluated under one variant.
struct FoldReport {
  std::string test_piece;
  ModelVariant variant = ModelVariant::Linear;
  bool failed = false;
  std::string error;

  double mse = 0.0;
  double r2 = 0.0;
  double pearson = 0.0;
  double mse_raw_lu = 0.0;  // de-standardized scale (LU^2)

  std::vector<std::string> train_pieces;
  std::vector<std::string> validation_pieces;
  int best_epoch = 0;
  int epochs_run = 0;
  double final_train_loss = 0.0;
  double best_validation_mse = 0.0;
};

// One corpus piece at the evaluation level.
struct CorpusPiece {
  PieceMatrix matrix;
  TargetVector targets;
};

struct PredictionCurve {
  std::string piece_id;
  ModelVariant variant = ModelVariant::Linear;
  std::vector<Beat> onsets;
  std::vector<double> actual;     // standardized
  std::vector<double> predicted;  // standardized
};

struct ExperimentConfig {
  std::vector<ModelVariant> variants{ModelVariant::Linear, ModelVariant::FeedForward,
                                     ModelVariant::Recurrent};
  TrainConfig train;
  std::uint64_t seed = 1;
  int jobs = 1;
  bool raw_metrics = false;  // add raw-LU MSE columns to the report
};

struct ExperimentResult {
  std::vector<FoldReport> folds;              // piece-major, variant-minor order
  std::vector<ModelParams> fold_params;       // aligned with folds (empty on failure)
  std::vector<PredictionCurve> curves;
  std::vector<std::string> singular_bases;    // active in exactly one piece
  std::uint64_t dataset_fingerprint = 0;
  std::size_t n_rows = 0;                     // N_S
  std::size_t n_columns = 0;                  // K_S
};

// Leave-one-out over every piece x variant. Fold failures are recorded in
// their report and the remaining folds continue.
ExperimentResult run_experiment(const std::vector<CorpusPiece>& corpus,
                                const ExperimentConfig& config);

// Aligned text table, one row per piece, best value per piece and measure
// flagged with '*'. Raw-LU MSE columns appear when requested.
std::string report_table(const ExperimentResult& result, const ExperimentConfig& config);
// Machine-readable version of the same data.
std::string report_csv(const ExperimentResult& result, bool raw_metrics);

std::string curve_csv(const PredictionCurve& curve);
// Two stacked curves, actual above, predicted below.
std::string curve_svg(const PredictionCurve& curve);

}  // namespace forte
