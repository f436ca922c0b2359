#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "forte/fusion.hpp"

namespace forte {

enum class ModelVariant { Linear, FeedForward, Recurrent };

const char* to_string(ModelVariant variant);
std::optional<ModelVariant> model_variant_from_string(const std::string& s);

// Weights of one predictor. The linear variant uses only `w`; the networks
// use U/b/v/c, and the recurrent variant additionally the hidden-to-hidden W.
struct ModelParams {
  ModelVariant variant = ModelVariant::Linear;
  int input_dim = 0;
  int hidden = 0;
  std::uint64_t seed = 0;

  Eigen::VectorXd w;   // input_dim
  Eigen::MatrixXd U;   // hidden x input_dim
  Eigen::VectorXd b;   // hidden
  Eigen::MatrixXd W;   // hidden x hidden
  Eigen::VectorXd v;   // hidden
  double c = 0.0;

  bool all_finite() const;
};

// Gradients share the layout of the trainable fields.
struct Gradients {
  Eigen::VectorXd w;
  Eigen::MatrixXd U;
  Eigen::VectorXd b;
  Eigen::MatrixXd W;
  Eigen::VectorXd v;
  double c = 0.0;

  double squared_norm() const;
  void scale(double factor);
};

struct TrainConfig {
  double learning_rate = 0.01;
  int max_epochs = 2000;
  int patience = 20;
  double clip_norm = 5.0;
  double ridge = 1e-3;       // linear variant only
  int validation_pieces = 2;
  int hidden = 20;

  void validate() const;  // throws ConfigError
};

// One piece of a training corpus: a dense design block (rows in onset order)
// and its standardized targets.
struct TrainPiece {
  std::string id;
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

// Dense design block of one dataset piece; with_const appends the all-ones
// offset column the models are fitted against (it is not a basis column).
Eigen::MatrixXd design_matrix(const DatasetMatrix& dataset, std::size_t piece_index,
                              bool with_const = true);

// Seeded initialization: weights uniform(-r, r) with r = 1/sqrt(fan-in),
// biases zero. The linear variant starts at w = 0.
ModelParams init_params(ModelVariant variant, int input_dim, int hidden, std::uint64_t seed);

// f(Phi, w): linear Phi*w; feed-forward v.tanh(U x + b) + c per row;
// recurrent h_n = tanh(U x_n + W h_{n-1} + b), yhat_n = v.h_n + c with
// h_0 = 0 and rows in onset order. Throws ContractViolation on shape
// mismatch.
Eigen::VectorXd predict(const ModelParams& params, const Eigen::MatrixXd& X);

// Ridge least squares: argmin |Xw - y|^2 + lambda |w|^2. lambda > 0 solves
// the normal equations by LDLT; lambda = 0 uses a rank-revealing
// decomposition and returns the minimum-norm solution for deficient X.
// Throws NumericalError (with a conditioning hint) if the solve fails.
Eigen::VectorXd fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda);

// Analytic gradients of 0.5 * sum((yhat - y)^2) / N over all rows of all
// pieces (backpropagation through time for the recurrent variant).
Gradients gradients(const ModelParams& params, const std::vector<TrainPiece>& pieces);

double loss(const ModelParams& params, const std::vector<TrainPiece>& pieces);

struct EpochStats {
  double train_loss = 0.0;
  double validation_mse = 0.0;
};

struct TrainResult {
  ModelParams params;        // best validation epoch
  std::vector<EpochStats> trace;
  int best_epoch = 0;
  int epochs_run = 0;
};

// Full-batch gradient descent with gradient-norm clipping and early stopping:
// training stops once (epoch - best_epoch) > patience, returning the best
// validation epoch's parameters; patience 0 therefore returns the epoch-0
// (initial) parameters. The linear variant is fitted closed-form on
// train + validation rows instead. Throws TrainingFault on divergence.
TrainResult train(ModelVariant variant, const std::vector<TrainPiece>& train_pieces,
                  const std::vector<TrainPiece>& validation_pieces, const TrainConfig& config,
                  std::uint64_t seed);

// Versioned JSON model file with shape metadata and the dataset descriptor
// fingerprint; loading refuses a mismatched feature space.
std::string model_to_json(const ModelParams& params, const TrainConfig& config,
                          std::uint64_t dataset_fingerprint);
ModelParams model_from_json(const std::string& text, std::uint64_t expected_fingerprint = 0);

}  // namespace forte
