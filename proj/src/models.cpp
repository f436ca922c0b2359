#include "forte/models.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "forte/errors.hpp"
#include "forte/rng.hpp"

namespace forte {

const char* to_string(ModelVariant variant) {
  switch (variant) {
    case ModelVariant::Linear: return "linear";
    case ModelVariant::FeedForward: return "feedforward";
    case ModelVariant::Recurrent: return "recurrent";
  }
  return "?";
}

std::optional<ModelVariant> model_variant_from_string(const std::string& s) {
  if (s == "linear" || s == "lin") return ModelVariant::Linear;
  if (s == "feedforward" || s == "ff") return ModelVariant::FeedForward;
  if (s == "recurrent" || s == "rnn") return ModelVariant::Recurrent;
  return std::nullopt;
}

bool ModelParams::all_finite() const {
  const auto ok = [](const auto& m) { return m.size() == 0 || m.allFinite(); };
  return ok(w) && ok(U) && ok(b) && ok(W) && ok(v) && std::isfinite(c);
}

double Gradients::squared_norm() const {
  double s = c * c;
  s += w.squaredNorm() + U.squaredNorm() + b.squaredNorm() + W.squaredNorm() + v.squaredNorm();
  return s;
}

void Gradients::scale(double factor) {
  w *= factor;
  U *= factor;
  b *= factor;
  W *= factor;
  v *= factor;
  c *= factor;
}

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw ConfigError("learning rate must be positive");
  if (max_epochs <= 0) throw ConfigError("max epochs must be positive");
  if (patience < 0) throw ConfigError("patience must be >= 0");
  if (patience >= max_epochs) throw ConfigError("patience must be below max epochs");
  if (clip_norm <= 0.0) throw ConfigError("gradient clip norm must be positive");
  if (ridge < 0.0) throw ConfigError("ridge lambda must be >= 0");
  if (validation_pieces <= 0) throw ConfigError("validation piece count must be positive");
  if (hidden <= 0) throw ConfigError("hidden size must be positive");
}

Eigen::MatrixXd design_matrix(const DatasetMatrix& dataset, std::size_t piece_index,
                              bool with_const) {
  const auto& block = dataset.pieces.at(piece_index);
  const Eigen::Index rows = static_cast<Eigen::Index>(block.rows.size());
  const Eigen::Index k = static_cast<Eigen::Index>(dataset.columns.size());
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(rows, k + (with_const ? 1 : 0));
  for (Eigen::Index r = 0; r < rows; ++r)
    for (const auto& [col, v] : block.rows[r]) X(r, col) = v;
  if (with_const) X.col(k).setOnes();
  return X;
}

ModelParams init_params(ModelVariant variant, int input_dim, int hidden, std::uint64_t seed) {
  if (input_dim <= 0) throw ContractViolation("init_params: input_dim must be positive");
  ModelParams p;
  p.variant = variant;
  p.input_dim = input_dim;
  p.hidden = variant == ModelVariant::Linear ? 0 : hidden;
  p.seed = seed;

  if (variant == ModelVariant::Linear) {
    p.w = Eigen::VectorXd::Zero(input_dim);
    return p;
  }
  if (hidden <= 0) throw ContractViolation("init_params: hidden size must be positive");

  Rng rng(seed);
  const auto fill = [&rng](Eigen::MatrixXd& m, double r) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-r, r);
  };
  const double r_in = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double r_hidden = 1.0 / std::sqrt(static_cast<double>(hidden));

  p.U = Eigen::MatrixXd(hidden, input_dim);
  fill(p.U, r_in);
  p.b = Eigen::VectorXd::Zero(hidden);
  if (variant == ModelVariant::Recurrent) {
    p.W = Eigen::MatrixXd(hidden, hidden);
    fill(p.W, r_hidden);
  }
  Eigen::MatrixXd vv(hidden, 1);
  fill(vv, r_hidden);
  p.v = vv.col(0);
  p.c = 0.0;
  return p;
}

namespace {

void check_shapes(const ModelParams& params, const Eigen::MatrixXd& X) {
  if (X.cols() != params.input_dim)
    throw ContractViolation("design matrix has " + std::to_string(X.cols()) +
                            " columns, model expects " + std::to_string(params.input_dim));
}

Eigen::MatrixXd hidden_states(const ModelParams& params, const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  const Eigen::Index h = params.hidden;
  Eigen::MatrixXd H(n, h);
  if (params.variant == ModelVariant::FeedForward) {
    H = ((X * params.U.transpose()).rowwise() + params.b.transpose()).array().tanh();
  } else {
    Eigen::VectorXd state = Eigen::VectorXd::Zero(h);
    for (Eigen::Index i = 0; i < n; ++i) {
      state = (params.U * X.row(i).transpose() + params.W * state + params.b).array().tanh();
      H.row(i) = state.transpose();
    }
  }
  return H;
}

}  // namespace

Eigen::VectorXd predict(const ModelParams& params, const Eigen::MatrixXd& X) {
  check_shapes(params, X);
  if (params.variant == ModelVariant::Linear) return X * params.w;
  const Eigen::MatrixXd H = hidden_states(params, X);
  return (H * params.v).array() + params.c;
}

Eigen::VectorXd fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda) {
  if (X.rows() != y.size()) throw ContractViolation("fit_linear: row count mismatch");
  if (lambda < 0.0) throw ContractViolation("fit_linear: lambda must be >= 0");

  Eigen::VectorXd w;
  if (lambda > 0.0) {
    const Eigen::Index k = X.cols();
    Eigen::MatrixXd gram = X.transpose() * X;
    gram.diagonal().array() += lambda;
    const auto ldlt = gram.ldlt();
    w = ldlt.solve(X.transpose() * y);
    if (ldlt.info() != Eigen::Success || !w.allFinite()) {
      throw NumericalError("ridge normal equations failed (K=" + std::to_string(k) +
                           ", lambda=" + std::to_string(lambda) + "); the Gram matrix is "
                           "numerically singular despite regularization");
    }
  } else {
    // Rank-revealing solve; minimum-norm for rank-deficient X.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(X);
    w = cod.solve(y);
    if (!w.allFinite()) {
      throw NumericalError("least squares solve produced non-finite weights (rank " +
                           std::to_string(cod.rank()) + " of " + std::to_string(X.cols()) +
                           " columns)");
    }
  }
  return w;
}

double loss(const ModelParams& params, const std::vector<TrainPiece>& pieces) {
  std::size_t total = 0;
  double sum = 0.0;
  for (const auto& piece : pieces) {
    const Eigen::VectorXd residual = predict(params, piece.X) - piece.y;
    sum += residual.squaredNorm();
    total += static_cast<std::size_t>(piece.X.rows());
  }
  if (total == 0) throw ContractViolation("loss over zero rows");
  return 0.5 * sum / static_cast<double>(total);
}

Gradients gradients(const ModelParams& params, const std::vector<TrainPiece>& pieces) {
  Gradients g;
  g.w = Eigen::VectorXd::Zero(params.w.size());
  g.U = Eigen::MatrixXd::Zero(params.U.rows(), params.U.cols());
  g.b = Eigen::VectorXd::Zero(params.b.size());
  g.W = Eigen::MatrixXd::Zero(params.W.rows(), params.W.cols());
  g.v = Eigen::VectorXd::Zero(params.v.size());

  std::size_t total = 0;
  for (const auto& piece : pieces) total += static_cast<std::size_t>(piece.X.rows());
  if (total == 0) throw ContractViolation("gradients over zero rows");
  const double inv_n = 1.0 / static_cast<double>(total);

  for (const auto& piece : pieces) {
    check_shapes(params, piece.X);
    const Eigen::MatrixXd& X = piece.X;
    const Eigen::Index n = X.rows();

    if (params.variant == ModelVariant::Linear) {
      const Eigen::VectorXd r = (X * params.w - piece.y) * inv_n;
      g.w += X.transpose() * r;
      continue;
    }

    const Eigen::MatrixXd H = hidden_states(params, X);
    const Eigen::VectorXd yhat = (H * params.v).array() + params.c;
    const Eigen::VectorXd r = (yhat - piece.y) * inv_n;
    if (!r.allFinite())
      throw TrainingFault("non-finite residual in piece '" + piece.id + "'");

    g.v += H.transpose() * r;
    g.c += r.sum();

    if (params.variant == ModelVariant::FeedForward) {
      // dZ = (r v^T) o (1 - H^2)
      const Eigen::MatrixXd dZ =
          (r * params.v.transpose()).array() * (1.0 - H.array().square());
      g.U += dZ.transpose() * X;
      g.b += dZ.colwise().sum().transpose();
    } else {
      // Backpropagation through time over the whole sequence.
      Eigen::VectorXd carry = Eigen::VectorXd::Zero(params.hidden);
      for (Eigen::Index i = n - 1; i >= 0; --i) {
        const Eigen::VectorXd h = H.row(i).transpose();
        const Eigen::VectorXd dh = r(i) * params.v + carry;
        const Eigen::VectorXd dz = dh.array() * (1.0 - h.array().square());
        g.U += dz * X.row(i);
        g.b += dz;
        if (i > 0) g.W += dz * H.row(i - 1);
        carry = params.W.transpose() * dz;
      }
    }
  }
  return g;
}

namespace {

void apply_update(ModelParams& params, const Gradients& g, double lr) {
  if (params.variant == ModelVariant::Linear) {
    params.w -= lr * g.w;
    return;
  }
  params.U -= lr * g.U;
  params.b -= lr * g.b;
  if (params.variant == ModelVariant::Recurrent) params.W -= lr * g.W;
  params.v -= lr * g.v;
  params.c -= lr * g.c;
}

double validation_mse(const ModelParams& params, const std::vector<TrainPiece>& pieces) {
  double sum = 0.0;
  std::size_t total = 0;
  for (const auto& piece : pieces) {
    sum += (predict(params, piece.X) - piece.y).squaredNorm();
    total += static_cast<std::size_t>(piece.X.rows());
  }
  return total ? sum / static_cast<double>(total) : 0.0;
}

}  // namespace

TrainResult train(ModelVariant variant, const std::vector<TrainPiece>& train_pieces,
                  const std::vector<TrainPiece>& validation_pieces, const TrainConfig& config,
                  std::uint64_t seed) {
  config.validate();
  if (train_pieces.empty()) throw ContractViolation("train: no training pieces");
  const int input_dim = static_cast<int>(train_pieces.front().X.cols());

  TrainResult result;

  if (variant == ModelVariant::Linear) {
    // Closed-form least squares on train + validation rows (no early stopping
    // to drive, so the validation pieces join the fit).
    std::size_t rows = 0;
    for (const auto* set : {&train_pieces, &validation_pieces})
      for (const auto& piece : *set) rows += static_cast<std::size_t>(piece.X.rows());
    Eigen::MatrixXd X(rows, input_dim);
    Eigen::VectorXd y(rows);
    Eigen::Index at = 0;
    for (const auto* set : {&train_pieces, &validation_pieces}) {
      for (const auto& piece : *set) {
        X.middleRows(at, piece.X.rows()) = piece.X;
        y.segment(at, piece.y.size()) = piece.y;
        at += piece.X.rows();
      }
    }
    result.params = init_params(variant, input_dim, 0, seed);
    result.params.w = fit_linear(X, y, config.ridge);
    EpochStats stats;
    stats.train_loss = loss(result.params, train_pieces);
    stats.validation_mse = validation_mse(result.params, validation_pieces);
    result.trace.push_back(stats);
    return result;
  }

  // Early stopping falls back to the training loss when no validation
  // pieces were held out.
  const std::vector<TrainPiece>& val_set =
      validation_pieces.empty() ? train_pieces : validation_pieces;

  ModelParams params = init_params(variant, input_dim, config.hidden, seed);
  ModelParams best = params;
  double best_val = validation_mse(params, val_set);
  {
    EpochStats stats;
    stats.train_loss = loss(params, train_pieces);
    stats.validation_mse = best_val;
    result.trace.push_back(stats);
  }

  const double clip2 = config.clip_norm * config.clip_norm;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    if (epoch - result.best_epoch > config.patience) break;

    Gradients g = gradients(params, train_pieces);
    const double norm2 = g.squared_norm();
    if (!std::isfinite(norm2))
      throw TrainingFault("non-finite gradient at epoch " + std::to_string(epoch));
    if (norm2 > clip2) g.scale(config.clip_norm / std::sqrt(norm2));
    apply_update(params, g, config.learning_rate);

    EpochStats stats;
    stats.train_loss = loss(params, train_pieces);
    stats.validation_mse = validation_mse(params, val_set);
    result.trace.push_back(stats);
    result.epochs_run = epoch;
    if (!std::isfinite(stats.train_loss) || !std::isfinite(stats.validation_mse))
      throw TrainingFault("training diverged at epoch " + std::to_string(epoch) +
                          " (loss is not finite)");

    if (stats.validation_mse < best_val) {
      best_val = stats.validation_mse;
      best = params;
      result.best_epoch = epoch;
    }
  }

  result.params = best;
  return result;
}

// --- serialization ---------------------------------------------------------

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return {};
  const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
  return m;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}

}  // namespace

std::string model_to_json(const ModelParams& params, const TrainConfig& config,
                          std::uint64_t dataset_fingerprint) {
  nlohmann::ordered_json j;
  j["format"] = "forte-model/1";
  j["variant"] = to_string(params.variant);
  j["input_dim"] = params.input_dim;
  j["hidden"] = params.hidden;
  j["seed"] = params.seed;
  j["dataset_fingerprint"] = dataset_fingerprint;
  j["config"] = {{"learning_rate", config.learning_rate},
                 {"max_epochs", config.max_epochs},
                 {"patience", config.patience},
                 {"clip_norm", config.clip_norm},
                 {"ridge", config.ridge},
                 {"validation_pieces", config.validation_pieces},
                 {"hidden", config.hidden}};
  if (params.variant == ModelVariant::Linear) {
    j["w"] = vector_json(params.w);
  } else {
    j["U"] = matrix_json(params.U);
    j["b"] = vector_json(params.b);
    if (params.variant == ModelVariant::Recurrent) j["W"] = matrix_json(params.W);
    j["v"] = vector_json(params.v);
    j["c"] = params.c;
  }
  return j.dump(1) + "\n";
}

ModelParams model_from_json(const std::string& text, std::uint64_t expected_fingerprint) {
  nlohmann::json j;
  ModelParams p;
  try {
    j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "forte-model/1")
      throw ConfigError("unknown model file format");
    const auto variant = model_variant_from_string(j.at("variant").get<std::string>());
    if (!variant) throw ConfigError("unknown model variant");
    if (expected_fingerprint != 0 &&
        j.at("dataset_fingerprint").get<std::uint64_t>() != expected_fingerprint)
      throw ConfigError("model was trained on a different feature space "
                        "(dataset fingerprint mismatch)");
    p.variant = *variant;
    p.input_dim = j.at("input_dim").get<int>();
    p.hidden = j.at("hidden").get<int>();
    p.seed = j.at("seed").get<std::uint64_t>();
    if (p.variant == ModelVariant::Linear) {
      p.w = vector_from_json(j.at("w"));
    } else {
      p.U = matrix_from_json(j.at("U"));
      p.b = vector_from_json(j.at("b"));
      if (p.variant == ModelVariant::Recurrent) p.W = matrix_from_json(j.at("W"));
      p.v = vector_from_json(j.at("v"));
      p.c = j.at("c").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model file: ") + e.what());
  }
  if (!p.all_finite()) throw ConfigError("model file contains non-finite weights");
  return p;
}

}  // namespace forte
