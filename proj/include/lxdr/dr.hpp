#pragma once

// Black-box dimensionality reducers: PCA, RBF kernel PCA and a small
// autoencoder, all with out-of-sample transform.

#include "lxdr/types.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace lxdr {

enum class DrKind { pca, kpca_rbf, autoencoder };

std::string_view to_string(DrKind kind);
/// Accepts the canonical names plus the short aliases "kpca" and "ae".
DrKind parse_dr_kind(std::string_view name);

struct PcaModel {
  Matrix components;  // N_r x N, row k = weight vector of component k
  Vector mean;        // N
  Vector explained_variance;
  Vector explained_variance_ratio;  // N_r, non-increasing

  Index input_dims() const { return components.cols(); }
  Index reduced_dims() const { return components.rows(); }
};

struct KpcaModel {
  Matrix training_rows;  // M x N support data
  double gamma = 0.0;
  Matrix alphas;  // M x N_r, column j = eigenvector j / sqrt(lambda_j)
  Vector eigenvalues;
  Vector kernel_row_means;
  double kernel_grand_mean = 0.0;

  Index input_dims() const { return training_rows.cols(); }
  Index reduced_dims() const { return alphas.cols(); }
};

enum class Activation { tanh, linear };

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
  Activation activation = Activation::linear;
};

struct AutoencoderModel {
  std::vector<DenseLayer> encoder_layers;
  std::vector<DenseLayer> decoder_layers;
  Index hidden_width = 0;
  int epochs_trained = 0;
  double final_train_mse = 0.0;

  Index input_dims() const { return encoder_layers.front().weights.cols(); }
  Index reduced_dims() const { return encoder_layers.back().weights.rows(); }
  Vector encode(const Vector& x) const;
  Vector reconstruct(const Vector& x) const;
};

struct AutoencoderOptions {
  int epochs = 200;
  Index batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class DivergenceError : public NumericalError {
 public:
  DivergenceError(int epoch, const std::string& what)
      : NumericalError(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

// --- PCA -------------------------------------------------------------------

/// Covariance spectrum of the centered data as ratios, sorted descending; sums to 1.
Vector pca_variance_ratios(const DataMatrix& data);

/// Smallest number of leading components whose cumulative ratio reaches `threshold`.
Index components_for_variance(const Vector& ratios, double threshold);

/// Top `n_components` eigenvectors of the sample covariance. Each component is
/// sign-flipped so that its largest-magnitude entry is positive.
PcaModel pca_fit(const DataMatrix& data, Index n_components);
Vector pca_transform(const PcaModel& model, const Vector& x);
Vector pca_inverse(const PcaModel& model, const Vector& x_reduced);

// --- Kernel PCA --------------------------------------------------------------

/// RBF kernel PCA. `gamma` defaults to 1 / n_features.
KpcaModel kpca_fit(const DataMatrix& data, Index n_components,
                   std::optional<double> gamma = std::nullopt);
Vector kpca_transform(const KpcaModel& model, const Vector& x);

// --- Autoencoder -------------------------------------------------------------

/// N -> h -> N_r -> h -> N with tanh hidden layers and linear outputs,
/// h = max(N_r, ceil((N + N_r) / 2)). Trained with Adam on minibatch MSE.
AutoencoderModel autoencoder_fit(const DataMatrix& data, Index n_components, Seed seed,
                                 const AutoencoderOptions& options = {});
Index autoencoder_hidden_width(Index input_dims, Index reduced_dims);

// --- Uniform reducer ---------------------------------------------------------

/// A trained reducer. Immutable after construction; transform has no side effects.
class FittedDR {
 public:
  using Model = std::variant<PcaModel, KpcaModel, AutoencoderModel>;

  FittedDR(PcaModel model, Seed seed = 0);
  FittedDR(KpcaModel model, Seed seed = 0);
  FittedDR(AutoencoderModel model, Seed seed);

  DrKind kind() const { return kind_; }
  Seed training_seed() const { return seed_; }
  Index input_dims() const;
  Index reduced_dims() const;

  Vector transform(const Vector& x) const;
  /// Row-wise transform; rows x N in, rows x N_r out.
  DataMatrix transform_rows(const DataMatrix& batch) const;

  const Model& model() const { return model_; }
  /// Intrinsic weight matrix (N_r x N) when the reducer is linear, i.e. PCA.
  std::optional<Matrix> intrinsic_weights() const;

 private:
  DrKind kind_;
  Seed seed_;
  Model model_;
};

DataMatrix dr_transform(const FittedDR& model, const DataMatrix& batch);

struct DrFitParams {
  std::optional<double> gamma;
  AutoencoderOptions autoencoder;
};

FittedDR fit_dr(DrKind kind, const DataMatrix& data, Index n_components, Seed seed,
                const DrFitParams& params = {});

// Versioned JSON document:
// {"format_version", "kind", "input_dims", "reduced_dims", "seed", ...arrays}
nlohmann::json to_json(const FittedDR& model);
FittedDR fitted_dr_from_json(const nlohmann::json& doc);

}  // namespace lxdr
