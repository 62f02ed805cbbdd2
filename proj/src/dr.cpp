#include "lxdr/dr.hpp"

#include "lxdr/json_io.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace lxdr {

namespace {

constexpr int kFormatVersion = 1;

// Flip `v` so that its largest-magnitude entry is positive.
template <typename Derived>
void canonicalize_sign(Eigen::MatrixBase<Derived>&& v) {
  Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v(arg) < 0) v = -v;
}

void require_data(const DataMatrix& data, Index min_rows, const char* who) {
  if (data.rows() < min_rows || data.cols() < 1) {
    throw std::invalid_argument(std::string(who) + ": need at least " +
                                std::to_string(min_rows) + " rows and 1 column, got " +
                                shape_str(data.rows(), data.cols()));
  }
  require_finite(data, who);
}

Matrix sample_covariance(const DataMatrix& data, Vector& mean) {
  mean = data.colwise().mean().transpose();
  const Matrix centered = data.rowwise() - mean.transpose();
  return (centered.transpose() * centered) / static_cast<double>(data.rows() - 1);
}

}  // namespace

std::string_view to_string(DrKind kind) {
  switch (kind) {
    case DrKind::pca: return "pca";
    case DrKind::kpca_rbf: return "kpca-rbf";
    case DrKind::autoencoder: return "autoencoder";
  }
  return "unknown";
}

DrKind parse_dr_kind(std::string_view name) {
  if (name == "pca") return DrKind::pca;
  if (name == "kpca-rbf" || name == "kpca") return DrKind::kpca_rbf;
  if (name == "autoencoder" || name == "ae") return DrKind::autoencoder;
  throw std::invalid_argument("unknown reducer kind '" + std::string(name) + "'");
}

// --- PCA -------------------------------------------------------------------

Vector pca_variance_ratios(const DataMatrix& data) {
  require_data(data, 2, "pca");
  Vector mean;
  const Matrix cov = sample_covariance(data, mean);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
  const Vector values = eig.eigenvalues().reverse().cwiseMax(0.0);
  const double total = values.sum();
  if (total <= 0.0) throw NumericalError("pca: covariance is zero, all components are tied");
  return values / total;
}

Index components_for_variance(const Vector& ratios, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("variance threshold must be in (0, 1]");
  }
  double cumulative = 0.0;
  for (Index i = 0; i < ratios.size(); ++i) {
    cumulative += ratios[i];
    // Tolerate rounding in the running sum when the threshold is 1.
    if (cumulative >= threshold - 1e-12) return i + 1;
  }
  return ratios.size();
}

PcaModel pca_fit(const DataMatrix& data, Index n_components) {
  require_data(data, 2, "pca_fit");
  if (n_components < 1 || n_components > data.cols()) {
    throw std::invalid_argument("pca_fit: n_components must be in [1, " +
                                std::to_string(data.cols()) + "], got " +
                                std::to_string(n_components));
  }
  PcaModel model;
  const Matrix cov = sample_covariance(data, model.mean);
  if (cov.isZero(0.0)) throw NumericalError("pca_fit: covariance is zero, all components are tied");

  const Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("pca_fit: eigensolver failed");

  // Eigen sorts ascending; the leading components are the trailing columns.
  const Index n = data.cols();
  const Vector values = eig.eigenvalues().cwiseMax(0.0);
  const double total = values.sum();
  model.components.resize(n_components, n);
  model.explained_variance.resize(n_components);
  model.explained_variance_ratio.resize(n_components);
  for (Index k = 0; k < n_components; ++k) {
    const Index src = n - 1 - k;
    model.components.row(k) = eig.eigenvectors().col(src).transpose();
    canonicalize_sign(model.components.row(k));
    model.explained_variance[k] = values[src];
    model.explained_variance_ratio[k] = values[src] / total;
  }
  return model;
}

Vector pca_transform(const PcaModel& model, const Vector& x) {
  require_length(x.size(), model.input_dims(), "pca_transform");
  return model.components * (x - model.mean);
}

Vector pca_inverse(const PcaModel& model, const Vector& x_reduced) {
  require_length(x_reduced.size(), model.reduced_dims(), "pca_inverse");
  return model.components.transpose() * x_reduced + model.mean;
}

// --- Kernel PCA --------------------------------------------------------------

namespace {

Vector rbf_row(const Matrix& support, const Vector& x, double gamma) {
  const Vector sq = (support.rowwise() - x.transpose()).rowwise().squaredNorm();
  return (-gamma * sq.array()).exp().matrix();
}

}  // namespace

KpcaModel kpca_fit(const DataMatrix& data, Index n_components, std::optional<double> gamma) {
  require_data(data, 2, "kpca_fit");
  const Index m = data.rows();
  if (n_components < 1 || n_components > m) {
    throw std::invalid_argument("kpca_fit: n_components must be in [1, " + std::to_string(m) +
                                "], got " + std::to_string(n_components));
  }
  KpcaModel model;
  model.gamma = gamma.value_or(1.0 / static_cast<double>(data.cols()));
  if (!(model.gamma > 0.0) || !std::isfinite(model.gamma)) {
    throw std::invalid_argument("kpca_fit: gamma must be positive");
  }
  model.training_rows = data;

  Matrix kernel(m, m);
  for (Index i = 0; i < m; ++i) kernel.col(i) = rbf_row(data, data.row(i).transpose(), model.gamma);
  model.kernel_row_means = kernel.rowwise().mean();
  model.kernel_grand_mean = model.kernel_row_means.mean();

  Matrix centered = kernel;
  centered.colwise() -= model.kernel_row_means;
  centered.rowwise() -= model.kernel_row_means.transpose();
  centered.array() += model.kernel_grand_mean;

  const Eigen::SelfAdjointEigenSolver<Matrix> eig(centered);
  if (eig.info() != Eigen::Success) throw NumericalError("kpca_fit: eigensolver failed");

  const Vector& values = eig.eigenvalues();
  const double largest = std::max(values[m - 1], 0.0);
  const double tol = largest * 1e-12;
  Index positive = 0;
  for (Index i = m - 1; i >= 0 && values[i] > tol && largest > 0.0; --i) ++positive;
  if (positive < n_components) {
    throw NumericalError("kpca_fit: requested " + std::to_string(n_components) +
                         " components but only " + std::to_string(positive) +
                         " positive eigenvalues are available");
  }

  model.alphas.resize(m, n_components);
  model.eigenvalues.resize(n_components);
  for (Index k = 0; k < n_components; ++k) {
    const Index src = m - 1 - k;
    Vector v = eig.eigenvectors().col(src);
    canonicalize_sign(v.head(m));
    model.eigenvalues[k] = values[src];
    model.alphas.col(k) = v / std::sqrt(values[src]);
  }
  return model;
}

Vector kpca_transform(const KpcaModel& model, const Vector& x) {
  require_length(x.size(), model.input_dims(), "kpca_transform");
  Vector k = rbf_row(model.training_rows, x, model.gamma);
  const double k_mean = k.mean();
  k.array() += model.kernel_grand_mean - k_mean;
  k -= model.kernel_row_means;
  return model.alphas.transpose() * k;
}

// --- Autoencoder -------------------------------------------------------------

namespace {

Matrix apply_layer(const DenseLayer& layer, const Matrix& input) {
  Matrix z = (layer.weights * input).colwise() + layer.bias;
  if (layer.activation == Activation::tanh) z = z.array().tanh().matrix();
  return z;
}

Matrix run_layers(const std::vector<DenseLayer>& layers, Matrix x) {
  for (const auto& layer : layers) x = apply_layer(layer, x);
  return x;
}

struct AdamSlot {
  Matrix m_w, v_w;
  Vector m_b, v_b;
};

}  // namespace

Index autoencoder_hidden_width(Index input_dims, Index reduced_dims) {
  return std::max(reduced_dims, (input_dims + reduced_dims + 1) / 2);
}

Vector AutoencoderModel::encode(const Vector& x) const {
  require_length(x.size(), input_dims(), "autoencoder encode");
  return run_layers(encoder_layers, x);
}

Vector AutoencoderModel::reconstruct(const Vector& x) const {
  return run_layers(decoder_layers, encode(x));
}

AutoencoderModel autoencoder_fit(const DataMatrix& data, Index n_components, Seed seed,
                                 const AutoencoderOptions& options) {
  require_data(data, 1, "autoencoder_fit");
  if (options.epochs < 1) throw std::invalid_argument("autoencoder_fit: epochs must be >= 1");
  if (options.batch_size < 1) throw std::invalid_argument("autoencoder_fit: batch_size must be >= 1");
  const Index n = data.cols();
  if (n_components < 1 || n_components > n) {
    throw std::invalid_argument("autoencoder_fit: n_components must be in [1, " +
                                std::to_string(n) + "]");
  }

  std::mt19937_64 rng(seed);
  AutoencoderModel model;
  model.hidden_width = autoencoder_hidden_width(n, n_components);
  const Index h = model.hidden_width;

  auto make_layer = [&rng](Index in, Index out, Activation act) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer;
    layer.weights.resize(out, in);
    for (Index r = 0; r < out; ++r)
      for (Index c = 0; c < in; ++c) layer.weights(r, c) = dist(rng);
    layer.bias = Vector::Zero(out);
    layer.activation = act;
    return layer;
  };
  model.encoder_layers = {make_layer(n, h, Activation::tanh),
                          make_layer(h, n_components, Activation::linear)};
  model.decoder_layers = {make_layer(n_components, h, Activation::tanh),
                          make_layer(h, n, Activation::linear)};

  std::vector<DenseLayer*> layers;
  for (auto& l : model.encoder_layers) layers.push_back(&l);
  for (auto& l : model.decoder_layers) layers.push_back(&l);

  std::vector<AdamSlot> slots;
  for (const auto* l : layers) {
    slots.push_back({Matrix::Zero(l->weights.rows(), l->weights.cols()),
                     Matrix::Zero(l->weights.rows(), l->weights.cols()),
                     Vector::Zero(l->bias.size()), Vector::Zero(l->bias.size())});
  }

  // Samples as columns.
  const Matrix samples = data.transpose();
  const Index rows = data.rows();
  std::vector<Index> order(static_cast<std::size_t>(rows));
  std::iota(order.begin(), order.end(), Index{0});

  long step = 0;
  std::vector<Matrix> activations(layers.size() + 1);
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Index start = 0; start < rows; start += options.batch_size) {
      const Index count = std::min(options.batch_size, rows - start);
      Matrix batch(n, count);
      for (Index j = 0; j < count; ++j)
        batch.col(j) = samples.col(order[static_cast<std::size_t>(start + j)]);

      activations[0] = batch;
      for (std::size_t l = 0; l < layers.size(); ++l)
        activations[l + 1] = apply_layer(*layers[l], activations[l]);

      const Matrix residual = activations.back() - batch;
      const double scale = static_cast<double>(n * count);
      const double loss = residual.squaredNorm() / scale;
      if (!std::isfinite(loss)) {
        throw DivergenceError(epoch, "autoencoder training diverged at epoch " +
                                         std::to_string(epoch) + " (non-finite loss)");
      }

      ++step;
      const double bias1 = 1.0 - std::pow(options.beta1, static_cast<double>(step));
      const double bias2 = 1.0 - std::pow(options.beta2, static_cast<double>(step));
      Matrix delta = residual * (2.0 / scale);
      for (std::size_t l = layers.size(); l-- > 0;) {
        DenseLayer& layer = *layers[l];
        if (layer.activation == Activation::tanh) {
          delta.array() *= 1.0 - activations[l + 1].array().square();
        }
        const Matrix grad_w = delta * activations[l].transpose();
        const Vector grad_b = delta.rowwise().sum();
        if (l > 0) delta = layer.weights.transpose() * delta;

        AdamSlot& s = slots[l];
        s.m_w = options.beta1 * s.m_w + (1.0 - options.beta1) * grad_w;
        s.v_w = options.beta2 * s.v_w + (1.0 - options.beta2) * grad_w.cwiseAbs2();
        s.m_b = options.beta1 * s.m_b + (1.0 - options.beta1) * grad_b;
        s.v_b = options.beta2 * s.v_b + (1.0 - options.beta2) * grad_b.cwiseAbs2();
        layer.weights.array() -= options.learning_rate * (s.m_w.array() / bias1) /
                                 ((s.v_w.array() / bias2).sqrt() + options.epsilon);
        layer.bias.array() -= options.learning_rate * (s.m_b.array() / bias1) /
                              ((s.v_b.array() / bias2).sqrt() + options.epsilon);
      }
    }
    model.epochs_trained = epoch;
  }

  const Matrix recon = run_layers(model.decoder_layers, run_layers(model.encoder_layers, samples));
  model.final_train_mse = (recon - samples).squaredNorm() / static_cast<double>(samples.size());
  if (!std::isfinite(model.final_train_mse)) {
    throw DivergenceError(options.epochs, "autoencoder training diverged: non-finite final loss");
  }
  return model;
}

// --- Uniform reducer ---------------------------------------------------------

FittedDR::FittedDR(PcaModel model, Seed seed)
    : kind_(DrKind::pca), seed_(seed), model_(std::move(model)) {}
FittedDR::FittedDR(KpcaModel model, Seed seed)
    : kind_(DrKind::kpca_rbf), seed_(seed), model_(std::move(model)) {}
FittedDR::FittedDR(AutoencoderModel model, Seed seed)
    : kind_(DrKind::autoencoder), seed_(seed), model_(std::move(model)) {}

Index FittedDR::input_dims() const {
  return std::visit([](const auto& m) { return m.input_dims(); }, model_);
}

Index FittedDR::reduced_dims() const {
  return std::visit([](const auto& m) { return m.reduced_dims(); }, model_);
}

Vector FittedDR::transform(const Vector& x) const {
  require_length(x.size(), input_dims(), "transform");
  switch (kind_) {
    case DrKind::pca: return pca_transform(std::get<PcaModel>(model_), x);
    case DrKind::kpca_rbf: return kpca_transform(std::get<KpcaModel>(model_), x);
    case DrKind::autoencoder: return std::get<AutoencoderModel>(model_).encode(x);
  }
  throw std::logic_error("unreachable reducer kind");
}

DataMatrix FittedDR::transform_rows(const DataMatrix& batch) const {
  if (batch.cols() != input_dims()) {
    throw ShapeError("transform: batch has " + std::to_string(batch.cols()) +
                     " columns, reducer expects " + std::to_string(input_dims()));
  }
  DataMatrix out(batch.rows(), reduced_dims());
  if (batch.rows() == 0) return out;
  switch (kind_) {
    case DrKind::pca: {
      const auto& pca = std::get<PcaModel>(model_);
      out = (batch.rowwise() - pca.mean.transpose()) * pca.components.transpose();
      break;
    }
    case DrKind::autoencoder:
      out = run_layers(std::get<AutoencoderModel>(model_).encoder_layers, batch.transpose())
                .transpose();
      break;
    default:
      for (Index i = 0; i < batch.rows(); ++i) out.row(i) = transform(Vector(batch.row(i).transpose())).transpose();
  }
  return out;
}

std::optional<Matrix> FittedDR::intrinsic_weights() const {
  if (kind_ != DrKind::pca) return std::nullopt;
  return std::get<PcaModel>(model_).components;
}

DataMatrix dr_transform(const FittedDR& model, const DataMatrix& batch) {
  return model.transform_rows(batch);
}

FittedDR fit_dr(DrKind kind, const DataMatrix& data, Index n_components, Seed seed,
                const DrFitParams& params) {
  switch (kind) {
    case DrKind::pca: return FittedDR(pca_fit(data, n_components), seed);
    case DrKind::kpca_rbf: return FittedDR(kpca_fit(data, n_components, params.gamma), seed);
    case DrKind::autoencoder:
      return FittedDR(autoencoder_fit(data, n_components, seed, params.autoencoder), seed);
  }
  throw std::logic_error("unreachable reducer kind");
}

// --- Serialization -----------------------------------------------------------

namespace {

std::string_view to_string(Activation a) { return a == Activation::tanh ? "tanh" : "linear"; }

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "linear") return Activation::linear;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

Json layers_to_json(const std::vector<DenseLayer>& layers) {
  Json out = Json::array();
  for (const auto& l : layers) {
    out.push_back({{"weights", matrix_to_json(l.weights)},
                   {"bias", vector_to_json(l.bias)},
                   {"activation", to_string(l.activation)}});
  }
  return out;
}

std::vector<DenseLayer> layers_from_json(const Json& j) {
  std::vector<DenseLayer> layers;
  for (const auto& l : j) {
    DenseLayer layer;
    layer.weights = matrix_from_json(l.at("weights"));
    layer.bias = vector_from_json(l.at("bias"));
    layer.activation = parse_activation(l.at("activation").get<std::string>());
    if (layer.bias.size() != layer.weights.rows()) throw ShapeError("layer bias/weights mismatch");
    layers.push_back(std::move(layer));
  }
  if (layers.empty()) throw std::invalid_argument("autoencoder document has no layers");
  return layers;
}

}  // namespace

Json to_json(const FittedDR& model) {
  Json doc = {{"format_version", kFormatVersion},
              {"kind", to_string(model.kind())},
              {"input_dims", model.input_dims()},
              {"reduced_dims", model.reduced_dims()},
              {"seed", model.training_seed()}};
  switch (model.kind()) {
    case DrKind::pca: {
      const auto& m = std::get<PcaModel>(model.model());
      doc["components"] = matrix_to_json(m.components);
      doc["mean"] = vector_to_json(m.mean);
      doc["explained_variance"] = vector_to_json(m.explained_variance);
      doc["explained_variance_ratio"] = vector_to_json(m.explained_variance_ratio);
      break;
    }
    case DrKind::kpca_rbf: {
      const auto& m = std::get<KpcaModel>(model.model());
      doc["gamma"] = m.gamma;
      doc["training_rows"] = matrix_to_json(m.training_rows);
      doc["alphas"] = matrix_to_json(m.alphas);
      doc["eigenvalues"] = vector_to_json(m.eigenvalues);
      doc["kernel_row_means"] = vector_to_json(m.kernel_row_means);
      doc["kernel_grand_mean"] = m.kernel_grand_mean;
      break;
    }
    case DrKind::autoencoder: {
      const auto& m = std::get<AutoencoderModel>(model.model());
      doc["hidden_width"] = m.hidden_width;
      doc["epochs_trained"] = m.epochs_trained;
      doc["final_train_mse"] = m.final_train_mse;
      doc["encoder_layers"] = layers_to_json(m.encoder_layers);
      doc["decoder_layers"] = layers_to_json(m.decoder_layers);
      break;
    }
  }
  return doc;
}

FittedDR fitted_dr_from_json(const Json& doc) {
  const int version = doc.at("format_version").get<int>();
  if (version != kFormatVersion) {
    throw std::invalid_argument("unsupported model format_version " + std::to_string(version));
  }
  const DrKind kind = parse_dr_kind(doc.at("kind").get<std::string>());
  const auto n = doc.at("input_dims").get<Index>();
  const auto nr = doc.at("reduced_dims").get<Index>();
  const auto seed = doc.at("seed").get<Seed>();

  auto check = [&](const FittedDR& fitted) {
    if (fitted.input_dims() != n || fitted.reduced_dims() != nr) {
      throw ShapeError("model document dimensions disagree with its arrays");
    }
    return fitted;
  };

  switch (kind) {
    case DrKind::pca: {
      PcaModel m;
      m.components = matrix_from_json(doc.at("components"), n);
      m.mean = vector_from_json(doc.at("mean"));
      m.explained_variance = vector_from_json(doc.at("explained_variance"));
      m.explained_variance_ratio = vector_from_json(doc.at("explained_variance_ratio"));
      require_length(m.mean.size(), n, "pca mean");
      return check(FittedDR(std::move(m), seed));
    }
    case DrKind::kpca_rbf: {
      KpcaModel m;
      m.gamma = doc.at("gamma").get<double>();
      m.training_rows = matrix_from_json(doc.at("training_rows"), n);
      m.alphas = matrix_from_json(doc.at("alphas"), nr);
      m.eigenvalues = vector_from_json(doc.at("eigenvalues"));
      m.kernel_row_means = vector_from_json(doc.at("kernel_row_means"));
      m.kernel_grand_mean = doc.at("kernel_grand_mean").get<double>();
      require_length(m.kernel_row_means.size(), m.training_rows.rows(), "kpca row means");
      require_length(m.alphas.rows(), m.training_rows.rows(), "kpca alphas");
      return check(FittedDR(std::move(m), seed));
    }
    case DrKind::autoencoder: {
      AutoencoderModel m;
      m.hidden_width = doc.at("hidden_width").get<Index>();
      m.epochs_trained = doc.at("epochs_trained").get<int>();
      m.final_train_mse = doc.at("final_train_mse").get<double>();
      m.encoder_layers = layers_from_json(doc.at("encoder_layers"));
      m.decoder_layers = layers_from_json(doc.at("decoder_layers"));
      return check(FittedDR(std::move(m), seed));
    }
  }
  throw std::logic_error("unreachable reducer kind");
}

}  // namespace lxdr
