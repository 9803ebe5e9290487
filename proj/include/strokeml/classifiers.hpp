#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "strokeml/data_ingest.hpp"
#include "strokeml/matrix.hpp"

namespace strokeml {

enum class Family { MLP, DecisionTree, RandomForest, LinearSVM, Lasso, ElasticNet, CNN };

inline constexpr std::array<Family, 7> kAllFamilies = {
    Family::MLP, Family::DecisionTree, Family::RandomForest, Family::LinearSVM,
    Family::Lasso, Family::ElasticNet, Family::CNN,
};

/// Short command-line name: mlp, dt, rf, svm, lasso, elasticnet, cnn.
std::string_view to_string(Family family);
Family parse_family(std::string_view text);

// ---------------------------------------------------------------------------
// Hyperparameters. Defaults are the documented benchmark settings.

struct MlpParams {
  std::size_t hidden = 8;
  double learning_rate = 0.1;
  std::size_t epochs = 500;
  double init_range = 0.5;  ///< weights start uniform in [-init_range, init_range]
};

struct TreeParams {
  std::size_t max_depth = 6;
  std::size_t min_samples_split = 10;
  /// Features tried at each split; empty means all of them.
  std::optional<std::size_t> max_features;
};

struct ForestParams {
  std::size_t n_trees = 200;
  std::size_t max_depth = 12;
  std::size_t min_samples_split = 2;
  /// Features tried at each split; empty means floor(sqrt(p)).
  std::optional<std::size_t> max_features;
  bool bootstrap = true;
};

struct SvmParams {
  double lambda = 1e-3;
  std::size_t epochs = 1000;
};

/// Logistic loss + lambda * (alpha * |w|_1 + (1 - alpha) / 2 * |w|_2^2).
struct LogRegParams {
  double alpha = 1.0;
  double lambda = 0.01;
  std::size_t iterations = 2000;
  double tolerance = 1e-7;  ///< early stop on max coefficient change
};

struct CnnParams {
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  std::size_t epochs = 100;
};

using Hyperparameters = std::variant<MlpParams, TreeParams, ForestParams, SvmParams, LogRegParams, CnnParams>;

struct ModelSpec {
  Family family = Family::MLP;
  Hyperparameters params = MlpParams{};
  std::uint64_t seed = 0;

  /// Default hyperparameters for a family (ElasticNet uses alpha = 0.5).
  static ModelSpec defaults(Family family, std::uint64_t seed = 0);
  nlohmann::json hyperparameters_json() const;
  /// Overrides one hyperparameter by its JSON name, e.g. ("epochs", "1000").
  /// Unknown names and unparseable values throw InvalidArgument.
  void set_hyperparameter(std::string_view name, std::string_view value);
};

// ---------------------------------------------------------------------------
// Learned parameters

/// Per-column centering and scaling fitted on training rows only.
struct Standardizer {
  std::vector<double> means;
  std::vector<double> sds;  ///< constant columns get sd 1

  static Standardizer fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
};

struct MlpNetwork {
  std::size_t inputs = 0;
  std::size_t hidden = 0;
  Matrix w1;               ///< hidden x inputs
  std::vector<double> b1;  ///< hidden
  std::vector<double> w2;  ///< hidden
  double b2 = 0.0;

  MlpNetwork() = default;
  MlpNetwork(std::size_t inputs, std::size_t hidden);

  /// Flat layout: w1 row-major, b1, w2, b2.
  std::size_t parameter_count() const noexcept { return hidden * inputs + 2 * hidden + 1; }
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);
  double probability(std::span<const double> x) const;
};

struct MlpModel {
  Standardizer scaler;
  MlpNetwork net;
};

struct TreeNode {
  int feature = -1;  ///< -1 for leaves
  double threshold = 0.0;  ///< rows with x[feature] <= threshold go left
  int left = -1;
  int right = -1;
  int prediction = 0;
  std::size_t count0 = 0;  ///< training rows of each class that reached this node
  std::size_t count1 = 0;

  bool is_leaf() const noexcept { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  ///< nodes[0] is the root

  std::size_t leaf_index(std::span<const double> x) const;
  int predict(std::span<const double> x) const { return nodes[leaf_index(x)].prediction; }
  std::size_t depth() const;
};

struct TreeModel {
  DecisionTree tree;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
};

struct SvmModel {
  Standardizer scaler;
  std::vector<double> weights;
  double bias = 0.0;

  double decision(std::span<const double> x_standardized) const;
};

struct LogRegModel {
  Standardizer scaler;
  std::vector<double> weights;
  double intercept = 0.0;
};

/// Layer geometry for the 2x5-grid convolutional network.
struct ConvGeometry {
  std::size_t in_channels, out_channels, kernel, stride, padding;
};

struct TensorShape {
  std::size_t channels, height, width;
  std::size_t size() const noexcept { return channels * height * width; }
  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

namespace cnn_arch {
inline constexpr TensorShape kInput{1, 2, 5};
inline constexpr ConvGeometry kConv1{1, 16, 3, 1, 1};
inline constexpr ConvGeometry kConv2{16, 8, 2, 1, 0};
inline constexpr std::size_t kHidden = 16;
}  // namespace cnn_arch

/// Output shape of a convolution: (in + 2 * padding - kernel) / stride + 1.
TensorShape conv_output_shape(const TensorShape& in, const ConvGeometry& conv);

/// Activation sizes through the network, derived from the layer geometry:
/// input, conv1, conv2, flatten, linear1, linear2.
std::vector<std::size_t> cnn_shape_chain();
std::vector<TensorShape> cnn_tensor_shapes();

struct CnnNetwork {
  std::vector<double> conv1_w, conv1_b;  ///< [out][in][k][k], [out]
  std::vector<double> conv2_w, conv2_b;
  std::vector<double> fc1_w, fc1_b;      ///< [hidden][flatten], [hidden]
  std::vector<double> fc2_w;             ///< [hidden]
  double fc2_b = 0.0;

  /// Allocates zero-initialized parameters with the fixed architecture.
  CnnNetwork();

  std::size_t parameter_count() const noexcept;
  /// Flat layout: conv1_w, conv1_b, conv2_w, conv2_b, fc1_w, fc1_b, fc2_w, fc2_b.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);
  double probability(std::span<const double> x) const;
};

struct CnnModel {
  Standardizer scaler;
  CnnNetwork net;
};

using ModelParameters = std::variant<MlpModel, TreeModel, ForestModel, SvmModel, LogRegModel, CnnModel>;

/// A fitted model of any family. Immutable once trained.
struct TrainedModel {
  ModelSpec spec;
  std::vector<std::string> feature_names;
  ModelParameters params;
  std::vector<double> loss_trace;
  std::vector<std::string> warnings;

  Family family() const noexcept { return spec.family; }
  std::size_t input_count() const noexcept { return feature_names.size(); }

  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& j);
};

inline constexpr int kModelFormatVersion = 1;

// ---------------------------------------------------------------------------
// Training

TrainedModel train(const EncodedMatrix& data, const ModelSpec& spec);

TrainedModel train_mlp(const EncodedMatrix& data, const ModelSpec& spec);
TrainedModel train_decision_tree(const EncodedMatrix& data, const ModelSpec& spec);
TrainedModel train_random_forest(const EncodedMatrix& data, const ModelSpec& spec);
TrainedModel train_linear_svm(const EncodedMatrix& data, const ModelSpec& spec);
TrainedModel train_penalized_logreg(const EncodedMatrix& data, const ModelSpec& spec);
TrainedModel train_cnn(const EncodedMatrix& data, const ModelSpec& spec);

/// CART on already-selected rows. Exposed for the forest and for tests.
DecisionTree grow_tree(const Matrix& x, std::span<const int> y, std::span<const std::size_t> rows,
                       const TreeParams& params, std::uint64_t seed);

/// 1 - sum of squared class proportions.
double gini(std::size_t count0, std::size_t count1);

double soft_threshold(double value, double threshold);

// Losses and gradients on already standardized inputs; mean reduction.

double mlp_loss(const MlpNetwork& net, const Matrix& x, std::span<const int> y);
std::vector<double> mlp_gradient(const MlpNetwork& net, const Matrix& x, std::span<const int> y);
/// Gradient for a trained MLP on a raw batch (standardized with the model's
/// training statistics).
std::vector<double> mlp_gradient(const TrainedModel& model, const EncodedMatrix& batch);

double cnn_loss(const CnnNetwork& net, const Matrix& x, std::span<const int> y);
std::vector<double> cnn_gradient(const CnnNetwork& net, const Matrix& x, std::span<const int> y);

/// Penalized logistic objective for a coefficient vector on standardized x.
double logreg_objective(const LogRegModel& model, const LogRegParams& params, const Matrix& x, std::span<const int> y);

// ---------------------------------------------------------------------------
// Prediction

struct Prediction {
  std::vector<int> labels;
  /// P(stroke) for probabilistic families, vote share for trees/forests,
  /// empty for the SVM (decision values are in `scores`).
  std::vector<double> probabilities;
  std::vector<double> scores;
};

Prediction predict(const TrainedModel& model, const EncodedMatrix& data, double threshold = 0.5);

}  // namespace strokeml
