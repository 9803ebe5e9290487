#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "strokeml/classifiers.hpp"
#include "strokeml/data_ingest.hpp"
#include "strokeml/metrics.hpp"
#include "strokeml/pca.hpp"

namespace strokeml {

/// A, HD, AG, HT: the compact predictor set.
inline const std::vector<Feature> kTopFourFeatures = {
    Feature::Age, Feature::HeartDisease, Feature::AvgGlucose, Feature::Hypertension};

struct FeatureSet {
  enum class Kind { All, TopFour, Custom, PrincipalComponents };

  Kind kind = Kind::All;
  std::vector<Feature> custom;
  std::size_t components = 2;
  /// Fit the projection on the training fold only (otherwise on all input rows).
  bool pca_train_fold_only = true;

  static FeatureSet all() { return {}; }
  static FeatureSet top_four() { return {Kind::TopFour, {}, 2, true}; }
  static FeatureSet of(std::vector<Feature> features);
  static FeatureSet principal_components(std::size_t k, bool train_fold_only = true);

  /// Parses "all", "top4", "custom:A,HD,AG" or "pc:<k>".
  static FeatureSet parse(std::string_view text);
  std::string label() const;
  /// Selected original columns; empty for principal components.
  std::vector<Feature> features() const;
};

struct ExperimentConfig {
  FeatureSet features;
  ModelSpec model = ModelSpec::defaults(Family::MLP);
  std::size_t runs = 100;
  std::uint64_t master_seed = 42;
  double train_fraction = 0.70;
  bool stratified = true;
  AveragingMode metrics_mode = AveragingMode::PositiveClass;
  /// Downsample the majority class in every run.
  bool balanced = true;
  std::size_t threads = 1;

  nlohmann::json to_json() const;
  /// FNV-1a of the canonical JSON form (thread count excluded).
  std::string digest() const;
};

struct RunResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  MetricsReport report;
  std::size_t model_inputs = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
};

struct BenchmarkResult {
  std::vector<RunResult> runs;  ///< in run-index order
  AggregateReport aggregate;

  std::string runs_csv() const;
  nlohmann::json to_json() const;
};

struct PreparedFeatures {
  EncodedMatrix train;
  EncodedMatrix test;
  std::optional<PCAModel> projection;
};

/// Column selection or principal-component projection for one run. `all_rows`
/// is only used when the projection is fitted globally.
PreparedFeatures prepare_features(const FeatureSet& features, const EncodedMatrix& all_rows,
                                  const EncodedMatrix& train, const EncodedMatrix& test);

/// downsample -> split -> features -> train -> predict -> metrics.
RunResult run_single(const ExperimentConfig& config, const EncodedMatrix& data, std::uint64_t run_seed,
                     std::size_t index = 0);

/// Runs every seed of derive_run_seeds(master_seed, runs); results are the
/// same for any thread count.
BenchmarkResult run_benchmark(const ExperimentConfig& config, const EncodedMatrix& data);

struct AblationStage {
  std::string label;
  std::vector<Feature> features;
  BenchmarkResult result;
};

struct AblationResult {
  std::string kind;  ///< "add" or "remove"
  std::vector<AblationStage> stages;

  /// One row per (stage, run): stage,label,run,seed,accuracy,miss_rate.
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

/// Stage 0 uses `base`; each later stage appends the next feature of `order`
/// not already present, until all ten features are in.
AblationResult ablation_add(const ExperimentConfig& config, const EncodedMatrix& data, const std::vector<Feature>& base,
                            const std::vector<Feature>& order);

/// One stage per feature: all features except that one.
AblationResult ablation_remove(const ExperimentConfig& config, const EncodedMatrix& data);

}  // namespace strokeml
