#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "strokeml/data_ingest.hpp"
#include "strokeml/matrix.hpp"

namespace strokeml {

/// Pearson correlation coefficient of two equal-length, non-constant series.
double pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationMatrix {
  std::vector<std::string> names;
  Matrix values;  ///< symmetric, unit diagonal

  double at(std::string_view a, std::string_view b) const;
  std::string to_csv() const;
};

CorrelationMatrix correlation_matrix(const EncodedMatrix& data);

/// Area under the ROC curve of `scores` against binary `labels`, via the
/// Mann-Whitney rank statistic with midranks for ties.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct ImportanceEntry {
  std::string feature;
  double auc = 0.5;    ///< raw AUC of the column against the label
  double score = 0.5;  ///< max(auc, 1 - auc), in [0.5, 1]
  std::size_t rank = 0;  ///< 1 = most important
};

/// Entries sorted by rank.
struct ImportanceRanking {
  std::vector<ImportanceEntry> entries;

  std::vector<std::string> ordered_names() const;
  nlohmann::json to_json() const;
};

/// Model-free two-class importance: per-feature ROC AUC, folded so that
/// either direction of separation counts. Ties keep column order.
ImportanceRanking auc_importance(const EncodedMatrix& data);

struct Chads2Config {
  double age_threshold = 75.0;
  double diabetes_glucose_threshold = 200.0;
};

/// CHADS2 with the components this table can support: C = heart disease,
/// H = hypertension, A = age >= 75, D = glucose at or above the diabetes
/// threshold. Prior stroke (S) is the prediction target, so it scores 0.
int chads2_score(const EHRRecord& record, const Chads2Config& config = {});

struct Chads2Result {
  std::vector<int> scores;
  std::map<int, std::size_t> histogram;
  std::map<int, std::size_t> positives;
  std::map<int, double> stroke_proportion;
  /// Whether proportions never decrease with score over the attained scores.
  bool proportion_monotone = true;

  nlohmann::json to_json() const;
};

Chads2Result chads2_analysis(std::span<const EHRRecord> records, const Chads2Config& config = {});

}  // namespace strokeml
