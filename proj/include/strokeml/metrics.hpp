#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace strokeml {

/// Counts with stroke (label 1) as the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> truth);

enum class AveragingMode { PositiveClass, Macro };

std::string_view to_string(AveragingMode mode);
AveragingMode parse_averaging_mode(std::string_view text);

struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  double accuracy = 0.0;
  double miss_rate = 0.0;
  double fallout_rate = 0.0;
  AveragingMode mode = AveragingMode::PositiveClass;
  /// Set when some ratio had a zero denominator and was reported as 0.
  bool zero_denominator = false;

  nlohmann::json to_json() const;
  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Positive-class mode reports precision/recall/F of the stroke class.
/// Macro mode averages precision and recall over both classes, with F the
/// harmonic mean of the averaged pair. Miss and fall-out rates are always
/// FN/(FN+TP) and FP/(FP+TN).
MetricsReport compute_metrics(const ConfusionMatrix& cm, AveragingMode mode = AveragingMode::PositiveClass);

inline constexpr std::array<std::string_view, 6> kMetricNames = {
    "precision", "recall", "f_score", "accuracy", "miss_rate", "fallout_rate",
};

double metric_value(const MetricsReport& report, std::string_view metric);

struct MetricSummary {
  double mean = 0.0;
  double variance = 0.0;  ///< sample variance, 0 for a single value
  double min = 0.0;
  double max = 0.0;
  std::vector<double> values;  ///< per-run values in input order
};

struct AggregateReport {
  std::size_t runs = 0;
  AveragingMode mode = AveragingMode::PositiveClass;
  /// True when there was a single run and variances are 0 by definition.
  bool single_run = false;
  std::vector<std::pair<std::string, MetricSummary>> metrics;  ///< in kMetricNames order

  const MetricSummary& operator[](std::string_view metric) const;
  nlohmann::json to_json() const;
};

AggregateReport aggregate(std::span<const MetricsReport> reports);

/// Fixed-width histogram over [0, 1] as CSV rows: bin_lo,bin_hi,count.
std::string histogram_csv(std::span<const double> values, double bin_width = 0.02);

}  // namespace strokeml
