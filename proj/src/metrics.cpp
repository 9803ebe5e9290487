#include "strokeml/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "strokeml/error.hpp"
#include "strokeml/text_io.hpp"

namespace strokeml {

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> truth) {
  if (predictions.size() != truth.size()) {
    throw Error(ErrorKind::LengthMismatch,
                std::to_string(predictions.size()) + " predictions vs " + std::to_string(truth.size()) + " labels");
  }
  if (truth.empty()) throw Error(ErrorKind::LengthMismatch, "no rows to evaluate");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int p = predictions[i];
    const int t = truth[i];
    if ((p != 0 && p != 1) || (t != 0 && t != 1)) {
      throw Error(ErrorKind::InvalidLabel, "row " + std::to_string(i) + " has a label outside {0, 1}");
    }
    if (t == 1) {
      p == 1 ? ++cm.tp : ++cm.fn;
    } else {
      p == 1 ? ++cm.fp : ++cm.tn;
    }
  }
  return cm;
}

std::string_view to_string(AveragingMode mode) {
  return mode == AveragingMode::Macro ? "macro" : "positive";
}

AveragingMode parse_averaging_mode(std::string_view text) {
  const std::string t = to_lower(text);
  if (t == "positive" || t == "positive-class") return AveragingMode::PositiveClass;
  if (t == "macro") return AveragingMode::Macro;
  throw Error(ErrorKind::InvalidArgument, "unknown metrics mode '" + std::string(text) + "'");
}

nlohmann::json MetricsReport::to_json() const {
  return {{"precision", precision}, {"recall", recall},       {"f_score", f_score},
          {"accuracy", accuracy},   {"miss_rate", miss_rate}, {"fallout_rate", fallout_rate},
          {"mode", to_string(mode)}, {"zero_denominator", zero_denominator}};
}

namespace {

struct Ratio {
  double value;
  bool zero_denominator;
};

Ratio ratio(std::size_t num, std::size_t den) {
  if (den == 0) return {0.0, true};
  return {static_cast<double>(num) / static_cast<double>(den), false};
}

double harmonic(double a, double b) { return a + b > 0.0 ? 2.0 * a * b / (a + b) : 0.0; }

}  // namespace

MetricsReport compute_metrics(const ConfusionMatrix& cm, AveragingMode mode) {
  if (cm.total() == 0) throw Error(ErrorKind::EmptyConfusion, "confusion matrix has no counts");
  MetricsReport r;
  r.mode = mode;

  const Ratio ppv = ratio(cm.tp, cm.tp + cm.fp);
  const Ratio tpr = ratio(cm.tp, cm.tp + cm.fn);
  const Ratio fpr = ratio(cm.fp, cm.fp + cm.tn);
  r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  r.miss_rate = tpr.zero_denominator ? 0.0 : 1.0 - tpr.value;
  r.fallout_rate = fpr.value;
  r.zero_denominator = ppv.zero_denominator || tpr.zero_denominator || fpr.zero_denominator;

  if (mode == AveragingMode::PositiveClass) {
    r.precision = ppv.value;
    r.recall = tpr.value;
  } else {
    const Ratio npv = ratio(cm.tn, cm.tn + cm.fn);
    const Ratio tnr = ratio(cm.tn, cm.tn + cm.fp);
    r.zero_denominator = r.zero_denominator || npv.zero_denominator || tnr.zero_denominator;
    r.precision = 0.5 * (ppv.value + npv.value);
    r.recall = 0.5 * (tpr.value + tnr.value);
  }
  r.f_score = harmonic(r.precision, r.recall);
  return r;
}

double metric_value(const MetricsReport& report, std::string_view metric) {
  if (metric == "precision") return report.precision;
  if (metric == "recall") return report.recall;
  if (metric == "f_score") return report.f_score;
  if (metric == "accuracy") return report.accuracy;
  if (metric == "miss_rate") return report.miss_rate;
  if (metric == "fallout_rate") return report.fallout_rate;
  throw Error(ErrorKind::InvalidArgument, "unknown metric '" + std::string(metric) + "'");
}

const MetricSummary& AggregateReport::operator[](std::string_view metric) const {
  for (const auto& [name, summary] : metrics) {
    if (name == metric) return summary;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown metric '" + std::string(metric) + "'");
}

nlohmann::json AggregateReport::to_json() const {
  nlohmann::json m = nlohmann::json::object();
  for (const auto& [name, s] : metrics) {
    m[name] = {{"mean", s.mean}, {"variance", s.variance}, {"min", s.min}, {"max", s.max}};
  }
  return {{"runs", runs}, {"mode", to_string(mode)}, {"single_run", single_run}, {"metrics", m}};
}

AggregateReport aggregate(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw Error(ErrorKind::EmptyInput, "aggregate needs at least one report");
  AggregateReport out;
  out.runs = reports.size();
  out.mode = reports.front().mode;
  out.single_run = reports.size() == 1;
  for (std::string_view name : kMetricNames) {
    MetricSummary s;
    for (const auto& r : reports) s.values.push_back(metric_value(r, name));
    const double k = static_cast<double>(s.values.size());
    double sum = 0.0;
    for (double v : s.values) sum += v;
    const auto [lo, hi] = std::minmax_element(s.values.begin(), s.values.end());
    s.min = *lo;
    s.max = *hi;
    // Rounding can push the mean of near-identical values just outside them.
    s.mean = std::clamp(sum / k, s.min, s.max);
    if (s.values.size() > 1) {
      double ss = 0.0;
      for (double v : s.values) ss += (v - s.mean) * (v - s.mean);
      s.variance = ss / (k - 1.0);
    }
    out.metrics.emplace_back(std::string(name), std::move(s));
  }
  return out;
}

std::string histogram_csv(std::span<const double> values, double bin_width) {
  if (!(bin_width > 0.0 && bin_width <= 1.0)) throw Error(ErrorKind::InvalidArgument, "bin width must be in (0, 1]");
  const auto bins = static_cast<std::size_t>(std::ceil(1.0 / bin_width - 1e-9));
  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    auto b = static_cast<std::ptrdiff_t>(std::floor(v / bin_width + 1e-9));
    b = std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  std::string out = "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < bins; ++b) {
    // Dividing by the bin count per unit keeps edges like 0.7 free of
    // representation noise that b * 0.02 would add.
    const double per_unit = 1.0 / bin_width;
    const double lo = static_cast<double>(b) / per_unit;
    const double hi = std::min(1.0, static_cast<double>(b + 1) / per_unit);
    out += format_double(lo) + ',' + format_double(hi) + ',' + std::to_string(counts[b]) + '\n';
  }
  return out;
}

}  // namespace strokeml
