#include "strokeml/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sorted_sum.hpp"
#include "strokeml/error.hpp"
#include "strokeml/text_io.hpp"

namespace strokeml {

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  if (x.size() < 2) throw Error(ErrorKind::LengthMismatch, "need at least 2 observations");
  const double n = static_cast<double>(x.size());
  const double mx = detail::sorted_sum({x.begin(), x.end()}) / n;
  const double my = detail::sorted_sum({y.begin(), y.end()}) / n;
  std::vector<double> xy(x.size()), xx(x.size()), yy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    xy[i] = dx * dy;
    xx[i] = dx * dx;
    yy[i] = dy * dy;
  }
  const double sxy = detail::sorted_sum(std::move(xy));
  const double sxx = detail::sorted_sum(std::move(xx));
  const double syy = detail::sorted_sum(std::move(yy));
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::ZeroVariance, "constant input series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double CorrelationMatrix::at(std::string_view a, std::string_view b) const {
  const auto find = [&](std::string_view name) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw Error(ErrorKind::SchemaMismatch, "no column " + std::string(name));
    return static_cast<std::size_t>(it - names.begin());
  };
  return values(find(a), find(b));
}

std::string CorrelationMatrix::to_csv() const {
  std::string out = "feature";
  for (const auto& n : names) out += ',' + n;
  out += '\n';
  for (std::size_t i = 0; i < names.size(); ++i) {
    out += names[i];
    for (std::size_t j = 0; j < names.size(); ++j) out += ',' + format_double(values(i, j));
    out += '\n';
  }
  return out;
}

CorrelationMatrix correlation_matrix(const EncodedMatrix& data) {
  const std::size_t p = data.cols();
  if (data.rows() < 2) throw Error(ErrorKind::TooFewRows, "correlation needs >= 2 rows");
  std::vector<std::vector<double>> columns(p);
  for (std::size_t j = 0; j < p; ++j) {
    columns[j] = data.features.column(j);
    const auto [lo, hi] = std::minmax_element(columns[j].begin(), columns[j].end());
    if (*lo == *hi) throw Error(ErrorKind::ZeroVariance, data.feature_names[j]);
  }
  CorrelationMatrix cm{data.feature_names, Matrix(p, p)};
  for (std::size_t i = 0; i < p; ++i) {
    cm.values(i, i) = 1.0;
    for (std::size_t j = i + 1; j < p; ++j) {
      const double r = pearson(columns[i], columns[j]);
      cm.values(i, j) = r;
      cm.values(j, i) = r;
    }
  }
  return cm;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorKind::LengthMismatch, "scores vs labels");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        positive_rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorKind::SingleClass, "AUC needs both classes");
  const double np = static_cast<double>(n_pos);
  const double u = positive_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

std::vector<std::string> ImportanceRanking::ordered_names() const {
  std::vector<std::string> out;
  for (const auto& e : entries) out.push_back(e.feature);
  return out;
}

nlohmann::json ImportanceRanking::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : entries) {
    j.push_back({{"rank", e.rank}, {"feature", e.feature}, {"score", e.score}, {"auc", e.auc}});
  }
  return {{"method", "roc_auc_filter"}, {"ranking", j}};
}

ImportanceRanking auc_importance(const EncodedMatrix& data) {
  if (data.rows() < 2) throw Error(ErrorKind::TooFewRows, "importance needs >= 2 rows");
  if (data.count_label(1) == 0 || data.count_label(0) == 0) {
    throw Error(ErrorKind::SingleClass, "importance needs both classes");
  }
  ImportanceRanking ranking;
  for (std::size_t j = 0; j < data.cols(); ++j) {
    const auto column = data.features.column(j);
    const double auc = roc_auc(column, data.labels);
    ranking.entries.push_back({data.feature_names[j], auc, std::max(auc, 1.0 - auc), 0});
  }
  std::stable_sort(ranking.entries.begin(), ranking.entries.end(),
                   [](const ImportanceEntry& a, const ImportanceEntry& b) { return a.score > b.score; });
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) ranking.entries[i].rank = i + 1;
  return ranking;
}

int chads2_score(const EHRRecord& r, const Chads2Config& config) {
  const int c = r.heart_disease == 1 ? 1 : 0;
  const int h = r.hypertension == 1 ? 1 : 0;
  const int a = r.age >= config.age_threshold ? 1 : 0;
  const int d = r.avg_glucose_level >= config.diabetes_glucose_threshold ? 1 : 0;
  const int s = 0;
  return c + h + a + d + 2 * s;
}

nlohmann::json Chads2Result::to_json() const {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& [score, count] : histogram) {
    levels.push_back({{"score", score},
                      {"count", count},
                      {"stroke_count", positives.at(score)},
                      {"stroke_proportion", stroke_proportion.at(score)}});
  }
  return {{"levels", levels}, {"records", scores.size()}, {"proportion_monotone", proportion_monotone}};
}

Chads2Result chads2_analysis(std::span<const EHRRecord> records, const Chads2Config& config) {
  if (records.empty()) throw Error(ErrorKind::EmptyInput, "chads2_analysis needs records");
  Chads2Result result;
  for (const auto& r : records) {
    const int s = chads2_score(r, config);
    result.scores.push_back(s);
    ++result.histogram[s];
    result.positives[s] += r.stroke == 1 ? 1 : 0;
  }
  double previous = -1.0;
  for (const auto& [score, count] : result.histogram) {
    const double p = static_cast<double>(result.positives[score]) / static_cast<double>(count);
    result.stroke_proportion[score] = p;
    if (p < previous) result.proportion_monotone = false;
    previous = p;
  }
  return result;
}

}  // namespace strokeml
