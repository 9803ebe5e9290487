#include "strokeml/pca.hpp"

#include <algorithm>
#include <cmath>

#include "sorted_sum.hpp"
#include "strokeml/error.hpp"
#include "strokeml/text_io.hpp"

namespace strokeml {

StandardizedMatrix standardize(const EncodedMatrix& data) {
  const std::size_t n = data.rows();
  const std::size_t p = data.cols();
  if (n < 2) throw Error(ErrorKind::TooFewRows, "standardize needs >= 2 rows");
  StandardizedMatrix out{Matrix(n, p), std::vector<double>(p), std::vector<double>(p), data.feature_names};
  for (std::size_t j = 0; j < p; ++j) {
    const std::vector<double> column = data.features.column(j);
    const double mean = detail::sorted_sum(column) / static_cast<double>(n);
    std::vector<double> squares(n);
    for (std::size_t i = 0; i < n; ++i) squares[i] = (column[i] - mean) * (column[i] - mean);
    const double sd = std::sqrt(detail::sorted_sum(std::move(squares)) / static_cast<double>(n - 1));
    if (sd == 0.0) throw Error(ErrorKind::ZeroVariance, data.feature_names[j]);
    out.means[j] = mean;
    out.sds[j] = sd;
    for (std::size_t i = 0; i < n; ++i) out.z(i, j) = (data.features(i, j) - mean) / sd;
  }
  return out;
}

std::vector<double> PCAModel::explained_ratio() const {
  double total = 0.0;
  for (double l : eigenvalues) total += l;
  std::vector<double> out;
  for (double l : eigenvalues) out.push_back(l / total);
  return out;
}

double PCAModel::cumulative_ratio(std::size_t k) const {
  const auto r = explained_ratio();
  double s = 0.0;
  for (std::size_t i = 0; i < std::min(k, r.size()); ++i) s += r[i];
  return s;
}

nlohmann::json PCAModel::to_json() const {
  nlohmann::json vectors = nlohmann::json::array();
  for (std::size_t c = 0; c < dims(); ++c) vectors.push_back(loadings.column(c));
  return {{"features", names},     {"means", means},          {"sds", sds},
          {"eigenvalues", eigenvalues}, {"explained_ratio", explained_ratio()}, {"loadings", vectors}};
}

PCAModel fit_pca(const EncodedMatrix& data) {
  const StandardizedMatrix s = standardize(data);
  const std::size_t n = s.z.rows();
  const std::size_t p = s.z.cols();

  Matrix cov(p, p);
  std::vector<double> products(n);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a; b < p; ++b) {
      for (std::size_t i = 0; i < n; ++i) products[i] = s.z(i, a) * s.z(i, b);
      cov(a, b) = detail::sorted_sum(products) / static_cast<double>(n - 1);
      cov(b, a) = cov(a, b);
    }

  EigenDecomposition eig = eig_sym(cov);
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t largest = 0;
    for (std::size_t r = 1; r < p; ++r)
      if (std::abs(eig.vectors(r, c)) > std::abs(eig.vectors(largest, c))) largest = r;
    if (eig.vectors(largest, c) < 0.0)
      for (std::size_t r = 0; r < p; ++r) eig.vectors(r, c) = -eig.vectors(r, c);
  }
  return {s.names, s.means, s.sds, std::move(eig.values), std::move(eig.vectors)};
}

std::vector<LoadingRow> loadings_report(const PCAModel& model, double threshold) {
  std::vector<LoadingRow> rows;
  const bool has_pc2 = model.dims() >= 2;
  for (std::size_t i = 0; i < model.dims(); ++i) {
    LoadingRow r;
    r.feature = model.names[i];
    r.pc1 = model.loadings(i, 0);
    r.pc2 = has_pc2 ? model.loadings(i, 1) : 0.0;
    r.strong_pc1 = std::abs(r.pc1) > threshold;
    r.strong_pc2 = std::abs(r.pc2) > threshold;
    rows.push_back(r);
  }
  return rows;
}

std::vector<BiplotArrow> biplot_coords(const PCAModel& model) {
  const double s1 = std::sqrt(std::max(model.eigenvalues.at(0), 0.0));
  const double s2 = model.dims() >= 2 ? std::sqrt(std::max(model.eigenvalues[1], 0.0)) : 0.0;
  std::vector<BiplotArrow> out;
  for (std::size_t i = 0; i < model.dims(); ++i) {
    out.push_back({model.names[i], model.loadings(i, 0) * s1, model.dims() >= 2 ? model.loadings(i, 1) * s2 : 0.0});
  }
  return out;
}

ScoreMatrix transform(const PCAModel& model, const EncodedMatrix& data, std::size_t k) {
  const std::size_t p = model.dims();
  if (k < 1 || k > p) throw Error(ErrorKind::InvalidArgument, "component count must be in [1, " + std::to_string(p) + "]");
  if (data.feature_names != model.names) throw Error(ErrorKind::SchemaMismatch, "columns differ from the fitted model");

  ScoreMatrix out{Matrix(data.rows(), k), std::vector<double>(data.rows(), 0.0)};
  std::vector<double> z(p);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    double norm2 = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      z[j] = (data.features(i, j) - model.means[j]) / model.sds[j];
      norm2 += z[j] * z[j];
    }
    double plane2 = 0.0;
    for (std::size_t c = 0; c < std::max<std::size_t>(k, std::min<std::size_t>(2, p)); ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < p; ++j) s += z[j] * model.loadings(j, c);
      if (c < k) out.scores(i, c) = s;
      if (c < 2) plane2 += s * s;
    }
    out.cos2[i] = norm2 > 0.0 ? std::min(1.0, plane2 / norm2) : 0.0;
  }
  return out;
}

EncodedMatrix project(const PCAModel& model, const EncodedMatrix& data, std::size_t k) {
  ScoreMatrix s = transform(model, data, k);
  EncodedMatrix out;
  out.features = std::move(s.scores);
  out.labels = data.labels;
  out.row_ids = data.row_ids;
  out.source = data.source;
  out.encoding_digest = data.encoding_digest;
  for (std::size_t c = 0; c < k; ++c) out.feature_names.push_back("PC" + std::to_string(c + 1));
  return out;
}

std::string scree_csv(const PCAModel& model) {
  std::string out = "component,eigenvalue,ratio,cumulative\n";
  const auto ratio = model.explained_ratio();
  double cum = 0.0;
  for (std::size_t i = 0; i < ratio.size(); ++i) {
    cum += ratio[i];
    out += std::to_string(i + 1) + ',' + format_double(model.eigenvalues[i]) + ',' + format_double(ratio[i]) + ',' +
           format_double(cum) + '\n';
  }
  return out;
}

std::string loadings_csv(const std::vector<LoadingRow>& rows) {
  std::string out = "feature,pc1,pc2,abs_pc1,abs_pc2,strong_pc1,strong_pc2\n";
  for (const auto& r : rows) {
    out += r.feature + ',' + format_double(r.pc1) + ',' + format_double(r.pc2) + ',' + format_double(std::abs(r.pc1)) +
           ',' + format_double(std::abs(r.pc2)) + ',' + (r.strong_pc1 ? "1" : "0") + ',' + (r.strong_pc2 ? "1" : "0") +
           '\n';
  }
  return out;
}

std::string biplot_csv(const std::vector<BiplotArrow>& arrows) {
  std::string out = "feature,x,y,norm\n";
  for (const auto& a : arrows) {
    out += a.feature + ',' + format_double(a.x) + ',' + format_double(a.y) + ',' + format_double(std::hypot(a.x, a.y)) +
           '\n';
  }
  return out;
}

std::string scores_csv(const ScoreMatrix& scores, const std::vector<int>& labels) {
  std::string out = "score1,score2,cos2,stroke\n";
  for (std::size_t i = 0; i < scores.scores.rows(); ++i) {
    const double s2 = scores.scores.cols() >= 2 ? scores.scores(i, 1) : 0.0;
    out += format_double(scores.scores(i, 0)) + ',' + format_double(s2) + ',' + format_double(scores.cos2[i]) + ',' +
           std::to_string(labels.at(i)) + '\n';
  }
  return out;
}

}  // namespace strokeml
