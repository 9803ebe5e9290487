#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include "strokeml/data_ingest.hpp"
#include "strokeml/random.hpp"

namespace testing {

inline strokeml::EncodedMatrix make_data(std::initializer_list<std::initializer_list<double>> rows,
                                         std::vector<int> labels, std::vector<std::string> names = {}) {
  strokeml::EncodedMatrix m;
  const std::size_t cols = rows.size() ? rows.begin()->size() : names.size();
  m.features = strokeml::Matrix(rows.size(), cols);
  std::size_t r = 0;
  for (const auto& row : rows) {
    std::size_t c = 0;
    for (double v : row) m.features(r, c++) = v;
    ++r;
  }
  m.labels = std::move(labels);
  if (names.empty())
    for (std::size_t c = 0; c < cols; ++c) names.push_back("x" + std::to_string(c));
  m.feature_names = std::move(names);
  for (std::size_t i = 0; i < m.rows(); ++i) m.row_ids.push_back(i);
  return m;
}

/// Random matrix with Gaussian columns; labels from a noisy linear rule.
inline strokeml::EncodedMatrix random_data(std::size_t n, std::size_t p, std::uint64_t seed) {
  strokeml::RandomSource rng(seed);
  strokeml::EncodedMatrix m;
  m.features = strokeml::Matrix(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      m.features(i, j) = rng.normal();
      s += (j % 2 ? -0.5 : 1.0) * m.features(i, j);
    }
    m.labels.push_back(s + 0.5 * rng.normal() > 0.0 ? 1 : 0);
    m.row_ids.push_back(i);
  }
  for (std::size_t j = 0; j < p; ++j) m.feature_names.push_back("x" + std::to_string(j));
  return m;
}

/// Encoded synthetic cohort, cached per process.
inline const strokeml::EncodedMatrix& cohort() {
  static const strokeml::EncodedMatrix data = [] {
    const auto records = strokeml::synthesize(5110, 0.0487, 11);
    return strokeml::encode(records, strokeml::fit_encoding(records), "synthetic");
  }();
  return data;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("strokeml_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
