#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "strokeml/error.hpp"
#include "strokeml/pca.hpp"

using namespace strokeml;
using doctest::Approx;

namespace {

Matrix random_symmetric(std::size_t n, RandomSource& rng) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      m(i, j) = rng.uniform(-1.0, 1.0);
      m(j, i) = m(i, j);
    }
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) worst = std::max(worst, std::abs(a(i, j) - b(i, j)));
  return worst;
}

}  // namespace

TEST_SUITE("pca") {

TEST_CASE("standardize a small column") {
  const auto s = standardize(testing::make_data({{1}, {2}, {3}}, {0, 1, 0}));
  CHECK(s.means[0] == 2.0);
  CHECK(s.sds[0] == 1.0);
  CHECK(s.z(0, 0) == -1.0);
  CHECK(s.z(1, 0) == 0.0);
  CHECK(s.z(2, 0) == 1.0);
}

TEST_CASE("standardize is idempotent") {
  EncodedMatrix data = testing::random_data(60, 4, 2);
  const auto once = standardize(data);
  data.features = once.z;
  const auto twice = standardize(data);
  CHECK(max_abs_diff(once.z, twice.z) <= 1e-10);
}

TEST_CASE("constant column") {
  try {
    standardize(testing::make_data({{1, 4}, {2, 4}, {3, 4}}, {0, 1, 0}, {"a", "b"}));
    FAIL("expected ZeroVariance");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ZeroVariance);
    CHECK(std::string(e.what()).find('b') != std::string::npos);
  }
}

TEST_CASE("eigen of small matrices") {
  const auto id = eig_sym(Matrix::identity(4));
  for (double v : id.values) CHECK(v == Approx(1.0));

  Matrix d(2, 2);
  d(0, 0) = 1;
  d(1, 1) = 3;
  const auto diag = eig_sym(d);
  CHECK(diag.values[0] == Approx(3.0));
  CHECK(diag.values[1] == Approx(1.0));
  CHECK(std::abs(diag.vectors(1, 0)) == Approx(1.0));
  CHECK(std::abs(diag.vectors(0, 0)) == Approx(0.0));

  Matrix c(2, 2);
  c(0, 0) = 2;
  c(0, 1) = 1;
  c(1, 0) = 1;
  c(1, 1) = 2;
  const auto e = eig_sym(c);
  CHECK(e.values[0] == Approx(3.0).epsilon(1e-14));
  CHECK(e.values[1] == Approx(1.0).epsilon(1e-14));
  const double h = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(e.vectors(0, 0)) == Approx(h));
  CHECK(e.vectors(0, 0) * e.vectors(1, 0) > 0.0);
  CHECK(e.vectors(0, 1) * e.vectors(1, 1) < 0.0);
}

TEST_CASE("eigen residual and orthonormality on random matrices") {
  RandomSource rng(123);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 11;
    const Matrix a = random_symmetric(n, rng);
    const auto e = eig_sym(a);
    Matrix lambda(n, n);
    for (std::size_t i = 0; i < n; ++i) lambda(i, i) = e.values[i];
    CHECK(max_abs_diff(a * e.vectors, e.vectors * lambda) <= 1e-8);
    CHECK(max_abs_diff(e.vectors.transpose() * e.vectors, Matrix::identity(n)) <= 1e-8);
    CHECK(std::is_sorted(e.values.rbegin(), e.values.rend()));
  }
}

TEST_CASE("non-symmetric input") {
  Matrix a(2, 2);
  a(0, 1) = 1.0;
  try {
    eig_sym(a);
    FAIL("expected NotSymmetric");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotSymmetric);
  }
}

TEST_CASE("pca invariants on the synthetic cohort") {
  const EncodedMatrix& data = testing::cohort();
  const PCAModel model = fit_pca(data);
  REQUIRE(model.dims() == 10);

  double total = 0.0;
  for (double l : model.eigenvalues) total += l;
  CHECK(total == Approx(10.0).epsilon(1e-8));
  CHECK(max_abs_diff(model.loadings.transpose() * model.loadings, Matrix::identity(10)) <= 1e-8);

  for (std::size_t c = 0; c < 10; ++c) {
    double sq = 0.0;
    std::size_t largest = 0;
    for (std::size_t r = 0; r < 10; ++r) {
      sq += model.loadings(r, c) * model.loadings(r, c);
      if (std::abs(model.loadings(r, c)) > std::abs(model.loadings(largest, c))) largest = r;
    }
    CHECK(sq == Approx(1.0).epsilon(1e-8));
    CHECK(model.loadings(largest, c) > 0.0);
  }
  CHECK(model.cumulative_ratio(10) == Approx(1.0));
}

TEST_CASE("full-rank reconstruction") {
  const EncodedMatrix& data = testing::cohort();
  const PCAModel model = fit_pca(data);
  const ScoreMatrix s = transform(model, data, 10);
  const Matrix back = s.scores * model.loadings.transpose();
  CHECK(max_abs_diff(back, standardize(data).z) <= 1e-8);
}

TEST_CASE("eigenvalues ignore row order") {
  const EncodedMatrix& data = testing::cohort();
  std::vector<std::size_t> order(data.rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = order.size() - 1 - i;
  RandomSource rng(6);
  rng.shuffle(std::span<std::size_t>(order));
  CHECK(fit_pca(data).eigenvalues == fit_pca(data.select_rows(order)).eigenvalues);
}

TEST_CASE("one dominant direction") {
  RandomSource rng(10);
  EncodedMatrix data;
  data.features = Matrix(500, 5);
  for (std::size_t i = 0; i < 500; ++i) {
    const double t = rng.normal();
    for (std::size_t j = 0; j < 5; ++j) data.features(i, j) = (j + 1.0) * t + 1e-3 * rng.normal();
    data.labels.push_back(static_cast<int>(i % 2));
    data.row_ids.push_back(i);
  }
  data.feature_names = {"a", "b", "c", "d", "e"};
  CHECK(fit_pca(data).explained_ratio()[0] > 0.999);
}

TEST_CASE("score variance per axis matches the eigenvalues") {
  const EncodedMatrix data = testing::random_data(2000, 6, 17);
  const PCAModel model = fit_pca(data);
  const ScoreMatrix s = transform(model, data, 2);
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < s.scores.rows(); ++i) mean += s.scores(i, c);
    mean /= static_cast<double>(s.scores.rows());
    double var = 0.0;
    for (std::size_t i = 0; i < s.scores.rows(); ++i) var += (s.scores(i, c) - mean) * (s.scores(i, c) - mean);
    var /= static_cast<double>(s.scores.rows() - 1);
    CHECK(var == Approx(model.eigenvalues[c]).epsilon(1e-9));
  }
}

TEST_CASE("observation at the means") {
  const EncodedMatrix data = testing::random_data(100, 3, 4);
  const PCAModel model = fit_pca(data);
  EncodedMatrix centre = data.select_rows(std::vector<std::size_t>{0});
  for (std::size_t j = 0; j < 3; ++j) centre.features(0, j) = model.means[j];
  const ScoreMatrix s = transform(model, centre, 3);
  for (std::size_t c = 0; c < 3; ++c) CHECK(s.scores(0, c) == Approx(0.0));
  CHECK(s.cos2[0] == 0.0);
}

TEST_CASE("cos2 lies in [0, 1]") {
  const EncodedMatrix& data = testing::cohort();
  const ScoreMatrix s = transform(fit_pca(data), data, 2);
  for (double c : s.cos2) {
    CHECK(c >= 0.0);
    CHECK(c <= 1.0 + 1e-12);
  }
}

TEST_CASE("transform checks the schema") {
  const EncodedMatrix data = testing::random_data(50, 3, 1);
  const PCAModel model = fit_pca(data);
  EncodedMatrix renamed = data;
  renamed.feature_names[0] = "other";
  CHECK_THROWS_AS(transform(model, renamed, 2), Error);
  CHECK_THROWS_AS(transform(model, data, 0), Error);
  CHECK_THROWS_AS(transform(model, data, 4), Error);
}

TEST_CASE("loadings report and biplot") {
  const PCAModel model = fit_pca(testing::cohort());
  const auto rows = loadings_report(model);
  REQUIRE(rows.size() == 10);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].pc1 == model.loadings(i, 0));
    CHECK(rows[i].strong_pc1 == (std::abs(rows[i].pc1) > 0.31));
    CHECK(rows[i].strong_pc2 == (std::abs(rows[i].pc2) > 0.31));
  }
  const auto arrows = biplot_coords(model);
  for (std::size_t i = 0; i < arrows.size(); ++i) {
    CHECK(arrows[i].x == Approx(model.loadings(i, 0) * std::sqrt(model.eigenvalues[0])));
    CHECK(arrows[i].y == Approx(model.loadings(i, 1) * std::sqrt(model.eigenvalues[1])));
  }
}

TEST_CASE("zero second eigenvalue gives flat biplot") {
  PCAModel model;
  model.names = {"a", "b"};
  model.means = {0, 0};
  model.sds = {1, 1};
  model.eigenvalues = {2.0, 0.0};
  model.loadings = Matrix::identity(2);
  for (const auto& a : biplot_coords(model)) CHECK(a.y == 0.0);
}

TEST_CASE("age is a strong PC1 contributor in the cohort") {
  const PCAModel model = fit_pca(testing::cohort());
  CHECK(loadings_report(model)[1].strong_pc1);
}

TEST_CASE("project names its columns") {
  const EncodedMatrix data = testing::random_data(40, 4, 5);
  const EncodedMatrix p = project(fit_pca(data), data, 2);
  CHECK(p.feature_names == std::vector<std::string>{"PC1", "PC2"});
  CHECK(p.labels == data.labels);
  CHECK(p.row_ids == data.row_ids);
}

}
