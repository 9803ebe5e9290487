#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "strokeml/error.hpp"
#include "strokeml/stats.hpp"

using namespace strokeml;
using doctest::Approx;

namespace {

// Pairwise definition of the AUC: P(score_pos > score_neg) + 0.5 P(tie).
double brute_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

EHRRecord patient(double age, int ht, int hd, double glucose, int stroke = 0) {
  EHRRecord r;
  r.gender = "Female";
  r.age = age;
  r.hypertension = ht;
  r.heart_disease = hd;
  r.ever_married = "Yes";
  r.work_type = "Private";
  r.residence_type = "Urban";
  r.avg_glucose_level = glucose;
  r.bmi = 25.0;
  r.smoking_status = "never smoked";
  r.stroke = stroke;
  return r;
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("pearson examples") {
  const std::vector<double> x = {1, 2, 3};
  CHECK(pearson(x, std::vector<double>{1, 2, 3}) == Approx(1.0).epsilon(1e-15));
  CHECK(pearson(x, std::vector<double>{3, 2, 1}) == Approx(-1.0).epsilon(1e-15));
  // sxy = 4, sxx = syy = 5
  CHECK(pearson(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}) == Approx(0.8).epsilon(1e-14));
}

TEST_CASE("pearson of affine images") {
  RandomSource rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(50), pos(50), neg(50);
    const double a = rng.uniform(0.1, 10.0);
    const double b = rng.uniform(-5.0, 5.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rng.normal();
      pos[i] = a * x[i] + b;
      neg[i] = -a * x[i] + b;
    }
    CHECK(std::abs(pearson(x, pos) - 1.0) <= 1e-12);
    CHECK(std::abs(pearson(x, neg) + 1.0) <= 1e-12);
  }
}

TEST_CASE("pearson errors") {
  const std::vector<double> x = {1, 2, 3};
  try {
    pearson(x, std::vector<double>{1, 2});
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::LengthMismatch);
  }
  try {
    pearson(x, std::vector<double>{4, 4, 4});
    FAIL("expected ZeroVariance");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ZeroVariance);
  }
}

TEST_CASE("correlation matrix structure") {
  const EncodedMatrix& data = testing::cohort();
  const CorrelationMatrix cm = correlation_matrix(data);
  REQUIRE(cm.values.rows() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(cm.values(i, i) == 1.0);
    for (std::size_t j = 0; j < 10; ++j) CHECK(cm.values(i, j) == cm.values(j, i));
  }
  CHECK(cm.at("age", "ever_married") == cm.values(1, 4));
}

TEST_CASE("correlation matrix is invariant under row permutation") {
  const EncodedMatrix& data = testing::cohort();
  std::vector<std::size_t> order(data.rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  RandomSource rng(8);
  rng.shuffle(std::span<std::size_t>(order));
  const CorrelationMatrix a = correlation_matrix(data);
  const CorrelationMatrix b = correlation_matrix(data.select_rows(order));
  CHECK(a.values == b.values);
}

TEST_CASE("constant column is rejected") {
  auto data = testing::make_data({{1, 5}, {2, 5}, {3, 5}}, {0, 1, 0});
  CHECK_THROWS_AS(correlation_matrix(data), Error);
}

TEST_CASE("roc auc matches the pairwise definition") {
  RandomSource rng(13);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> s(40);
    std::vector<int> y(40);
    for (std::size_t i = 0; i < s.size(); ++i) {
      y[i] = i % 3 == 0 ? 1 : 0;
      // coarse values so that ties occur
      s[i] = std::round(rng.normal() * 2.0 + y[i]);
    }
    CHECK(roc_auc(s, y) == Approx(brute_auc(s, y)).epsilon(1e-12));
  }
}

TEST_CASE("importance of a perfect separator") {
  RandomSource rng(2);
  EncodedMatrix data;
  data.features = Matrix(200, 3);
  for (std::size_t i = 0; i < 200; ++i) {
    const int label = i % 2;
    data.labels.push_back(label);
    data.row_ids.push_back(i);
    data.features(i, 0) = rng.normal();
    data.features(i, 1) = label;
    data.features(i, 2) = rng.normal();
  }
  data.feature_names = {"noise_a", "label_copy", "noise_b"};
  const ImportanceRanking ranking = auc_importance(data);
  REQUIRE(ranking.entries.size() == 3);
  CHECK(ranking.entries[0].feature == "label_copy");
  CHECK(ranking.entries[0].score == 1.0);
  CHECK(ranking.entries[0].rank == 1);
}

TEST_CASE("independent feature scores near 0.5") {
  RandomSource rng(4);
  EncodedMatrix data;
  data.features = Matrix(20000, 1);
  for (std::size_t i = 0; i < 20000; ++i) {
    data.features(i, 0) = rng.normal();
    data.labels.push_back(rng.bernoulli(0.3) ? 1 : 0);
    data.row_ids.push_back(i);
  }
  data.feature_names = {"noise"};
  CHECK(auc_importance(data).entries[0].score == Approx(0.5).epsilon(0.03));
}

TEST_CASE("importance is invariant under monotone transforms") {
  EncodedMatrix data = testing::cohort();
  const ImportanceRanking before = auc_importance(data);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    data.features(r, 1) = std::exp(data.features(r, 1) / 10.0);
    data.features(r, 7) = -3.0 * data.features(r, 7) + 1.0;
  }
  const ImportanceRanking after = auc_importance(data);
  REQUIRE(before.entries.size() == after.entries.size());
  for (std::size_t i = 0; i < before.entries.size(); ++i) {
    CHECK(before.entries[i].feature == after.entries[i].feature);
    CHECK(before.entries[i].score == Approx(after.entries[i].score).epsilon(1e-12));
  }
}

TEST_CASE("ties keep column order") {
  auto data = testing::make_data({{0, 0}, {1, 1}, {0, 0}, {1, 1}}, {0, 1, 0, 1}, {"b", "a"});
  const auto ranking = auc_importance(data);
  CHECK(ranking.ordered_names() == std::vector<std::string>{"b", "a"});
}

TEST_CASE("single class is rejected") {
  auto data = testing::make_data({{0}, {1}, {2}}, {1, 1, 1});
  try {
    auc_importance(data);
    FAIL("expected SingleClass");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingleClass);
  }
}

TEST_CASE("chads2 score table") {
  CHECK(chads2_score(patient(40, 0, 0, 90)) == 0);
  CHECK(chads2_score(patient(80, 1, 0, 90)) == 2);
  CHECK(chads2_score(patient(76, 1, 1, 210)) == 4);
  CHECK(chads2_score(patient(75, 0, 0, 200)) == 2);
  CHECK(chads2_score(patient(74.9, 0, 0, 199.9)) == 0);
}

TEST_CASE("chads2 score dominates any component switched off") {
  for (const auto& r : synthesize(500, 0.1, 31)) {
    const int full = chads2_score(r);
    auto off = r;
    off.hypertension = 0;
    CHECK(chads2_score(off) <= full);
    off = r;
    off.heart_disease = 0;
    CHECK(chads2_score(off) <= full);
    off = r;
    off.age = 30;
    CHECK(chads2_score(off) <= full);
    off = r;
    off.avg_glucose_level = 80;
    CHECK(chads2_score(off) <= full);
  }
}

TEST_CASE("chads2 analysis counts") {
  std::vector<EHRRecord> records = {patient(40, 0, 0, 90, 1), patient(41, 0, 0, 90), patient(42, 0, 0, 90),
                                    patient(43, 0, 0, 90)};
  const Chads2Result result = chads2_analysis(records);
  CHECK(result.histogram == std::map<int, std::size_t>{{0, 4}});
  CHECK(result.stroke_proportion.at(0) == 0.25);
  CHECK(result.proportion_monotone);

  records.push_back(patient(80, 1, 1, 250, 0));
  const Chads2Result mixed = chads2_analysis(records);
  CHECK(mixed.histogram.at(4) == 1);
  CHECK(mixed.stroke_proportion.at(4) == 0.0);
  CHECK_FALSE(mixed.proportion_monotone);
}

}
