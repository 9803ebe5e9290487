#include <cmath>
#include <string>

#include "doctest.h"
#include "strokeml/error.hpp"
#include "strokeml/metrics.hpp"

using namespace strokeml;
using doctest::Approx;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a strokeml::Error");
  return ErrorKind::Io;
}

MetricsReport with_accuracy(double a) {
  MetricsReport r;
  r.accuracy = a;
  return r;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("confusion counts") {
  const auto cm = confusion(std::vector<int>{1, 1, 0, 0}, std::vector<int>{1, 0, 0, 1});
  CHECK(cm == ConfusionMatrix{1, 1, 1, 1});

  const std::vector<int> truth = {1, 0, 1, 1, 0, 0, 0};
  const auto perfect = confusion(truth, truth);
  CHECK(perfect.fp == 0);
  CHECK(perfect.fn == 0);
  std::vector<int> inverted;
  for (int t : truth) inverted.push_back(1 - t);
  const auto wrong = confusion(inverted, truth);
  CHECK(wrong.tp == 0);
  CHECK(wrong.tn == 0);
  CHECK(wrong.total() == truth.size());
}

TEST_CASE("confusion errors") {
  CHECK(kind_of([] { confusion(std::vector<int>{1}, std::vector<int>{1, 0}); }) == ErrorKind::LengthMismatch);
  CHECK(kind_of([] { confusion(std::vector<int>{}, std::vector<int>{}); }) == ErrorKind::LengthMismatch);
  CHECK(kind_of([] { confusion(std::vector<int>{2}, std::vector<int>{1}); }) == ErrorKind::InvalidLabel);
}

TEST_CASE("positive-class metrics by hand") {
  const ConfusionMatrix cm{50, 20, 20, 10};
  const MetricsReport r = compute_metrics(cm);
  CHECK(r.recall == Approx(50.0 / 60.0));
  CHECK(r.miss_rate == Approx(10.0 / 60.0));
  CHECK(r.precision == Approx(50.0 / 70.0));
  CHECK(r.fallout_rate == 0.5);
  CHECK(r.accuracy == 0.7);
  const double p = 50.0 / 70.0, rc = 50.0 / 60.0;
  CHECK(r.f_score == Approx(2 * p * rc / (p + rc)));
  CHECK_FALSE(r.zero_denominator);
}

TEST_CASE("macro metrics by hand") {
  const MetricsReport r = compute_metrics({50, 20, 20, 10}, AveragingMode::Macro);
  const double p = 0.5 * (50.0 / 70.0 + 20.0 / 30.0);
  const double rc = 0.5 * (50.0 / 60.0 + 20.0 / 40.0);
  CHECK(r.precision == Approx(p));
  CHECK(r.recall == Approx(rc));
  CHECK(r.f_score == Approx(2 * p * rc / (p + rc)));
  CHECK(r.accuracy == 0.7);
  CHECK(r.miss_rate == Approx(10.0 / 60.0));
}

TEST_CASE("perfect classifier") {
  const MetricsReport r = compute_metrics({7, 0, 5, 0});
  CHECK(r.accuracy == 1.0);
  CHECK(r.miss_rate == 0.0);
  CHECK(r.fallout_rate == 0.0);
  CHECK(r.f_score == 1.0);
}

TEST_CASE("zero denominators are reported as 0 with a flag") {
  const MetricsReport r = compute_metrics({0, 0, 5, 3});
  CHECK(r.precision == 0.0);
  CHECK(r.zero_denominator);
  CHECK(r.miss_rate == 1.0);
  CHECK(kind_of([] { compute_metrics({}); }) == ErrorKind::EmptyConfusion);
}

TEST_CASE("miss rate complements recall") {
  for (std::size_t tp = 0; tp <= 40; ++tp)
    for (std::size_t fn = 0; fn <= 40; ++fn) {
      if (tp + fn == 0) continue;
      const MetricsReport r = compute_metrics({tp, 3, 4, fn});
      CHECK(r.miss_rate + r.recall == 1.0);
      CHECK(compute_metrics({tp, 3, 4, fn}).accuracy ==
            static_cast<double>(tp + 4) / static_cast<double>(tp + fn + 7));
    }
}

TEST_CASE("swapping the positive class") {
  const ConfusionMatrix cm{30, 12, 40, 9};
  const ConfusionMatrix swapped{cm.tn, cm.fn, cm.tp, cm.fp};
  const MetricsReport a = compute_metrics(cm);
  const MetricsReport b = compute_metrics(swapped);
  CHECK(a.accuracy == b.accuracy);
  CHECK(b.precision == Approx(40.0 / 49.0));  // NPV of the original
  CHECK(b.recall == Approx(40.0 / 52.0));     // specificity of the original
  CHECK(b.fallout_rate == Approx(a.miss_rate));
  CHECK(b.miss_rate == Approx(a.fallout_rate));
  const MetricsReport ma = compute_metrics(cm, AveragingMode::Macro);
  const MetricsReport mb = compute_metrics(swapped, AveragingMode::Macro);
  CHECK(ma.precision == Approx(mb.precision));
  CHECK(ma.recall == Approx(mb.recall));
}

TEST_CASE("averaging mode names") {
  CHECK(parse_averaging_mode("positive") == AveragingMode::PositiveClass);
  CHECK(parse_averaging_mode("macro") == AveragingMode::Macro);
  CHECK(to_string(AveragingMode::Macro) == "macro");
  CHECK_THROWS_AS(parse_averaging_mode("micro"), Error);
}

TEST_CASE("aggregate by hand") {
  const std::vector<MetricsReport> two = {with_accuracy(0.7), with_accuracy(0.8)};
  const AggregateReport a = aggregate(two);
  CHECK(a["accuracy"].mean == Approx(0.75));
  CHECK(a["accuracy"].variance == Approx(0.005));
  CHECK(a["accuracy"].values == std::vector<double>{0.7, 0.8});
  CHECK_FALSE(a.single_run);
}

TEST_CASE("aggregate degenerate cases") {
  const std::vector<MetricsReport> same(5, compute_metrics({10, 3, 8, 2}));
  const AggregateReport a = aggregate(same);
  for (const auto& [name, s] : a.metrics) CHECK(s.variance == 0.0);

  const std::vector<MetricsReport> one = {compute_metrics({10, 3, 8, 2})};
  const AggregateReport b = aggregate(one);
  CHECK(b.single_run);
  CHECK(b["recall"].mean == one[0].recall);
  CHECK(b["recall"].variance == 0.0);
  CHECK(kind_of([] { aggregate(std::vector<MetricsReport>{}); }) == ErrorKind::EmptyInput);
}

TEST_CASE("aggregate mean lies within the observed range") {
  std::vector<MetricsReport> reports;
  for (int i = 0; i < 37; ++i) reports.push_back(with_accuracy(0.1 + 0.1 * (i % 3)));
  for (int i = 0; i < 10; ++i) reports.push_back(with_accuracy(0.3));
  const AggregateReport a = aggregate(reports);
  for (const auto& [name, s] : a.metrics) {
    CHECK(s.mean >= s.min);
    CHECK(s.mean <= s.max);
  }
  const std::vector<MetricsReport> thirds(3, with_accuracy(0.1));
  CHECK(aggregate(thirds)["accuracy"].mean == 0.1);
}

TEST_CASE("histogram bins") {
  const std::vector<double> values = {0.70, 0.71, 0.7199, 0.76, 1.0, 0.0};
  const std::string csv = histogram_csv(values, 0.02);
  CHECK(csv.rfind("bin_lo,bin_hi,count\n", 0) == 0);
  CHECK(csv.find("\n0.7,0.72,3\n") != std::string::npos);
  CHECK(csv.find("\n0.76,0.78,1\n") != std::string::npos);
  CHECK(csv.find("\n0.98,1,1\n") != std::string::npos);
  CHECK(csv.find("\n0,0.02,1\n") != std::string::npos);
  CHECK_THROWS_AS(histogram_csv(values, 0.0), Error);
}

TEST_CASE("report JSON names every metric") {
  const auto j = compute_metrics({5, 1, 4, 2}).to_json();
  for (auto name : kMetricNames) CHECK(j.contains(std::string(name)));
}

}
