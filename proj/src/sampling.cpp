#include "strokeml/sampling.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "strokeml/error.hpp"
#include "strokeml/random.hpp"

namespace strokeml {

namespace {

std::vector<std::size_t> rows_with_label(const EncodedMatrix& data, int label) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    if (data.labels[i] == label) out.push_back(i);
  }
  return out;
}

std::size_t train_count(std::size_t n, double fraction) {
  const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

}  // namespace

EncodedMatrix balanced_downsample(const EncodedMatrix& data, std::uint64_t seed) {
  const auto positives = rows_with_label(data, 1);
  auto negatives = rows_with_label(data, 0);
  if (positives.empty()) throw Error(ErrorKind::NoMinoritySamples, "no stroke-positive rows");
  if (negatives.size() < positives.size()) {
    throw Error(ErrorKind::MajoritySmallerThanMinority,
                std::to_string(negatives.size()) + " negatives < " + std::to_string(positives.size()) + " positives");
  }

  RandomSource rng(seed);
  // Partial Fisher-Yates: the first k slots become a uniform k-subset.
  const std::size_t k = positives.size();
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_index(negatives.size() - i);
    std::swap(negatives[i], negatives[j]);
  }

  std::vector<std::size_t> rows = positives;
  rows.insert(rows.end(), negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(k));
  rng.shuffle(std::span<std::size_t>(rows));
  return data.select_rows(rows);
}

TrainTestSplit split(const EncodedMatrix& data, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "train_fraction must be in (0, 1)");
  }
  RandomSource rng(spec.seed);
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;

  if (spec.stratified) {
    std::array<std::vector<std::size_t>, 2> by_class{rows_with_label(data, 0), rows_with_label(data, 1)};
    for (int label : {0, 1}) {
      if (by_class[label].size() < 2) {
        throw Error(ErrorKind::TooFewRows, "stratified split needs >= 2 rows of class " + std::to_string(label));
      }
    }
    // whole-table count first, leftover rows go to the larger fractional part
    const std::size_t total = train_count(data.rows(), spec.train_fraction);
    std::array<double, 2> exact{};
    std::array<std::size_t, 2> quota{};
    for (int c : {0, 1}) {
      exact[c] = static_cast<double>(by_class[c].size()) * spec.train_fraction;
      quota[c] = static_cast<std::size_t>(std::floor(exact[c]));
    }
    const double frac0 = exact[0] - std::floor(exact[0]);
    const double frac1 = exact[1] - std::floor(exact[1]);
    int first = frac0 > frac1 ? 0 : frac1 > frac0 ? 1 : static_cast<int>(rng.uniform_index(2));
    for (std::size_t extra = total - std::min(total, quota[0] + quota[1]); extra > 0; --extra, first = 1 - first) {
      ++quota[first];
    }
    for (int label : {0, 1}) {
      auto& rows = by_class[label];
      rng.shuffle(std::span<std::size_t>(rows));
      const std::size_t k = std::clamp<std::size_t>(quota[label], 1, rows.size() - 1);
      train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k));
      test_rows.insert(test_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(k), rows.end());
    }
    rng.shuffle(std::span<std::size_t>(train_rows));
    rng.shuffle(std::span<std::size_t>(test_rows));
  } else {
    if (data.rows() < 2) throw Error(ErrorKind::TooFewRows, "split needs >= 2 rows");
    std::vector<std::size_t> rows(data.rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    rng.shuffle(std::span<std::size_t>(rows));
    const std::size_t k = train_count(rows.size(), spec.train_fraction);
    train_rows.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k));
    test_rows.assign(rows.begin() + static_cast<std::ptrdiff_t>(k), rows.end());
  }
  return {data.select_rows(train_rows), data.select_rows(test_rows)};
}

std::vector<std::uint64_t> derive_run_seeds(std::uint64_t master_seed, std::size_t n_runs) {
  constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  std::vector<std::uint64_t> seeds(n_runs);
  for (std::size_t i = 0; i < n_runs; ++i) seeds[i] = splitmix64(master_seed + (i + 1) * kGamma);
  return seeds;
}

}  // namespace strokeml
