#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "strokeml/data_ingest.hpp"

namespace strokeml {

struct SplitSpec {
  double train_fraction = 0.70;
  bool stratified = true;
  std::uint64_t seed = 0;
};

struct TrainTestSplit {
  EncodedMatrix train;
  EncodedMatrix test;
};

/// Keeps every positive row plus an equal number of negatives drawn
/// uniformly without replacement, then shuffles the result.
EncodedMatrix balanced_downsample(const EncodedMatrix& data, std::uint64_t seed);

/// Random train/test partition. When stratified, each class contributes
/// round(train_fraction * class_count) rows to train, clamped so both sides
/// keep at least one row of every class.
TrainTestSplit split(const EncodedMatrix& data, const SplitSpec& spec);

/// Per-run seeds: element i is splitmix64(master + (i + 1) * golden_gamma),
/// so seeds are pairwise distinct and independent of execution order.
std::vector<std::uint64_t> derive_run_seeds(std::uint64_t master_seed, std::size_t n_runs);

}  // namespace strokeml
