#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace strokeml::detail {

/// Sum whose result depends only on the multiset of terms, not their order:
/// terms are sorted first, then added with Neumaier compensation.
inline double sorted_sum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  double carry = 0.0;
  for (double t : terms) {
    const double next = sum + t;
    carry += std::abs(sum) >= std::abs(t) ? (sum - next) + t : (t - next) + sum;
    sum = next;
  }
  return sum + carry;
}

}  // namespace strokeml::detail
