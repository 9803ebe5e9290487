#pragma once

#include <cmath>
#include <string>

#include "strokeml/classifiers.hpp"
#include "strokeml/error.hpp"

namespace strokeml::detail {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Binary cross-entropy of logit z against label y, log(1 + e^z) - y z.
inline double logit_loss(double z, int y) {
  const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return softplus - (y == 1 ? z : 0.0);
}

inline void require_rows(const EncodedMatrix& data, std::size_t n, const char* what) {
  if (data.rows() < n) {
    throw Error(ErrorKind::TooFewRows, std::string(what) + " needs at least " + std::to_string(n) + " rows");
  }
}

inline void require_both_classes(const EncodedMatrix& data, const char* what) {
  if (data.count_label(0) == 0 || data.count_label(1) == 0) {
    throw Error(ErrorKind::SingleClass, std::string(what) + " needs rows of both classes");
  }
}

inline void require_finite(double loss, const char* what) {
  if (!std::isfinite(loss)) throw Error(ErrorKind::NonFiniteLoss, std::string(what) + " loss is not finite");
}

template <typename P>
const P& params_as(const ModelSpec& spec, const char* what) {
  if (const P* p = std::get_if<P>(&spec.params)) return *p;
  throw Error(ErrorKind::InvalidArgument, std::string(what) + ": hyperparameters do not match the model family");
}

}  // namespace strokeml::detail
