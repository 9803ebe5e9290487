#include <algorithm>
#include <cmath>

#include "model_internal.hpp"
#include "strokeml/classifiers.hpp"
#include "strokeml/error.hpp"

namespace strokeml {

double SvmModel::decision(std::span<const double> x) const { return dot(weights, x) + bias; }

TrainedModel train_linear_svm(const EncodedMatrix& data, const ModelSpec& spec) {
  const auto& params = detail::params_as<SvmParams>(spec, "train_linear_svm");
  detail::require_both_classes(data, "train_linear_svm");
  if (!(params.lambda > 0.0)) throw Error(ErrorKind::InvalidArgument, "SVM lambda must be positive");

  SvmModel model{Standardizer::fit(data.features), std::vector<double>(data.cols(), 0.0), 0.0};
  const Matrix x = model.scaler.apply(data.features);
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double radius = 1.0 / std::sqrt(params.lambda);

  TrainedModel out{spec, data.feature_names, {}, {}, {}};
  std::vector<double> grad_w(p);
  for (std::size_t t = 1; t <= params.epochs; ++t) {
    const double eta = 1.0 / (params.lambda * static_cast<double>(t));
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    double grad_b = 0.0;
    double hinge = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double yi = data.labels[i] == 1 ? 1.0 : -1.0;
      const double margin = yi * model.decision(x.row(i));
      if (margin < 1.0) {
        hinge += 1.0 - margin;
        const auto row = x.row(i);
        for (std::size_t j = 0; j < p; ++j) grad_w[j] -= yi * row[j] * inv_n;
        grad_b -= yi * inv_n;
      }
    }
    double norm2 = 0.0;
    for (double w : model.weights) norm2 += w * w;
    const double objective = 0.5 * params.lambda * norm2 + hinge * inv_n;
    detail::require_finite(objective, "SVM");
    out.loss_trace.push_back(objective);

    for (std::size_t j = 0; j < p; ++j) {
      model.weights[j] -= eta * (params.lambda * model.weights[j] + grad_w[j]);
    }
    model.bias -= eta * grad_b;

    // Pegasos projection onto the ball that contains the optimum.
    norm2 = 0.0;
    for (double w : model.weights) norm2 += w * w;
    if (norm2 > radius * radius) {
      const double shrink = radius / std::sqrt(norm2);
      for (double& w : model.weights) w *= shrink;
    }
  }
  out.params = std::move(model);
  return out;
}

double soft_threshold(double value, double threshold) {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

double logreg_objective(const LogRegModel& model, const LogRegParams& params, const Matrix& x,
                        std::span<const int> y) {
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    loss += detail::logit_loss(dot(model.weights, x.row(i)) + model.intercept, y[i]);
  }
  loss /= static_cast<double>(x.rows());
  double l1 = 0.0, l2 = 0.0;
  for (double w : model.weights) {
    l1 += std::abs(w);
    l2 += w * w;
  }
  return loss + params.lambda * (params.alpha * l1 + 0.5 * (1.0 - params.alpha) * l2);
}

TrainedModel train_penalized_logreg(const EncodedMatrix& data, const ModelSpec& spec) {
  const auto& params = detail::params_as<LogRegParams>(spec, "train_penalized_logreg");
  detail::require_both_classes(data, "train_penalized_logreg");
  if (params.alpha < 0.0 || params.alpha > 1.0) throw Error(ErrorKind::InvalidArgument, "alpha must be in [0, 1]");
  if (params.lambda < 0.0) throw Error(ErrorKind::InvalidArgument, "lambda must be non-negative");

  LogRegModel model{Standardizer::fit(data.features), std::vector<double>(data.cols(), 0.0), 0.0};
  const Matrix x = model.scaler.apply(data.features);
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();

  // Lipschitz constant of the mean logistic loss gradient is at most
  // ||[X 1]||_2^2 / (4 n); the Frobenius norm bounds the spectral norm.
  double frob2 = static_cast<double>(n);
  for (double v : x.data()) frob2 += v * v;
  const double step = 4.0 * static_cast<double>(n) / frob2;
  const double l1_shrink = step * params.lambda * params.alpha;
  const double l2_scale = 1.0 / (1.0 + step * params.lambda * (1.0 - params.alpha));

  TrainedModel out{spec, data.feature_names, {}, {}, {}};
  std::vector<double> grad(p);
  bool converged = false;
  for (std::size_t iter = 0; iter < params.iterations; ++iter) {
    const double objective = logreg_objective(model, params, x, data.labels);
    detail::require_finite(objective, "logistic regression");
    out.loss_trace.push_back(objective);

    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = x.row(i);
      const double r = detail::sigmoid(dot(model.weights, row) + model.intercept) - data.labels[i];
      for (std::size_t j = 0; j < p; ++j) grad[j] += r * row[j];
      grad_b += r;
    }
    double max_change = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double updated =
          soft_threshold(model.weights[j] - step * grad[j] / static_cast<double>(n), l1_shrink) * l2_scale;
      max_change = std::max(max_change, std::abs(updated - model.weights[j]));
      model.weights[j] = updated;
    }
    const double intercept = model.intercept - step * grad_b / static_cast<double>(n);
    max_change = std::max(max_change, std::abs(intercept - model.intercept));
    model.intercept = intercept;
    if (max_change < params.tolerance) {
      converged = true;
      out.loss_trace.push_back(logreg_objective(model, params, x, data.labels));
      break;
    }
  }
  if (!converged) {
    out.warnings.push_back("NoConvergence: coefficients still moving after " + std::to_string(params.iterations) +
                           " iterations");
  }
  out.params = std::move(model);
  return out;
}

}  // namespace strokeml
