#include <cmath>

#include "model_internal.hpp"
#include "strokeml/classifiers.hpp"
#include "strokeml/error.hpp"
#include "strokeml/random.hpp"

namespace strokeml {

MlpNetwork::MlpNetwork(std::size_t inputs_, std::size_t hidden_)
    : inputs(inputs_), hidden(hidden_), w1(hidden_, inputs_), b1(hidden_, 0.0), w2(hidden_, 0.0) {}

std::vector<double> MlpNetwork::parameters() const {
  std::vector<double> flat(w1.data().begin(), w1.data().end());
  flat.insert(flat.end(), b1.begin(), b1.end());
  flat.insert(flat.end(), w2.begin(), w2.end());
  flat.push_back(b2);
  return flat;
}

void MlpNetwork::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw Error(ErrorKind::SchemaMismatch, "MLP parameter count");
  auto it = flat.begin();
  for (double& v : w1.data()) v = *it++;
  for (double& v : b1) v = *it++;
  for (double& v : w2) v = *it++;
  b2 = *it;
}

namespace {

struct Activations {
  std::vector<double> hidden;
  double logit = 0.0;
};

Activations forward(const MlpNetwork& net, std::span<const double> x) {
  Activations a{std::vector<double>(net.hidden), net.b2};
  for (std::size_t h = 0; h < net.hidden; ++h) {
    a.hidden[h] = detail::sigmoid(dot(net.w1.row(h), x) + net.b1[h]);
    a.logit += net.w2[h] * a.hidden[h];
  }
  return a;
}

void check_batch(const MlpNetwork& net, const Matrix& x, std::span<const int> y) {
  if (x.cols() != net.inputs) throw Error(ErrorKind::SchemaMismatch, "batch width differs from network inputs");
  if (x.rows() != y.size()) throw Error(ErrorKind::LengthMismatch, "batch rows vs labels");
  if (x.rows() == 0) throw Error(ErrorKind::EmptyInput, "empty batch");
}

}  // namespace

double MlpNetwork::probability(std::span<const double> x) const { return detail::sigmoid(forward(*this, x).logit); }

double mlp_loss(const MlpNetwork& net, const Matrix& x, std::span<const int> y) {
  check_batch(net, x, y);
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) loss += detail::logit_loss(forward(net, x.row(i)).logit, y[i]);
  return loss / static_cast<double>(x.rows());
}

std::vector<double> mlp_gradient(const MlpNetwork& net, const Matrix& x, std::span<const int> y) {
  check_batch(net, x, y);
  const std::size_t p = net.inputs;
  const std::size_t h = net.hidden;
  std::vector<double> grad(net.parameter_count(), 0.0);
  double* g_w1 = grad.data();
  double* g_b1 = g_w1 + h * p;
  double* g_w2 = g_b1 + h;
  double* g_b2 = g_w2 + h;
  const double scale = 1.0 / static_cast<double>(x.rows());

  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    const Activations a = forward(net, row);
    const double delta_out = (detail::sigmoid(a.logit) - y[i]) * scale;
    *g_b2 += delta_out;
    for (std::size_t k = 0; k < h; ++k) {
      g_w2[k] += delta_out * a.hidden[k];
      const double delta_h = delta_out * net.w2[k] * a.hidden[k] * (1.0 - a.hidden[k]);
      g_b1[k] += delta_h;
      for (std::size_t j = 0; j < p; ++j) g_w1[k * p + j] += delta_h * row[j];
    }
  }
  return grad;
}

std::vector<double> mlp_gradient(const TrainedModel& model, const EncodedMatrix& batch) {
  const auto* m = std::get_if<MlpModel>(&model.params);
  if (!m) throw Error(ErrorKind::InvalidArgument, "model is not an MLP");
  if (batch.feature_names != model.feature_names) throw Error(ErrorKind::SchemaMismatch, "batch columns differ");
  return mlp_gradient(m->net, m->scaler.apply(batch.features), batch.labels);
}

TrainedModel train_mlp(const EncodedMatrix& data, const ModelSpec& spec) {
  const auto& params = detail::params_as<MlpParams>(spec, "train_mlp");
  detail::require_both_classes(data, "train_mlp");

  MlpModel model{Standardizer::fit(data.features), MlpNetwork(data.cols(), params.hidden)};
  const Matrix x = model.scaler.apply(data.features);

  RandomSource rng(spec.seed);
  std::vector<double> w = model.net.parameters();
  for (double& v : w) v = rng.uniform(-params.init_range, params.init_range);
  model.net.set_parameters(w);

  TrainedModel out{spec, data.feature_names, {}, {}, {}};
  constexpr std::size_t kWindow = 50;
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    const double loss = mlp_loss(model.net, x, data.labels);
    detail::require_finite(loss, "MLP");
    out.loss_trace.push_back(loss);
    if (out.loss_trace.size() > kWindow && loss > out.loss_trace[out.loss_trace.size() - 1 - kWindow]) {
      out.warnings.push_back("loss rose over a " + std::to_string(kWindow) + "-epoch window at epoch " +
                             std::to_string(epoch) + "; training halted");
      break;
    }
    const auto grad = mlp_gradient(model.net, x, data.labels);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= params.learning_rate * grad[k];
    model.net.set_parameters(w);
  }
  out.params = std::move(model);
  return out;
}

}  // namespace strokeml
