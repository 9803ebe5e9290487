#include <algorithm>
#include <cmath>
#include <numeric>

#include "model_internal.hpp"
#include "strokeml/classifiers.hpp"
#include "strokeml/error.hpp"
#include "strokeml/random.hpp"

namespace strokeml {

TensorShape conv_output_shape(const TensorShape& in, const ConvGeometry& conv) {
  if (in.channels != conv.in_channels) throw Error(ErrorKind::SchemaMismatch, "channel count mismatch");
  const auto out_dim = [&](std::size_t d) {
    if (d + 2 * conv.padding < conv.kernel) throw Error(ErrorKind::SchemaMismatch, "kernel larger than input");
    return (d + 2 * conv.padding - conv.kernel) / conv.stride + 1;
  };
  return {conv.out_channels, out_dim(in.height), out_dim(in.width)};
}

std::vector<TensorShape> cnn_tensor_shapes() {
  const TensorShape c1 = conv_output_shape(cnn_arch::kInput, cnn_arch::kConv1);
  const TensorShape c2 = conv_output_shape(c1, cnn_arch::kConv2);
  return {cnn_arch::kInput, c1, c2};
}

std::vector<std::size_t> cnn_shape_chain() {
  const auto shapes = cnn_tensor_shapes();
  return {shapes[0].size(), shapes[1].size(), shapes[2].size(), shapes[2].size(), cnn_arch::kHidden, 1};
}

namespace {

const TensorShape kConv1Out = conv_output_shape(cnn_arch::kInput, cnn_arch::kConv1);
const TensorShape kConv2Out = conv_output_shape(kConv1Out, cnn_arch::kConv2);
const std::size_t kFlatten = kConv2Out.size();

std::size_t kernel_size(const ConvGeometry& g) { return g.out_channels * g.in_channels * g.kernel * g.kernel; }

/// Direct convolution; `in` and `out` are channel-major (c, h, w) buffers.
void conv_forward(std::span<const double> in, const TensorShape& in_shape, std::span<const double> w,
                  std::span<const double> b, const ConvGeometry& g, const TensorShape& out_shape,
                  std::span<double> out) {
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t o = 0; o < out_shape.channels; ++o)
    for (std::size_t oh = 0; oh < out_shape.height; ++oh)
      for (std::size_t ow = 0; ow < out_shape.width; ++ow) {
        double s = b[o];
        for (std::size_t i = 0; i < g.in_channels; ++i)
          for (std::size_t kh = 0; kh < g.kernel; ++kh) {
            const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.stride + kh) - pad;
            if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(in_shape.height)) continue;
            for (std::size_t kw = 0; kw < g.kernel; ++kw) {
              const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * g.stride + kw) - pad;
              if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(in_shape.width)) continue;
              s += w[((o * g.in_channels + i) * g.kernel + kh) * g.kernel + kw] *
                   in[(i * in_shape.height + static_cast<std::size_t>(ih)) * in_shape.width +
                      static_cast<std::size_t>(iw)];
            }
          }
        out[(o * out_shape.height + oh) * out_shape.width + ow] = s;
      }
}

/// Accumulates weight/bias gradients and, when `din` is non-empty, the
/// gradient with respect to the input.
void conv_backward(std::span<const double> in, const TensorShape& in_shape, std::span<const double> w,
                   const ConvGeometry& g, const TensorShape& out_shape, std::span<const double> dout,
                   std::span<double> dw, std::span<double> db, std::span<double> din) {
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t o = 0; o < out_shape.channels; ++o)
    for (std::size_t oh = 0; oh < out_shape.height; ++oh)
      for (std::size_t ow = 0; ow < out_shape.width; ++ow) {
        const double d = dout[(o * out_shape.height + oh) * out_shape.width + ow];
        if (d == 0.0) continue;
        db[o] += d;
        for (std::size_t i = 0; i < g.in_channels; ++i)
          for (std::size_t kh = 0; kh < g.kernel; ++kh) {
            const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.stride + kh) - pad;
            if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(in_shape.height)) continue;
            for (std::size_t kw = 0; kw < g.kernel; ++kw) {
              const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * g.stride + kw) - pad;
              if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(in_shape.width)) continue;
              const std::size_t wi = ((o * g.in_channels + i) * g.kernel + kh) * g.kernel + kw;
              const std::size_t xi =
                  (i * in_shape.height + static_cast<std::size_t>(ih)) * in_shape.width + static_cast<std::size_t>(iw);
              dw[wi] += d * in[xi];
              if (!din.empty()) din[xi] += d * w[wi];
            }
          }
      }
}

struct Forward {
  std::vector<double> z1, a1, z2, a2, z3, a3;
  double logit = 0.0;
};

void relu(std::span<const double> z, std::span<double> a) {
  for (std::size_t i = 0; i < z.size(); ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
}

Forward forward(const CnnNetwork& net, std::span<const double> x) {
  Forward f;
  f.z1.resize(kConv1Out.size());
  f.a1.resize(kConv1Out.size());
  f.z2.resize(kConv2Out.size());
  f.a2.resize(kConv2Out.size());
  f.z3.resize(cnn_arch::kHidden);
  f.a3.resize(cnn_arch::kHidden);
  // The ten features fill the 2 x 5 grid row by row.
  conv_forward(x, cnn_arch::kInput, net.conv1_w, net.conv1_b, cnn_arch::kConv1, kConv1Out, f.z1);
  relu(f.z1, f.a1);
  conv_forward(f.a1, kConv1Out, net.conv2_w, net.conv2_b, cnn_arch::kConv2, kConv2Out, f.z2);
  relu(f.z2, f.a2);
  for (std::size_t h = 0; h < cnn_arch::kHidden; ++h) {
    f.z3[h] = net.fc1_b[h] + dot(std::span(net.fc1_w).subspan(h * kFlatten, kFlatten), f.a2);
  }
  relu(f.z3, f.a3);
  f.logit = net.fc2_b + dot(net.fc2_w, f.a3);
  return f;
}

void check_batch(const Matrix& x, std::span<const int> y) {
  if (x.cols() != cnn_arch::kInput.size()) {
    throw Error(ErrorKind::SchemaMismatch, "CNN expects exactly " + std::to_string(cnn_arch::kInput.size()) +
                                               " features, got " + std::to_string(x.cols()));
  }
  if (x.rows() != y.size()) throw Error(ErrorKind::LengthMismatch, "batch rows vs labels");
  if (x.rows() == 0) throw Error(ErrorKind::EmptyInput, "empty batch");
}

}  // namespace

CnnNetwork::CnnNetwork()
    : conv1_w(kernel_size(cnn_arch::kConv1), 0.0),
      conv1_b(cnn_arch::kConv1.out_channels, 0.0),
      conv2_w(kernel_size(cnn_arch::kConv2), 0.0),
      conv2_b(cnn_arch::kConv2.out_channels, 0.0),
      fc1_w(cnn_arch::kHidden * kFlatten, 0.0),
      fc1_b(cnn_arch::kHidden, 0.0),
      fc2_w(cnn_arch::kHidden, 0.0) {}

std::size_t CnnNetwork::parameter_count() const noexcept {
  return conv1_w.size() + conv1_b.size() + conv2_w.size() + conv2_b.size() + fc1_w.size() + fc1_b.size() +
         fc2_w.size() + 1;
}

std::vector<double> CnnNetwork::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto* block : {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc1_w, &fc1_b, &fc2_w}) {
    flat.insert(flat.end(), block->begin(), block->end());
  }
  flat.push_back(fc2_b);
  return flat;
}

void CnnNetwork::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw Error(ErrorKind::SchemaMismatch, "CNN parameter count");
  auto it = flat.begin();
  for (auto* block : {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc1_w, &fc1_b, &fc2_w}) {
    for (double& v : *block) v = *it++;
  }
  fc2_b = *it;
}

double CnnNetwork::probability(std::span<const double> x) const { return detail::sigmoid(forward(*this, x).logit); }

double cnn_loss(const CnnNetwork& net, const Matrix& x, std::span<const int> y) {
  check_batch(x, y);
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) loss += detail::logit_loss(forward(net, x.row(i)).logit, y[i]);
  return loss / static_cast<double>(x.rows());
}

std::vector<double> cnn_gradient(const CnnNetwork& net, const Matrix& x, std::span<const int> y) {
  check_batch(x, y);
  CnnNetwork grad;
  const double scale = 1.0 / static_cast<double>(x.rows());
  std::vector<double> d3(cnn_arch::kHidden), d2(kFlatten), d1(kConv1Out.size());

  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    const Forward f = forward(net, row);
    const double dlogit = (detail::sigmoid(f.logit) - y[i]) * scale;

    grad.fc2_b += dlogit;
    for (std::size_t h = 0; h < cnn_arch::kHidden; ++h) {
      grad.fc2_w[h] += dlogit * f.a3[h];
      d3[h] = f.z3[h] > 0.0 ? dlogit * net.fc2_w[h] : 0.0;
    }
    std::fill(d2.begin(), d2.end(), 0.0);
    for (std::size_t h = 0; h < cnn_arch::kHidden; ++h) {
      if (d3[h] == 0.0) continue;
      grad.fc1_b[h] += d3[h];
      for (std::size_t k = 0; k < kFlatten; ++k) {
        grad.fc1_w[h * kFlatten + k] += d3[h] * f.a2[k];
        d2[k] += d3[h] * net.fc1_w[h * kFlatten + k];
      }
    }
    for (std::size_t k = 0; k < kFlatten; ++k)
      if (f.z2[k] <= 0.0) d2[k] = 0.0;

    std::fill(d1.begin(), d1.end(), 0.0);
    conv_backward(f.a1, kConv1Out, net.conv2_w, cnn_arch::kConv2, kConv2Out, d2, grad.conv2_w, grad.conv2_b, d1);
    for (std::size_t k = 0; k < d1.size(); ++k)
      if (f.z1[k] <= 0.0) d1[k] = 0.0;
    conv_backward(row, cnn_arch::kInput, net.conv1_w, cnn_arch::kConv1, kConv1Out, d1, grad.conv1_w, grad.conv1_b,
                  {});
  }
  return grad.parameters();
}

TrainedModel train_cnn(const EncodedMatrix& data, const ModelSpec& spec) {
  const auto& params = detail::params_as<CnnParams>(spec, "train_cnn");
  if (data.cols() != cnn_arch::kInput.size()) {
    throw Error(ErrorKind::SchemaMismatch, "CNN expects exactly " + std::to_string(cnn_arch::kInput.size()) +
                                               " features, got " + std::to_string(data.cols()));
  }
  detail::require_both_classes(data, "train_cnn");
  if (params.batch_size == 0) throw Error(ErrorKind::InvalidArgument, "batch size must be positive");

  CnnModel model{Standardizer::fit(data.features), CnnNetwork()};
  const Matrix x = model.scaler.apply(data.features);
  RandomSource rng(spec.seed);

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
  const auto init = [&](std::vector<double>& block, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : block) v = rng.uniform(-bound, bound);
  };
  const std::size_t fan1 = cnn_arch::kConv1.in_channels * cnn_arch::kConv1.kernel * cnn_arch::kConv1.kernel;
  const std::size_t fan2 = cnn_arch::kConv2.in_channels * cnn_arch::kConv2.kernel * cnn_arch::kConv2.kernel;
  init(model.net.conv1_w, fan1);
  init(model.net.conv1_b, fan1);
  init(model.net.conv2_w, fan2);
  init(model.net.conv2_b, fan2);
  init(model.net.fc1_w, kFlatten);
  init(model.net.fc1_b, kFlatten);
  init(model.net.fc2_w, cnn_arch::kHidden);
  model.net.fc2_b = rng.uniform(-0.25, 0.25);

  TrainedModel out{spec, data.feature_names, {}, {}, {}};
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> w = model.net.parameters();

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += params.batch_size) {
      const std::size_t end = std::min(order.size(), start + params.batch_size);
      Matrix batch(end - start, x.cols());
      std::vector<int> labels(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const auto src = x.row(order[k]);
        std::copy(src.begin(), src.end(), batch.row(k - start).begin());
        labels[k - start] = data.labels[order[k]];
      }
      const auto grad = cnn_gradient(model.net, batch, labels);
      for (std::size_t k = 0; k < w.size(); ++k) w[k] -= params.learning_rate * grad[k];
      model.net.set_parameters(w);
    }
    const double loss = cnn_loss(model.net, x, data.labels);
    detail::require_finite(loss, "CNN");
    out.loss_trace.push_back(loss);
  }
  out.params = std::move(model);
  return out;
}

}  // namespace strokeml
