#include "gangmam/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "gangmam/error.hpp"

namespace gangmam::nn {

double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) noexcept {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

namespace {

double activate(Activation a, double z) {
  return a == Activation::Tanh ? std::tanh(z) : sigmoid(z);
}

// Derivative expressed through the activation's output y.
double activation_slope(Activation a, double y) {
  return a == Activation::Tanh ? 1.0 - y * y : y * (1.0 - y);
}

}  // namespace

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& l = layers_[k];
    if (l.in == 0 || l.out == 0 || l.weights.size() != l.in * l.out || l.bias.size() != l.out) {
      throw Error(Errc::ShapeMismatch, "layer " + std::to_string(k) + " has inconsistent shape");
    }
    if (k > 0 && layers_[k - 1].out != l.in) {
      throw Error(Errc::ShapeMismatch, "layer " + std::to_string(k) + " input " +
                                           std::to_string(l.in) + " does not chain from " +
                                           std::to_string(layers_[k - 1].out));
    }
  }
}

Mlp Mlp::glorot(std::span<const std::size_t> widths, Activation output_activation, Rng& rng) {
  if (widths.size() < 2) throw Error(Errc::BadConfig, "an MLP needs at least two widths");
  std::vector<DenseLayer> layers;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    DenseLayer l;
    l.in = widths[k];
    l.out = widths[k + 1];
    l.activation = (k + 2 == widths.size()) ? output_activation : Activation::Tanh;
    double s = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
    l.weights.resize(l.in * l.out);
    for (auto& w : l.weights) w = rng.uniform(-s, s);
    l.bias.assign(l.out, 0.0);
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers));
}

std::size_t Mlp::input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
std::size_t Mlp::output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }

std::vector<double> Mlp::forward(std::span<const double> x) const {
  Trace trace;
  return forward(x, trace);
}

std::vector<double> Mlp::forward(std::span<const double> x, Trace& trace) const {
  if (x.size() != input_dim()) {
    throw Error(Errc::ShapeMismatch, "input of length " + std::to_string(x.size()) +
                                         ", network expects " + std::to_string(input_dim()));
  }
  trace.inputs.clear();
  trace.preactivations.clear();
  trace.outputs.clear();
  std::vector<double> cur(x.begin(), x.end());
  for (const auto& l : layers_) {
    std::vector<double> z(l.out);
    std::vector<double> y(l.out);
    for (std::size_t o = 0; o < l.out; ++o) {
      double acc = l.bias[o];
      const double* row = &l.weights[o * l.in];
      for (std::size_t i = 0; i < l.in; ++i) acc += row[i] * cur[i];
      z[o] = acc;
      y[o] = activate(l.activation, acc);
    }
    trace.inputs.push_back(std::move(cur));
    trace.preactivations.push_back(std::move(z));
    cur = y;
    trace.outputs.push_back(std::move(y));
  }
  return cur;
}

std::vector<double> Mlp::backward(const Trace& trace, std::span<const double> upstream, GradAt at,
                                  Gradient* accum) const {
  if (upstream.size() != output_dim()) {
    throw Error(Errc::ShapeMismatch, "upstream gradient has wrong length");
  }
  std::vector<double> grad(upstream.begin(), upstream.end());
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const auto& l = layers_[k];
    const auto& y = trace.outputs[k];
    const auto& x = trace.inputs[k];
    std::vector<double> delta(l.out);
    for (std::size_t o = 0; o < l.out; ++o) {
      bool at_preact = (k + 1 == layers_.size()) && at == GradAt::Preactivation;
      delta[o] = at_preact ? grad[o] : grad[o] * activation_slope(l.activation, y[o]);
    }
    if (accum != nullptr) {
      auto& gw = accum->weights[k];
      auto& gb = accum->bias[k];
      for (std::size_t o = 0; o < l.out; ++o) {
        gb[o] += delta[o];
        double* row = &gw[o * l.in];
        for (std::size_t i = 0; i < l.in; ++i) row[i] += delta[o] * x[i];
      }
    }
    std::vector<double> prev(l.in, 0.0);
    for (std::size_t o = 0; o < l.out; ++o) {
      const double* row = &l.weights[o * l.in];
      for (std::size_t i = 0; i < l.in; ++i) prev[i] += row[i] * delta[o];
    }
    grad = std::move(prev);
  }
  return grad;
}

Gradient Mlp::zero_gradient() const {
  Gradient g;
  for (const auto& l : layers_) {
    g.weights.emplace_back(l.weights.size(), 0.0);
    g.bias.emplace_back(l.bias.size(), 0.0);
  }
  return g;
}

void Mlp::sgd_step(const Gradient& grad, double learning_rate) {
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    auto& l = layers_[k];
    for (std::size_t j = 0; j < l.weights.size(); ++j) l.weights[j] -= learning_rate * grad.weights[k][j];
    for (std::size_t j = 0; j < l.bias.size(); ++j) l.bias[j] -= learning_rate * grad.bias[k][j];
  }
}

bool Mlp::all_finite() const {
  for (const auto& l : layers_) {
    for (double w : l.weights) {
      if (!std::isfinite(w)) return false;
    }
    for (double b : l.bias) {
      if (!std::isfinite(b)) return false;
    }
  }
  return true;
}

}  // namespace gangmam::nn
