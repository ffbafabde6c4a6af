#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gangmam/rng.hpp"

namespace gangmam::nn {

enum class Activation { Tanh, Sigmoid };

double sigmoid(double z) noexcept;
/// log(1 + e^z) without overflow.
double softplus(double z) noexcept;

/// Fully connected layer, weights row-major [out][in].
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;
  Activation activation = Activation::Tanh;

  double& w(std::size_t o, std::size_t i) { return weights[o * in + i]; }
  double w(std::size_t o, std::size_t i) const { return weights[o * in + i]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Per-layer activations recorded by a forward pass.
struct Trace {
  std::vector<std::vector<double>> inputs;       // input to each layer
  std::vector<std::vector<double>> preactivations;
  std::vector<std::vector<double>> outputs;
};

struct Gradient {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;
};

/// Where the upstream gradient handed to backward() is taken.
enum class GradAt { Output, Preactivation };

class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> layers);

  /// Widths e.g. {74, 128, 64}: tanh on hidden layers, `output_activation` on the last.
  static Mlp glorot(std::span<const std::size_t> widths, Activation output_activation, Rng& rng);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }

  std::vector<double> forward(std::span<const double> x) const;
  std::vector<double> forward(std::span<const double> x, Trace& trace) const;

  /// Backpropagates `upstream`; adds parameter gradients into `accum` (if non-null)
  /// and returns dL/d(input).
  std::vector<double> backward(const Trace& trace, std::span<const double> upstream, GradAt at,
                               Gradient* accum) const;

  Gradient zero_gradient() const;
  void sgd_step(const Gradient& grad, double learning_rate);

  bool all_finite() const;

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  std::vector<DenseLayer> layers_;
};

}  // namespace gangmam::nn
