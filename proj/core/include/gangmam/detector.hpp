#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gangmam/feature_model.hpp"

namespace gangmam {

enum class Label { Malicious, Benign };

/// The classifier being evaded. Only labels are observable.
class BlackBox {
 public:
  virtual ~BlackBox() = default;
  virtual Label label(const FeatureVector& v) const = 0;
};

struct LabeledCorpus {
  std::vector<FeatureVector> vectors;
  std::vector<Label> labels;

  std::uint64_t seed = 0;
  std::size_t dims = 0;
  std::vector<double> p_malicious;  // per-feature Bernoulli rates used for generation
  std::vector<double> p_benign;

  std::vector<FeatureVector> with_label(Label label) const;
};

/// Synthetic corpus, separable in expectation. Throws BadParams.
LabeledCorpus synth_corpus(std::uint64_t seed, std::size_t dims, std::size_t n_malicious,
                           std::size_t n_benign);

/// Splits each class so that the last `holdout_fraction` of it lands in `holdout`.
struct CorpusSplit {
  LabeledCorpus train;
  LabeledCorpus holdout;
};
CorpusSplit split_corpus(const LabeledCorpus& corpus, double holdout_fraction);

struct Classification {
  double probability = 0.5;  // P(malicious)
  Label label = Label::Malicious;
};

/// Logistic-regression reference detector; label is Malicious iff probability >= 0.5.
class Detector : public BlackBox {
 public:
  static constexpr double kDecisionThreshold = 0.5;

  Detector(std::vector<double> weights, double bias);

  std::size_t dims() const noexcept { return weights_.size(); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double bias() const noexcept { return bias_; }

  Label label(const FeatureVector& v) const override;

  friend bool operator==(const Detector& a, const Detector& b) {
    return a.weights_ == b.weights_ && a.bias_ == b.bias_;
  }

 private:
  std::vector<double> weights_;
  double bias_;
};

/// Throws ShapeMismatch.
Classification classify(const Detector& detector, const FeatureVector& v);

/// Full-batch gradient descent on mean binary cross-entropy. `loss_history`, when given,
/// receives the training loss before each epoch's step. Throws NonFiniteLoss, BadParams.
Detector train_logistic(const LabeledCorpus& corpus, std::size_t epochs, double learning_rate,
                        std::vector<double>* loss_history = nullptr);

double accuracy(const Detector& detector, const LabeledCorpus& corpus);

/// Fraction of `adversarial` labeled Benign. Throws EmptyInput.
double evasion_rate(const BlackBox& detector, std::span<const FeatureVector> adversarial);

/// `GMBB`, u32 version, u32 dims, f64 weights..., f64 bias.
std::string detector_save(const Detector& detector);
Detector detector_load(std::string_view bytes);

}  // namespace gangmam
