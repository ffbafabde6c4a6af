#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gangmam/detector.hpp"
#include "gangmam/error.hpp"
#include "gangmam/feature_model.hpp"
#include "gangmam/nn.hpp"

namespace gangmam {

struct GanConfig {
  std::size_t noise_dim = 10;
  std::vector<std::size_t> gen_hidden = {128};
  std::vector<std::size_t> sub_hidden = {128};
  double learning_rate = 0.001;
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  double binarize_threshold = 0.5;
  std::uint64_t seed = 0;

  /// Throws BadConfig.
  void validate() const;

  friend bool operator==(const GanConfig&, const GanConfig&) = default;
};

/// Generator G: (vector || noise) -> per-feature probabilities (sigmoid).
/// Substitute S: vector -> P(malicious) (sigmoid), distilled from the black box.
struct GanModel {
  std::size_t feature_dim = 0;
  nn::Mlp generator;
  nn::Mlp substitute;
  GanConfig config;

  friend bool operator==(const GanModel&, const GanModel&) = default;
};

/// Glorot-uniform weights, zero biases, drawn from `config.seed`. Throws BadConfig.
GanModel init_gan(std::size_t feature_dim, const GanConfig& config);

/// Throws ShapeMismatch.
std::vector<double> generator_forward(const GanModel& model, const FeatureVector& v,
                                      std::span<const double> noise);

/// v OR (probabilities > threshold). Never clears a bit of v.
FeatureVector binarize_additive(const FeatureVector& v, std::span<const double> probabilities,
                                double threshold);

/// V' = v OR binarize(G(v, noise)). Throws ShapeMismatch.
FeatureVector perturb(const GanModel& model, const FeatureVector& v,
                      std::span<const double> noise);

/// Throws ShapeMismatch.
double substitute_forward(const GanModel& model, const FeatureVector& v);

/// Fresh uniform(0,1) noise vectors, one per row.
std::vector<std::vector<double>> draw_noise(std::size_t rows, std::size_t noise_dim, Rng& rng);

/// How the generator's output reaches the substitute in the generator loss.
enum class Relaxation {
  /// Forward: x' = v OR (G > threshold). Backward: identity on v_i = 0, zero on v_i = 1.
  StraightThrough,
  /// Forward and backward: x' = v + (1 - v) * G. The continuous path the
  /// straight-through gradients coincide with.
  Continuous,
};

struct LossAndGradient {
  double loss = 0.0;
  nn::Gradient grad;
};

/// Mean binary cross-entropy of S on (samples, labels); label Malicious = 1.
LossAndGradient substitute_loss(const GanModel& model, std::span<const std::vector<double>> samples,
                                std::span<const double> targets);

/// Mean over malware of log S(x'); gradient w.r.t. generator parameters.
LossAndGradient generator_loss(const GanModel& model, std::span<const FeatureVector> malware,
                               std::span<const std::vector<double>> noise, Relaxation relaxation);

struct EpochRecord {
  double substitute_loss = 0.0;
  double generator_loss = 0.0;
  double evasion_rate = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainingReport {
  std::vector<EpochRecord> epochs;
  double final_evasion_rate = 0.0;

  friend bool operator==(const TrainingReport&, const TrainingReport&) = default;
};

struct TrainingResult {
  GanModel model;
  TrainingReport report;
};

/// Thrown when a loss turns non-finite; carries the epochs completed so far.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(TrainingReport partial, const std::string& what)
      : Error(Errc::NonFiniteLoss, what), partial_(std::move(partial)) {}
  const TrainingReport& partial_report() const noexcept { return partial_; }

 private:
  TrainingReport partial_;
};

/// Each epoch: label current adversarial malware and benign via `blackbox`, fit S with
/// BCE, then step G to minimize mean log S(x'). Plain SGD, deterministic in config.seed.
/// Throws EmptyCorpus, ShapeMismatch, TrainingDiverged.
TrainingResult train_gan(GanModel model, std::span<const FeatureVector> malware,
                         std::span<const FeatureVector> benign, const BlackBox& blackbox);

/// `GMAM`, u32 version, u32 feature_dim, u32 noise_dim, config block, then each network
/// as a layer count followed by (u32 in, u32 out, u32 activation, f64 weights, f64 bias).
std::string model_save(const GanModel& model);
/// Throws BadMagic, VersionUnsupported, TruncatedFile, ShapeMismatch.
GanModel model_load(std::string_view bytes);

}  // namespace gangmam
