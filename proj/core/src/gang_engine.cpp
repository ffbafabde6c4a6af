#include "gangmam/gang_engine.hpp"

#include <cmath>
#include <numeric>

#include "gangmam/binary_io.hpp"
#include "gangmam/rng.hpp"

namespace gangmam {

namespace {

constexpr std::string_view kModelMagic = "GMAM";
constexpr std::uint32_t kModelVersion = 1;

// Stream selectors so init, noise and shuffling draw from unrelated sequences.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kTrainStream = 2;

std::vector<double> as_doubles(const FeatureVector& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v.test(i) ? 1.0 : 0.0;
  return out;
}

std::vector<double> generator_input(const GanModel& model, const FeatureVector& v,
                                    std::span<const double> noise) {
  if (v.size() != model.feature_dim) {
    throw Error(Errc::ShapeMismatch, "vector has " + std::to_string(v.size()) +
                                         " features, model expects " +
                                         std::to_string(model.feature_dim));
  }
  if (noise.size() != model.config.noise_dim) {
    throw Error(Errc::ShapeMismatch, "noise has length " + std::to_string(noise.size()) +
                                         ", model expects " +
                                         std::to_string(model.config.noise_dim));
  }
  auto x = as_doubles(v);
  x.insert(x.end(), noise.begin(), noise.end());
  return x;
}

void write_network(ByteWriter& out, const nn::Mlp& net) {
  out.u32(static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& l : net.layers()) {
    out.u32(static_cast<std::uint32_t>(l.in));
    out.u32(static_cast<std::uint32_t>(l.out));
    out.u32(l.activation == nn::Activation::Tanh ? 0U : 1U);
    for (double w : l.weights) out.f64(w);
    for (double b : l.bias) out.f64(b);
  }
}

nn::Mlp read_network(ByteReader& in) {
  auto count = in.u32();
  if (count == 0) throw Error(Errc::ShapeMismatch, "network with no layers");
  std::vector<nn::DenseLayer> layers;
  for (std::uint32_t k = 0; k < count; ++k) {
    nn::DenseLayer l;
    l.in = in.u32();
    l.out = in.u32();
    auto act = in.u32();
    if (act > 1) throw Error(Errc::BadMagic, "unknown activation code " + std::to_string(act));
    l.activation = act == 0 ? nn::Activation::Tanh : nn::Activation::Sigmoid;
    auto params = (static_cast<std::uint64_t>(l.in) * l.out + l.out) * 8;
    if (params > in.remaining()) throw Error(Errc::TruncatedFile, "layer weights truncated");
    l.weights.resize(l.in * l.out);
    for (auto& w : l.weights) w = in.f64();
    l.bias.resize(l.out);
    for (auto& b : l.bias) b = in.f64();
    layers.push_back(std::move(l));
  }
  return nn::Mlp(std::move(layers));
}

std::vector<std::size_t> hidden_widths(const nn::Mlp& net) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k + 1 < net.layers().size(); ++k) out.push_back(net.layers()[k].out);
  return out;
}

}  // namespace

void GanConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(Errc::BadConfig, what); };
  if (noise_dim == 0) bad("noise_dim must be >= 1");
  for (auto w : gen_hidden) {
    if (w == 0) bad("generator hidden widths must be >= 1");
  }
  for (auto w : sub_hidden) {
    if (w == 0) bad("substitute hidden widths must be >= 1");
  }
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) bad("learning_rate must be positive");
  if (epochs == 0) bad("epochs must be >= 1");
  if (batch_size == 0) bad("batch_size must be >= 1");
  if (!(binarize_threshold > 0 && binarize_threshold < 1)) {
    bad("binarize_threshold must lie strictly inside (0, 1)");
  }
}

GanModel init_gan(std::size_t feature_dim, const GanConfig& config) {
  if (feature_dim == 0) throw Error(Errc::BadConfig, "feature_dim must be >= 1");
  config.validate();
  Rng rng(mix_seed(config.seed ^ kInitStream));

  std::vector<std::size_t> gen_widths{feature_dim + config.noise_dim};
  gen_widths.insert(gen_widths.end(), config.gen_hidden.begin(), config.gen_hidden.end());
  gen_widths.push_back(feature_dim);

  std::vector<std::size_t> sub_widths{feature_dim};
  sub_widths.insert(sub_widths.end(), config.sub_hidden.begin(), config.sub_hidden.end());
  sub_widths.push_back(1);

  GanModel model;
  model.feature_dim = feature_dim;
  model.config = config;
  model.generator = nn::Mlp::glorot(gen_widths, nn::Activation::Sigmoid, rng);
  model.substitute = nn::Mlp::glorot(sub_widths, nn::Activation::Sigmoid, rng);
  return model;
}

std::vector<double> generator_forward(const GanModel& model, const FeatureVector& v,
                                      std::span<const double> noise) {
  return model.generator.forward(generator_input(model, v, noise));
}

FeatureVector binarize_additive(const FeatureVector& v, std::span<const double> probabilities,
                                double threshold) {
  if (probabilities.size() != v.size()) {
    throw Error(Errc::ShapeMismatch, "probability vector length differs from feature vector");
  }
  BitVector bits = v.bits();
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] > threshold) bits.set(i);
  }
  return FeatureVector(v.apk_hash(), std::move(bits));
}

FeatureVector perturb(const GanModel& model, const FeatureVector& v,
                      std::span<const double> noise) {
  return binarize_additive(v, generator_forward(model, v, noise), model.config.binarize_threshold);
}

double substitute_forward(const GanModel& model, const FeatureVector& v) {
  if (v.size() != model.feature_dim) {
    throw Error(Errc::ShapeMismatch, "vector has " + std::to_string(v.size()) +
                                         " features, model expects " +
                                         std::to_string(model.feature_dim));
  }
  return model.substitute.forward(as_doubles(v))[0];
}

std::vector<std::vector<double>> draw_noise(std::size_t rows, std::size_t noise_dim, Rng& rng) {
  std::vector<std::vector<double>> out(rows, std::vector<double>(noise_dim));
  for (auto& row : out) {
    for (auto& x : row) x = rng.uniform01();
  }
  return out;
}

LossAndGradient substitute_loss(const GanModel& model,
                                std::span<const std::vector<double>> samples,
                                std::span<const double> targets) {
  if (samples.size() != targets.size() || samples.empty()) {
    throw Error(Errc::ShapeMismatch, "samples and targets must be non-empty and equal length");
  }
  LossAndGradient out{0.0, model.substitute.zero_gradient()};
  const double scale = 1.0 / static_cast<double>(samples.size());
  nn::Trace trace;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    model.substitute.forward(samples[k], trace);
    double z = trace.preactivations.back()[0];
    double y = targets[k];
    out.loss += (nn::softplus(z) - y * z) * scale;
    double dz = (nn::sigmoid(z) - y) * scale;
    model.substitute.backward(trace, std::span<const double>(&dz, 1), nn::GradAt::Preactivation,
                              &out.grad);
  }
  return out;
}

LossAndGradient generator_loss(const GanModel& model, std::span<const FeatureVector> malware,
                               std::span<const std::vector<double>> noise, Relaxation relaxation) {
  if (malware.size() != noise.size() || malware.empty()) {
    throw Error(Errc::ShapeMismatch, "malware and noise must be non-empty and equal length");
  }
  LossAndGradient out{0.0, model.generator.zero_gradient()};
  const double scale = 1.0 / static_cast<double>(malware.size());
  const auto threshold = model.config.binarize_threshold;
  nn::Trace gen_trace;
  nn::Trace sub_trace;
  for (std::size_t k = 0; k < malware.size(); ++k) {
    const auto& v = malware[k];
    auto g = model.generator.forward(generator_input(model, v, noise[k]), gen_trace);
    std::vector<double> x(model.feature_dim);
    for (std::size_t i = 0; i < x.size(); ++i) {
      bool original = v.test(i);
      if (relaxation == Relaxation::StraightThrough) {
        x[i] = (original || g[i] > threshold) ? 1.0 : 0.0;
      } else {
        x[i] = original ? 1.0 : g[i];
      }
    }
    model.substitute.forward(x, sub_trace);
    double z = sub_trace.preactivations.back()[0];
    out.loss += -nn::softplus(-z) * scale;  // log sigmoid(z)
    double dz = nn::sigmoid(-z) * scale;
    auto dx = model.substitute.backward(sub_trace, std::span<const double>(&dz, 1),
                                        nn::GradAt::Preactivation, nullptr);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (v.test(i)) dx[i] = 0.0;
    }
    model.generator.backward(gen_trace, dx, nn::GradAt::Output, &out.grad);
  }
  return out;
}

TrainingResult train_gan(GanModel model, std::span<const FeatureVector> malware,
                         std::span<const FeatureVector> benign, const BlackBox& blackbox) {
  if (malware.empty() || benign.empty()) {
    throw Error(Errc::EmptyCorpus, "both malware and benign corpora must be non-empty");
  }
  for (const auto* set : {&malware, &benign}) {
    for (const auto& v : *set) {
      if (v.size() != model.feature_dim) {
        throw Error(Errc::ShapeMismatch, "corpus vector has " + std::to_string(v.size()) +
                                             " features, model expects " +
                                             std::to_string(model.feature_dim));
      }
    }
  }
  model.config.validate();
  const auto& cfg = model.config;
  Rng rng(mix_seed(cfg.seed ^ kTrainStream));
  TrainingReport report;

  std::vector<std::vector<double>> benign_x;
  std::vector<double> benign_y;
  for (const auto& v : benign) {
    benign_x.push_back(as_doubles(v));
    benign_y.push_back(blackbox.label(v) == Label::Malicious ? 1.0 : 0.0);
  }

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto noise = draw_noise(malware.size(), cfg.noise_dim, rng);

    // Substitute: distill the black box's labels on current adversarial malware + benign.
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (std::size_t k = 0; k < malware.size(); ++k) {
      auto adv = perturb(model, malware[k], noise[k]);
      xs.push_back(as_doubles(adv));
      ys.push_back(blackbox.label(adv) == Label::Malicious ? 1.0 : 0.0);
    }
    xs.insert(xs.end(), benign_x.begin(), benign_x.end());
    ys.insert(ys.end(), benign_y.begin(), benign_y.end());

    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span(order));
    double sub_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      auto end = std::min(order.size(), start + cfg.batch_size);
      std::vector<std::vector<double>> bx;
      std::vector<double> by;
      for (auto j = start; j < end; ++j) {
        bx.push_back(xs[order[j]]);
        by.push_back(ys[order[j]]);
      }
      auto lg = substitute_loss(model, bx, by);
      sub_loss += lg.loss * static_cast<double>(end - start) / static_cast<double>(order.size());
      model.substitute.sgd_step(lg.grad, cfg.learning_rate);
    }

    // Generator: push the substitute's malicious score down.
    std::vector<std::size_t> morder(malware.size());
    std::iota(morder.begin(), morder.end(), 0);
    rng.shuffle(std::span(morder));
    double gen_loss = 0.0;
    for (std::size_t start = 0; start < morder.size(); start += cfg.batch_size) {
      auto end = std::min(morder.size(), start + cfg.batch_size);
      std::vector<FeatureVector> bm;
      std::vector<std::vector<double>> bn;
      for (auto j = start; j < end; ++j) {
        bm.push_back(malware[morder[j]]);
        bn.push_back(noise[morder[j]]);
      }
      auto lg = generator_loss(model, bm, bn, Relaxation::StraightThrough);
      gen_loss += lg.loss * static_cast<double>(end - start) / static_cast<double>(morder.size());
      model.generator.sgd_step(lg.grad, cfg.learning_rate);
    }

    if (!std::isfinite(sub_loss) || !std::isfinite(gen_loss) || !model.generator.all_finite() ||
        !model.substitute.all_finite()) {
      throw TrainingDiverged(report, "non-finite loss at epoch " + std::to_string(epoch + 1));
    }

    std::vector<FeatureVector> adversarial;
    adversarial.reserve(malware.size());
    for (std::size_t k = 0; k < malware.size(); ++k) {
      adversarial.push_back(perturb(model, malware[k], noise[k]));
    }
    EpochRecord rec{sub_loss, gen_loss, evasion_rate(blackbox, adversarial)};
    report.epochs.push_back(rec);
    report.final_evasion_rate = rec.evasion_rate;
  }
  return {std::move(model), std::move(report)};
}

std::string model_save(const GanModel& model) {
  ByteWriter out;
  out.raw(kModelMagic);
  out.u32(kModelVersion);
  out.u32(static_cast<std::uint32_t>(model.feature_dim));
  out.u32(static_cast<std::uint32_t>(model.config.noise_dim));
  out.f64(model.config.learning_rate);
  out.u64(model.config.epochs);
  out.u64(model.config.batch_size);
  out.f64(model.config.binarize_threshold);
  out.u64(model.config.seed);
  write_network(out, model.generator);
  write_network(out, model.substitute);
  return out.take();
}

GanModel model_load(std::string_view bytes) {
  ByteReader in(bytes);
  if (in.remaining() < kModelMagic.size() || in.raw(kModelMagic.size()) != kModelMagic) {
    throw Error(Errc::BadMagic, "not a GAN model file");
  }
  auto version = in.u32();
  if (version != kModelVersion) {
    throw Error(Errc::VersionUnsupported, "model file version " + std::to_string(version));
  }
  GanModel model;
  model.feature_dim = in.u32();
  model.config.noise_dim = in.u32();
  model.config.learning_rate = in.f64();
  model.config.epochs = in.u64();
  model.config.batch_size = in.u64();
  model.config.binarize_threshold = in.f64();
  model.config.seed = in.u64();
  model.generator = read_network(in);
  model.substitute = read_network(in);
  if (!in.at_end()) throw Error(Errc::BadMagic, "trailing bytes after model");

  const auto f = model.feature_dim;
  if (model.generator.input_dim() != f + model.config.noise_dim ||
      model.generator.output_dim() != f) {
    throw Error(Errc::ShapeMismatch, "generator shape does not match header feature_dim " +
                                         std::to_string(f));
  }
  if (model.substitute.input_dim() != f || model.substitute.output_dim() != 1) {
    throw Error(Errc::ShapeMismatch, "substitute shape does not match header feature_dim " +
                                         std::to_string(f));
  }
  if (!model.generator.all_finite() || !model.substitute.all_finite()) {
    throw Error(Errc::ShapeMismatch, "model contains non-finite weights");
  }
  model.config.gen_hidden = hidden_widths(model.generator);
  model.config.sub_hidden = hidden_widths(model.substitute);
  model.config.validate();
  return model;
}

}  // namespace gangmam
