#include "gangmam/detector.hpp"

#include <cmath>

#include "gangmam/binary_io.hpp"
#include "gangmam/error.hpp"
#include "gangmam/hashing.hpp"
#include "gangmam/nn.hpp"
#include "gangmam/rng.hpp"

namespace gangmam {

namespace {

constexpr std::string_view kDetectorMagic = "GMBB";
constexpr std::uint32_t kDetectorVersion = 1;

double logit(const std::vector<double>& w, double b, const FeatureVector& v) {
  double z = b;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (v.test(i)) z += w[i];
  }
  return z;
}

}  // namespace

std::vector<FeatureVector> LabeledCorpus::with_label(Label label) const {
  std::vector<FeatureVector> out;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (labels[i] == label) out.push_back(vectors[i]);
  }
  return out;
}

LabeledCorpus synth_corpus(std::uint64_t seed, std::size_t dims, std::size_t n_malicious,
                           std::size_t n_benign) {
  if (dims < 2) throw Error(Errc::BadParams, "dims must be >= 2");
  if (n_malicious == 0 || n_benign == 0) throw Error(Errc::BadParams, "class counts must be >= 1");

  LabeledCorpus c;
  c.seed = seed;
  c.dims = dims;
  Rng rng(seed);
  for (std::size_t i = 0; i < dims; ++i) {
    bool malicious_leaning = rng.bernoulli(0.5);
    if (malicious_leaning) {
      c.p_malicious.push_back(rng.uniform(0.5, 0.9));
      c.p_benign.push_back(rng.uniform(0.02, 0.15));
    } else {
      c.p_malicious.push_back(rng.uniform(0.02, 0.15));
      c.p_benign.push_back(rng.uniform(0.3, 0.6));
    }
  }

  auto draw = [&](const std::vector<double>& p, std::size_t index) {
    BitVector bits(dims);
    for (std::size_t i = 0; i < dims; ++i) bits.set(i, rng.bernoulli(p[i]));
    auto hash = sha256_hex("synthetic:" + std::to_string(seed) + ":" + std::to_string(index));
    return FeatureVector(Sha256Hex(hash), std::move(bits));
  };
  for (std::size_t k = 0; k < n_malicious; ++k) {
    c.vectors.push_back(draw(c.p_malicious, k));
    c.labels.push_back(Label::Malicious);
  }
  for (std::size_t k = 0; k < n_benign; ++k) {
    c.vectors.push_back(draw(c.p_benign, n_malicious + k));
    c.labels.push_back(Label::Benign);
  }
  return c;
}

CorpusSplit split_corpus(const LabeledCorpus& corpus, double holdout_fraction) {
  CorpusSplit split;
  for (auto* part : {&split.train, &split.holdout}) {
    part->seed = corpus.seed;
    part->dims = corpus.dims;
    part->p_malicious = corpus.p_malicious;
    part->p_benign = corpus.p_benign;
  }
  for (auto label : {Label::Malicious, Label::Benign}) {
    auto members = corpus.with_label(label);
    auto keep = members.size() -
                static_cast<std::size_t>(std::floor(holdout_fraction * static_cast<double>(members.size())));
    for (std::size_t i = 0; i < members.size(); ++i) {
      auto& part = i < keep ? split.train : split.holdout;
      part.vectors.push_back(members[i]);
      part.labels.push_back(label);
    }
  }
  return split;
}

Detector::Detector(std::vector<double> weights, double bias)
    : weights_(std::move(weights)), bias_(bias) {
  for (double w : weights_) {
    if (!std::isfinite(w)) throw Error(Errc::NonFiniteLoss, "detector weight is not finite");
  }
  if (!std::isfinite(bias_)) throw Error(Errc::NonFiniteLoss, "detector bias is not finite");
}

Label Detector::label(const FeatureVector& v) const { return classify(*this, v).label; }

Classification classify(const Detector& detector, const FeatureVector& v) {
  if (v.size() != detector.dims()) {
    throw Error(Errc::ShapeMismatch, "vector has " + std::to_string(v.size()) +
                                         " features, detector expects " +
                                         std::to_string(detector.dims()));
  }
  double p = nn::sigmoid(logit(detector.weights(), detector.bias(), v));
  return {p, p >= Detector::kDecisionThreshold ? Label::Malicious : Label::Benign};
}

Detector train_logistic(const LabeledCorpus& corpus, std::size_t epochs, double learning_rate,
                        std::vector<double>* loss_history) {
  if (corpus.vectors.empty() || corpus.vectors.size() != corpus.labels.size()) {
    throw Error(Errc::BadParams, "corpus is empty or labels do not line up");
  }
  if (!(learning_rate > 0)) throw Error(Errc::BadParams, "learning rate must be positive");
  const auto dims = corpus.vectors.front().size();
  for (const auto& v : corpus.vectors) {
    if (v.size() != dims) throw Error(Errc::ShapeMismatch, "corpus vectors differ in length");
  }

  std::vector<double> w(dims, 0.0);
  double b = 0.0;
  const auto n = static_cast<double>(corpus.vectors.size());
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::vector<double> gw(dims, 0.0);
    double gb = 0.0;
    double loss = 0.0;
    for (std::size_t k = 0; k < corpus.vectors.size(); ++k) {
      const auto& v = corpus.vectors[k];
      double y = corpus.labels[k] == Label::Malicious ? 1.0 : 0.0;
      double z = logit(w, b, v);
      loss += nn::softplus(z) - y * z;
      double err = nn::sigmoid(z) - y;
      gb += err;
      for (std::size_t i = 0; i < dims; ++i) {
        if (v.test(i)) gw[i] += err;
      }
    }
    loss /= n;
    if (!std::isfinite(loss)) {
      throw Error(Errc::NonFiniteLoss, "logistic loss diverged at epoch " + std::to_string(epoch));
    }
    if (loss_history != nullptr) loss_history->push_back(loss);
    for (std::size_t i = 0; i < dims; ++i) w[i] -= learning_rate * gw[i] / n;
    b -= learning_rate * gb / n;
  }
  return Detector(std::move(w), b);
}

double accuracy(const Detector& detector, const LabeledCorpus& corpus) {
  if (corpus.vectors.empty()) throw Error(Errc::EmptyInput, "empty corpus");
  std::size_t correct = 0;
  for (std::size_t k = 0; k < corpus.vectors.size(); ++k) {
    if (detector.label(corpus.vectors[k]) == corpus.labels[k]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(corpus.vectors.size());
}

double evasion_rate(const BlackBox& detector, std::span<const FeatureVector> adversarial) {
  if (adversarial.empty()) throw Error(Errc::EmptyInput, "no adversarial vectors");
  std::size_t benign = 0;
  for (const auto& v : adversarial) {
    if (detector.label(v) == Label::Benign) ++benign;
  }
  return static_cast<double>(benign) / static_cast<double>(adversarial.size());
}

std::string detector_save(const Detector& detector) {
  ByteWriter out;
  out.raw(kDetectorMagic);
  out.u32(kDetectorVersion);
  out.u32(static_cast<std::uint32_t>(detector.dims()));
  for (double w : detector.weights()) out.f64(w);
  out.f64(detector.bias());
  return out.take();
}

Detector detector_load(std::string_view bytes) {
  ByteReader in(bytes);
  if (in.remaining() < kDetectorMagic.size() || in.raw(kDetectorMagic.size()) != kDetectorMagic) {
    throw Error(Errc::BadMagic, "not a detector file");
  }
  auto version = in.u32();
  if (version != kDetectorVersion) {
    throw Error(Errc::VersionUnsupported, "detector file version " + std::to_string(version));
  }
  auto dims = in.u32();
  if (in.remaining() != (static_cast<std::size_t>(dims) + 1) * 8) {
    if (in.remaining() < (static_cast<std::size_t>(dims) + 1) * 8) {
      throw Error(Errc::TruncatedFile, "detector weights truncated");
    }
    throw Error(Errc::BadMagic, "trailing bytes after detector weights");
  }
  std::vector<double> w(dims);
  for (auto& x : w) x = in.f64();
  double b = in.f64();
  return Detector(std::move(w), b);
}

}  // namespace gangmam
