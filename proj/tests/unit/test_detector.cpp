#include <gtest/gtest.h>

#include <cmath>

#include "gangmam/detector.hpp"
#include "gangmam/error.hpp"
#include "gangmam/hashing.hpp"
#include "test_support.hpp"

using namespace gangmam;
using gangmam::test::code_of;

namespace {

const Sha256Hex kHash(sha256_hex(std::string_view("det")));

FeatureVector bits_of(const std::string& pattern) {
  BitVector b(pattern.size());
  for (std::size_t i = 0; i < pattern.size(); ++i) b.set(i, pattern[i] == '1');
  return FeatureVector(kHash, b);
}

double mean_popcount(const std::vector<FeatureVector>& vs) {
  double total = 0;
  for (const auto& v : vs) {
    for (std::size_t i = 0; i < v.size(); ++i) total += v.test(i) ? 1 : 0;
  }
  return total / static_cast<double>(vs.size());
}

}  // namespace

TEST(Classify, TieIsMalicious) {
  Detector zero(std::vector<double>(4, 0.0), 0.0);
  auto c = classify(zero, bits_of("1010"));
  EXPECT_EQ(c.probability, 0.5);
  EXPECT_EQ(c.label, Label::Malicious);

  // w.v + b lands on exactly zero
  Detector d({1.5, -2.0, 0.75}, -0.25);
  EXPECT_EQ(classify(d, bits_of("111")).label, Label::Malicious);
}

TEST(Classify, SignArgument) {
  Detector d({10.0, 0.0}, 0.0);
  EXPECT_EQ(d.label(bits_of("10")), Label::Malicious);
  Detector neg({-10.0, 0.0}, 0.0);
  EXPECT_EQ(neg.label(bits_of("10")), Label::Benign);
}

TEST(Classify, ClosedFormSigmoid) {
  Detector d({1.5, -2.0, 0.75}, -0.25);
  struct Case {
    const char* v;
    double p;
  };
  // 1 / (1 + exp(-(b + sum of set weights))), evaluated independently
  const Case cases[] = {{"000", 0.43782349911420193},
                        {"100", 0.7772998611746911},
                        {"011", 0.18242552380635635},
                        {"111", 0.5},
                        {"001", 0.6224593312018546}};
  for (const auto& c : cases) {
    EXPECT_NEAR(classify(d, bits_of(c.v)).probability, c.p, 1e-15) << c.v;
  }
}

TEST(Classify, ShapeMismatch) {
  Detector d({1.0, 2.0}, 0.0);
  EXPECT_EQ(code_of([&] { classify(d, bits_of("101")); }), Errc::ShapeMismatch);
}

TEST(EvasionRate, Extremes) {
  std::vector<FeatureVector> batch = {bits_of("10"), bits_of("01"), bits_of("11")};
  EXPECT_EQ(evasion_rate(Detector({-5.0, -5.0}, -1.0), batch), 1.0);
  EXPECT_EQ(evasion_rate(Detector({5.0, 5.0}, 1.0), batch), 0.0);
  EXPECT_EQ(code_of([&] { evasion_rate(Detector({1.0, 1.0}, 0.0), {}); }), Errc::EmptyInput);
}

TEST(EvasionRate, HandLabeledBatch) {
  // bit 0 pushes malicious, bit 1 pushes benign; benign iff "01"
  Detector d({2.0, -4.0}, 0.0);
  std::vector<FeatureVector> batch;
  for (const char* p : {"01", "10", "11", "00", "01", "01", "10", "11", "01", "00"}) {
    batch.push_back(bits_of(p));
  }
  // four "01" and two "11" (2 - 4 < 0) are benign; "00" ties to malicious
  EXPECT_DOUBLE_EQ(evasion_rate(d, batch), 6.0 / 10.0);
}

TEST(EvasionRate, MatchesDirectLoop) {
  auto corpus = synth_corpus(3, 12, 40, 40);
  auto d = train_logistic(corpus, 50, 0.1);
  std::size_t benign = 0;
  for (const auto& v : corpus.vectors) {
    double z = d.bias();
    for (std::size_t i = 0; i < v.size(); ++i) z += v.test(i) ? d.weights()[i] : 0.0;
    if (1.0 / (1.0 + std::exp(-z)) < 0.5) ++benign;
  }
  EXPECT_DOUBLE_EQ(evasion_rate(d, corpus.vectors),
                   static_cast<double>(benign) / static_cast<double>(corpus.vectors.size()));
}

TEST(Corpus, Errors) {
  EXPECT_EQ(code_of([] { synth_corpus(1, 1, 5, 5); }), Errc::BadParams);
  EXPECT_EQ(code_of([] { synth_corpus(1, 8, 0, 5); }), Errc::BadParams);
  EXPECT_EQ(code_of([] { synth_corpus(1, 8, 5, 0); }), Errc::BadParams);
}

TEST(Corpus, DeterministicAndShaped) {
  auto a = synth_corpus(7, 64, 500, 500);
  auto b = synth_corpus(7, 64, 500, 500);
  ASSERT_EQ(a.vectors.size(), 1000u);
  EXPECT_EQ(a.vectors, b.vectors);
  EXPECT_EQ(a.labels, b.labels);
  for (const auto& v : a.vectors) EXPECT_EQ(v.size(), 64u);
  EXPECT_NE(synth_corpus(8, 64, 500, 500).vectors, a.vectors);
}

TEST(Corpus, Seed7PopcountGap) {
  auto c = synth_corpus(7, 64, 500, 500);
  double gap = std::abs(mean_popcount(c.with_label(Label::Malicious)) -
                        mean_popcount(c.with_label(Label::Benign)));
  EXPECT_GE(gap, 5.0);
  // measured once and frozen
  EXPECT_NEAR(gap, 6.006, 1e-9);
}

TEST(Corpus, SplitKeepsClassBalance) {
  auto c = synth_corpus(7, 8, 10, 20);
  auto s = split_corpus(c, 0.2);
  EXPECT_EQ(s.train.with_label(Label::Malicious).size(), 8u);
  EXPECT_EQ(s.holdout.with_label(Label::Malicious).size(), 2u);
  EXPECT_EQ(s.train.with_label(Label::Benign).size(), 16u);
  EXPECT_EQ(s.holdout.with_label(Label::Benign).size(), 4u);
}

TEST(Logistic, SinglePoint) {
  LabeledCorpus c;
  c.vectors = {bits_of("101")};
  c.labels = {Label::Malicious};
  EXPECT_EQ(train_logistic(c, 50, 0.5).label(bits_of("101")), Label::Malicious);
}

TEST(Logistic, SeparableToy) {
  LabeledCorpus c;
  c.vectors = {bits_of("10"), bits_of("11"), bits_of("01"), bits_of("00")};
  c.labels = {Label::Malicious, Label::Malicious, Label::Benign, Label::Benign};
  auto d = train_logistic(c, 500, 0.5);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(d.label(c.vectors[k]), c.labels[k]) << k;
  EXPECT_EQ(accuracy(d, c), 1.0);
}

TEST(Logistic, Seed7Holdout) {
  auto split = split_corpus(synth_corpus(7, 64, 500, 500), 0.2);
  auto d = train_logistic(split.train, 300, 0.5);
  EXPECT_GE(accuracy(d, split.holdout), 0.9);
}

TEST(Logistic, LossNonIncreasing) {
  auto c = synth_corpus(7, 64, 500, 500);
  std::vector<double> history;
  train_logistic(c, 100, 0.1, &history);
  ASSERT_EQ(history.size(), 100u);
  for (std::size_t i = 1; i < history.size(); ++i) EXPECT_LE(history[i], history[i - 1]) << i;
}

TEST(Logistic, Errors) {
  LabeledCorpus empty;
  EXPECT_EQ(code_of([&] { train_logistic(empty, 10, 0.1); }), Errc::BadParams);
  auto c = synth_corpus(1, 4, 3, 3);
  EXPECT_EQ(code_of([&] { train_logistic(c, 10, 0.0); }), Errc::BadParams);
  EXPECT_EQ(code_of([] { Detector({std::nan("")}, 0.0); }), Errc::NonFiniteLoss);
}

TEST(Persistence, DetectorRoundTrip) {
  Detector d({1.5, -2.0, 0.75}, -0.25);
  auto bytes = detector_save(d);
  EXPECT_EQ(detector_load(bytes), d);
  EXPECT_EQ(code_of([&] { detector_load(bytes.substr(0, bytes.size() - 1)); }),
            Errc::TruncatedFile);
  EXPECT_EQ(code_of([&] { detector_load("XXXX"); }), Errc::BadMagic);
}
