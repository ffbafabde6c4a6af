#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "gangmam/detector.hpp"
#include "gangmam/feature_model.hpp"
#include "gangmam/gang_engine.hpp"
#include "gangmam/hashing.hpp"
#include "gangmam/line_diff.hpp"
#include "gangmam/manifest.hpp"
#include "gangmam/rng.hpp"

using namespace gangmam;

namespace {

const Sha256Hex kHash(sha256_hex(std::string_view("bench")));

FeatureVector random_bits(Rng& rng, std::size_t n, double p) {
  BitVector b(n);
  for (std::size_t i = 0; i < n; ++i) b.set(i, rng.bernoulli(p));
  return FeatureVector(kHash, b);
}

FeatureCatalog permissions(std::size_t n) {
  std::vector<FeatureDefinition> defs;
  for (std::size_t i = 0; i < n; ++i) {
    defs.push_back({FeatureKind::Permission, "permission.P" + std::to_string(i)});
  }
  return build_catalog(defs);
}

// log-like lines, with a few edits sprinkled in the copy
std::pair<std::vector<std::string>, std::vector<std::string>> log_pair(std::size_t n, Rng& rng) {
  std::vector<std::string> a, b;
  for (std::size_t i = 0; i < n; ++i) {
    a.push_back("I/ActivityManager( " + std::to_string(1000 + i % 37) + "): event " + std::to_string(i));
  }
  b = a;
  for (std::size_t k = 0; k < n / 50 + 1; ++k) b[rng.below(n)] += " changed";
  return {a, b};
}

}  // namespace

static void BM_GeneratorForward(benchmark::State& state) {
  GanConfig cfg;
  cfg.seed = 1;
  const auto dim = static_cast<std::size_t>(state.range(0));
  auto model = init_gan(dim, cfg);
  Rng rng(2);
  auto v = random_bits(rng, dim, 0.2);
  auto noise = draw_noise(1, cfg.noise_dim, rng).front();
  for (auto _ : state) benchmark::DoNotOptimize(generator_forward(model, v, noise));
}
BENCHMARK(BM_GeneratorForward)->Arg(16)->Arg(74)->Arg(512);

static void BM_Perturb(benchmark::State& state) {
  GanConfig cfg;
  auto model = init_gan(74, cfg);
  Rng rng(3);
  auto v = random_bits(rng, 74, 0.2);
  auto noise = draw_noise(1, cfg.noise_dim, rng).front();
  for (auto _ : state) benchmark::DoNotOptimize(perturb(model, v, noise));
}
BENCHMARK(BM_Perturb);

static void BM_TrainEpoch(benchmark::State& state) {
  auto corpus = synth_corpus(7, 64, 200, 200);
  auto detector = train_logistic(corpus, 50, 0.5);
  auto mal = corpus.with_label(Label::Malicious);
  auto ben = corpus.with_label(Label::Benign);
  GanConfig cfg;
  cfg.epochs = 1;
  cfg.learning_rate = 0.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_gan(init_gan(64, cfg), mal, ben, detector).report);
  }
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

static void BM_LineDiff(benchmark::State& state) {
  Rng rng(4);
  auto [a, b] = log_pair(static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(diff_lines(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LineDiff)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

static void BM_CsvEncode(benchmark::State& state) {
  auto cat = permissions(64);
  Rng rng(5);
  std::vector<FeatureVector> rows;
  for (int i = 0; i < state.range(0); ++i) {
    BitVector b(64);
    for (std::size_t k = 0; k < 64; ++k) b.set(k, rng.bernoulli(0.3));
    rows.emplace_back(Sha256Hex(sha256_hex(std::to_string(i))), b);
  }
  for (auto _ : state) benchmark::DoNotOptimize(csv_encode(cat, rows));
}
BENCHMARK(BM_CsvEncode)->Arg(100)->Arg(1000);

static void BM_CsvDecode(benchmark::State& state) {
  auto cat = permissions(64);
  Rng rng(6);
  std::vector<FeatureVector> rows;
  for (int i = 0; i < state.range(0); ++i) {
    BitVector b(64);
    for (std::size_t k = 0; k < 64; ++k) b.set(k, rng.bernoulli(0.3));
    rows.emplace_back(Sha256Hex(sha256_hex(std::to_string(i))), b);
  }
  auto bytes = csv_encode(cat, rows);
  for (auto _ : state) benchmark::DoNotOptimize(csv_decode(bytes));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes.size()));
}
BENCHMARK(BM_CsvDecode)->Arg(100)->Arg(1000);

static void BM_ManifestParse(benchmark::State& state) {
  auto text = read_file(GANGMAM_BENCH_MANIFEST);
  for (auto _ : state) benchmark::DoNotOptimize(parse_decoded_manifest(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ManifestParse);

BENCHMARK_MAIN();
