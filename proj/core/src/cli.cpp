#include "gangmam/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <iomanip>
#include <sstream>
#include <ostream>

#include "gangmam/detector.hpp"
#include "gangmam/error.hpp"
#include "gangmam/gang_engine.hpp"
#include "gangmam/hashing.hpp"
#include "gangmam/pipeline.hpp"
#include "gangmam/version.hpp"

namespace gangmam {

namespace fs = std::filesystem;

std::string help_text() {
  return "Usage: gangmam [-e <emulator>] [-n <csv>] [-c] [-v] [-h] [options]\n"
         "       gangmam train --model <path> [train options]\n"
         "\n"
         "  -e <name>   name of the emulator to validate on\n"
         "  -c          clean all output folder contents created earlier\n"
         "  -n <path>   feature vector file to run in No GANG mode\n"
         "  -v          print the tool version\n"
         "  -h          this help message\n"
         "\n"
         "Options:\n"
         "  --config <path>      config file (default: $GANGMAM_CONFIG)\n"
         "  --input <dir>        directory of input APKs\n"
         "  --output <dir>       output directory\n"
         "  --mode <m>           live, replay or record\n"
         "  --transcript <path>  tool transcript for replay/record\n"
         "  --model <path>       trained GANG model\n"
         "  --workers <n>        parallel APK workers\n"
         "  --seed <n>           generator noise seed\n"
         "\n"
         "Train options:\n"
         "  --model <path>            where to write the model\n"
         "  --malware <csv> --benign <csv>   labeled feature tables (else synthetic)\n"
         "  --catalog <csv>           feature names for the synthetic corpus\n"
         "  --dims <n> --samples <n>  synthetic corpus shape (default 64, 500 per class)\n"
         "  --seed <n> --epochs <n> --lr <x>\n"
         "  --detector-epochs <n> --detector-lr <x>\n"
         "\n"
         "Exit codes: 0 success, 2 usage error, 3 environment error.\n";
}

namespace {

bool has_any(const std::vector<std::string>& args, std::initializer_list<const char*> flags) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return std::any_of(flags.begin(), flags.end(), [&](const char* f) { return a == f; });
  });
}

[[noreturn]] void rethrow_cli(const CLI::ParseError& e) {
  const std::string what = e.what();
  if (dynamic_cast<const CLI::ExtrasError*>(&e)) throw Error(Errc::UnknownFlag, what);
  if (dynamic_cast<const CLI::ArgumentMismatch*>(&e)) throw Error(Errc::MissingValue, what);
  if (dynamic_cast<const CLI::ExcludesError*>(&e)) throw Error(Errc::ConflictingFlags, what);
  if (dynamic_cast<const CLI::RequiredError*>(&e)) throw Error(Errc::MissingValue, what);
  throw Error(Errc::BadParams, what);
}

}  // namespace

Command parse_args(const std::vector<std::string>& args) {
  if (has_any(args, {"-h", "--help"})) return {Help{}, {}};
  if (has_any(args, {"-v", "--version"})) return {Version{}, {}};

  CLI::App app{"gangmam"};
  app.set_help_flag();
  app.allow_extras(false);

  Command cmd{RunFull{}, {}};
  Overrides& ov = cmd.overrides;
  std::string emulator, csv, mode;
  fs::path config, input, output, transcript, model;
  unsigned workers = 0;
  std::uint64_t seed = 0;

  auto* opt_e = app.add_option("-e", emulator);
  auto* opt_n = app.add_option("-n", csv);
  auto* opt_c = app.add_flag("-c");
  opt_c->excludes(opt_n)->excludes(opt_e);
  auto* opt_config = app.add_option("--config", config);
  auto* opt_input = app.add_option("--input", input);
  auto* opt_output = app.add_option("--output", output);
  auto* opt_mode = app.add_option("--mode", mode);
  auto* opt_transcript = app.add_option("--transcript", transcript);
  auto* opt_model = app.add_option("--model", model);
  auto* opt_workers = app.add_option("--workers", workers);
  auto* opt_seed = app.add_option("--seed", seed);

  Train train;
  std::string malware, benign, catalog;
  auto* sub = app.add_subcommand("train");
  sub->set_help_flag();
  sub->add_option("--model", train.model_out)->required();
  auto* opt_mal = sub->add_option("--malware", malware);
  auto* opt_ben = sub->add_option("--benign", benign);
  opt_mal->needs(opt_ben);
  opt_ben->needs(opt_mal);
  auto* opt_cat = sub->add_option("--catalog", catalog);
  opt_cat->excludes(opt_mal);
  sub->add_option("--dims", train.dims);
  sub->add_option("--samples", train.samples);
  sub->add_option("--seed", train.seed);
  sub->add_option("--epochs", train.epochs);
  sub->add_option("--lr", train.learning_rate);
  sub->add_option("--detector-epochs", train.detector_epochs);
  sub->add_option("--detector-lr", train.detector_learning_rate);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    rethrow_cli(e);
  }

  if (*opt_config) ov.config = config;
  if (*opt_input) ov.input = input;
  if (*opt_output) ov.output = output;
  if (*opt_mode) ov.mode = mode;
  if (*opt_transcript) ov.transcript = transcript;
  if (*opt_model) ov.model = model;
  if (*opt_workers) ov.workers = workers;
  if (*opt_seed) ov.seed = seed;

  if (sub->parsed()) {
    if (*opt_e || *opt_n || *opt_c) {
      throw Error(Errc::ConflictingFlags, "train does not combine with -e, -n or -c");
    }
    if (*opt_mal) train.malware_csv = malware;
    if (*opt_ben) train.benign_csv = benign;
    if (*opt_cat) train.catalog = catalog;
    cmd.action = train;
    return cmd;
  }
  if (*opt_c) {
    cmd.action = Clean{};
  } else if (*opt_n) {
    if (csv.empty()) throw Error(Errc::MissingValue, "-n needs a feature vector file path");
    RunNoGang r{csv, {}};
    if (*opt_e) r.emulator = emulator;
    cmd.action = r;
  } else {
    RunFull r;
    if (*opt_e) r.emulator = emulator;
    cmd.action = r;
  }
  return cmd;
}

Config resolve_config(const Command& command) {
  const auto& ov = command.overrides;
  Config cfg;
  std::optional<fs::path> file = ov.config;
  if (!file) {
    if (const char* env = std::getenv(kConfigEnvVar); env && *env) file = fs::path(env);
  }
  if (file) cfg = load_config(*file);
  if (ov.input) cfg.input_dir = *ov.input;
  if (ov.output) cfg.output_dir = *ov.output;
  if (ov.transcript) cfg.transcript = *ov.transcript;
  if (ov.model) cfg.model_path = *ov.model;
  if (ov.mode) {
    try {
      cfg.mode = mode_kind_from_string(*ov.mode);
    } catch (const Error& e) {
      throw Error(Errc::BadConfig, e.what());
    }
  }
  if (ov.workers) cfg.workers = *ov.workers;
  if (ov.seed) cfg.seed = *ov.seed;
  if (const auto* r = std::get_if<RunFull>(&command.action); r && r->emulator) cfg.emulator = *r->emulator;
  if (const auto* r = std::get_if<RunNoGang>(&command.action); r && r->emulator) cfg.emulator = *r->emulator;
  cfg.validate();
  return cfg;
}

namespace {

std::vector<FeatureDefinition> synthetic_names(std::size_t dims) {
  std::vector<FeatureDefinition> defs;
  for (std::size_t i = 0; i < dims; ++i) {
    std::ostringstream name;
    name << "SYNTHETIC_" << std::setw(4) << std::setfill('0') << i;
    defs.push_back({FeatureKind::Permission, make_feature_name(FeatureKind::Permission, name.str())});
  }
  return defs;
}

int run_train(const Train& t, std::ostream& out) {
  LabeledCorpus corpus;
  FeatureCatalog catalog;
  if (t.malware_csv) {
    auto mal = csv_decode(read_file(*t.malware_csv));
    auto ben = csv_decode(read_file(*t.benign_csv));
    if (!(mal.catalog == ben.catalog)) {
      throw Error(Errc::CatalogMismatch, "malware and benign tables use different catalogs");
    }
    catalog = mal.catalog;
    corpus.dims = catalog.size();
    for (auto& v : mal.vectors) {
      corpus.vectors.push_back(v);
      corpus.labels.push_back(Label::Malicious);
    }
    for (auto& v : ben.vectors) {
      corpus.vectors.push_back(v);
      corpus.labels.push_back(Label::Benign);
    }
  } else {
    if (t.catalog) {
      catalog = csv_decode(read_file(*t.catalog)).catalog;
    } else {
      auto defs = synthetic_names(t.dims);
      catalog = build_catalog(defs);
    }
    corpus = synth_corpus(t.seed, catalog.size(), t.samples, t.samples);
  }

  auto split = split_corpus(corpus, 0.2);
  auto detector = train_logistic(split.train, t.detector_epochs, t.detector_learning_rate);
  out << "black box holdout accuracy " << accuracy(detector, split.holdout) << '\n';

  GanConfig gc;
  gc.epochs = t.epochs;
  gc.learning_rate = t.learning_rate;
  gc.seed = t.seed;
  auto model = init_gan(catalog.size(), gc);
  auto mal = split.train.with_label(Label::Malicious);
  auto ben = split.train.with_label(Label::Benign);
  auto trained = train_gan(std::move(model), mal, ben, detector);

  write_file(t.model_out, model_save(trained.model));
  write_file(fs::path(t.model_out.string() + ".catalog.csv"), csv_encode(catalog, {}));
  write_file(fs::path(t.model_out.string() + ".detector"), detector_save(detector));
  out << "final evasion rate " << trained.report.final_evasion_rate << '\n';
  out << "model written to " << t.model_out.string() << '\n';
  return kExitOk;
}

bool is_usage_error(Errc code) {
  switch (code) {
    case Errc::UnknownFlag:
    case Errc::MissingValue:
    case Errc::ConflictingFlags:
    case Errc::BadParams:
      return true;
    default:
      return false;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            std::shared_ptr<Launcher> launcher) {
  Command cmd;
  try {
    cmd = parse_args(args);
  } catch (const Error& e) {
    err << "gangmam: " << e.what() << "\n(see -h)\n";
    return kExitUsage;
  }

  try {
    return std::visit(
        [&](const auto& action) -> int {
          using T = std::decay_t<decltype(action)>;
          if constexpr (std::is_same_v<T, Help>) {
            out << help_text();
            return kExitOk;
          } else if constexpr (std::is_same_v<T, Version>) {
            out << "gangmam " << kVersion << '\n';
            return kExitOk;
          } else if constexpr (std::is_same_v<T, Train>) {
            return run_train(action, out);
          } else if constexpr (std::is_same_v<T, Clean>) {
            auto cfg = resolve_config(cmd);
            std::vector<fs::path> keep = {cfg.input_dir, cfg.model_path, cfg.transcript};
            if (cmd.overrides.config) keep.push_back(*cmd.overrides.config);
            clean_output(cfg.output_dir, keep);
            out << "cleaned " << cfg.output_dir.string() << '\n';
            return kExitOk;
          } else {
            RunRequest req{resolve_config(cmd), {}, launcher};
            if constexpr (std::is_same_v<T, RunNoGang>) req.nogang_csv = action.csv;
            run_pipeline(req, &out);
            return kExitOk;
          }
        },
        cmd.action);
  } catch (const Error& e) {
    err << "gangmam: " << e.what() << '\n';
    return is_usage_error(e.code()) ? kExitUsage : kExitEnvironment;
  } catch (const std::exception& e) {
    err << "gangmam: " << e.what() << '\n';
    return kExitEnvironment;
  }
}

}  // namespace gangmam
