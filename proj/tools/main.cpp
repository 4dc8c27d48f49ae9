#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "shenh/log.hpp"
#include "shenh/pipeline/commands.hpp"
#include "shenh/pipeline/synth.hpp"

namespace fs = std::filesystem;
using namespace shenh;
using namespace shenh::pipeline;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--config", c.config, "JSON experiment configuration");
  cmd->add_option("--seed", c.seed, "override the configured seed");
  auto* o = cmd->add_option("--out", c.out, "output location");
  if (out_required) o->required();
  cmd->add_flag("--quiet", c.quiet, "warnings only");
}

ExperimentConfig resolve(const Common& c) {
  auto cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  set_log_level(c.quiet ? LogLevel::warning : LogLevel::info);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spherical-harmonic multichannel speech enhancement toolkit"};
  app.require_subcommand(1);

  Common common;

  auto* synth = app.add_subcommand("synth", "write a synthetic speech or noise corpus");
  std::string kind = "speech";
  std::size_t count = 60;
  double seconds = 2.0;
  add_common(synth, common);
  synth->add_option("--kind", kind, "speech or noise")->check(CLI::IsMember({"speech", "noise"}));
  synth->add_option("--count", count, "number of files");
  synth->add_option("--seconds", seconds, "duration of each file");

  auto* rir = app.add_subcommand("rir", "simulate room impulse responses for all scenarios");
  add_common(rir, common);

  auto* mix = app.add_subcommand("mix", "build mixture / target pairs");
  std::string speech_dir, noise_dir, rir_dir;
  add_common(mix, common);
  mix->add_option("--speech", speech_dir, "directory of mono 16 kHz speech WAVs")->required();
  mix->add_option("--noise", noise_dir, "directory of mono 16 kHz noise WAVs");
  mix->add_option("--rirs", rir_dir, "output directory of the rir command")->required();

  auto* feats = app.add_subcommand("features", "extract STFT and SHT tensors");
  std::string data_dir;
  std::optional<int> order;
  add_common(feats, common);
  feats->add_option("--data", data_dir, "output directory of the mix command")->required();
  feats->add_option("--order", order, "SHT truncation order (overrides the config)");

  auto* train = app.add_subcommand("train", "train the enhancer");
  std::string features_dir, resume, variant;
  std::optional<std::size_t> epochs;
  add_common(train, common);
  train->add_option("--data", features_dir, "output directory of the features command")->required();
  train->add_option("--resume", resume, "continue from this checkpoint");
  train->add_option("--variant", variant, "serial or parallel")
      ->check(CLI::IsMember({"serial", "parallel"}));
  train->add_option("--epochs", epochs, "total epochs (overrides the config)");

  auto* eval = app.add_subcommand("eval", "score a checkpoint on the eval grid");
  std::string model_path;
  add_common(eval, common);
  eval->add_option("--model", model_path, "checkpoint written by train")->required();
  eval->add_option("--data", features_dir, "output directory of the features command")->required();

  auto* info = app.add_subcommand("info", "parameter and FLOP counts");
  add_common(info, common, false);
  info->add_option("--variant", variant, "serial or parallel")
      ->check(CLI::IsMember({"serial", "parallel"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    auto cfg = resolve(common);
    if (!variant.empty()) {
      const auto v = parse_variant(variant);
      if (v != cfg.model.variant) {
        if (cfg.model.glu_channels == nn::EnhancerConfig::full_size(cfg.model.variant).glu_channels) {
          cfg.model.glu_channels = nn::EnhancerConfig::full_size(v).glu_channels;
        }
        cfg.model.variant = v;
      }
    }
    if (order) {
      cfg.sht_order = *order;
      cfg.model.sht_channels = cfg.sht_channels();
    }
    if (epochs) cfg.epochs = *epochs;
    cfg.validate();

    if (*synth) {
      const auto files = write_corpus(common.out, parse_corpus_kind(kind), count, seconds, cfg.seed,
                                      cfg.sample_rate);
      std::cout << "wrote " << files.size() << " files to " << common.out << "\n";
    } else if (*rir) {
      std::cout << "wrote " << cmd_rir(cfg, common.out) << " scenarios to " << common.out << "\n";
    } else if (*mix) {
      if (noise_dir.empty() && !cfg.zero_noise) {
        throw std::invalid_argument("--noise is required unless zero_noise is set");
      }
      std::cout << "wrote " << cmd_mix(cfg, speech_dir, noise_dir, rir_dir, common.out)
                << " pairs to " << common.out << "\n";
    } else if (*feats) {
      std::cout << "wrote features for " << cmd_features(cfg, data_dir, common.out)
                << " utterances to " << common.out << "\n";
    } else if (*train) {
      TrainOptions opt;
      if (!resume.empty()) opt.resume = fs::path(resume);
      const auto history = cmd_train(cfg, features_dir, common.out, opt);
      if (!history.empty()) {
        std::cout << "final validation loss " << history.back().validation_loss << " after "
                  << history.back().epoch << " epochs\n";
      }
    } else if (*eval) {
      const auto summary = cmd_eval(cfg, model_path, features_dir, common.out);
      std::cout << summary.table;
    } else if (*info) {
      std::cout << cmd_info(cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return EXIT_FAILURE;
  }
  return EXIT_SUCCESS;
}
