#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "shenh/array.hpp"
#include "shenh/nn/config.hpp"
#include "shenh/spectral.hpp"

namespace shenh::pipeline {

/// Everything the CLI needs to reproduce a run. JSON keys mirror the field
/// names; absent keys keep their defaults, unknown keys are rejected.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  double sample_rate = 16000.0;
  double sound_speed = 343.0;

  // Scenes.
  Vec3 room{6.0, 5.0, 4.0};
  double wall_margin = 0.1;
  double source_distance = 1.0;
  std::size_t mic_count = 9;
  double array_radius = 0.035;
  std::size_t noise_sources = 1;  // point sources; several approximate a diffuse field
  double train_snr_min = -6.0;
  double train_snr_max = 6.0;
  double train_rt60_min = 0.2;
  double train_rt60_max = 1.0;
  std::vector<double> eval_snrs{-5.0, 0.0, 5.0};
  std::vector<double> eval_rt60s{0.2, 0.3, 0.4, 0.5, 0.6};
  std::size_t train_scenarios = 50;
  std::size_t pairs_per_cell = 10;

  // Mixing.
  bool direct_path_target = false;
  bool zero_noise = false;
  std::size_t split_modulo = 10;  // speech file hash % modulo: 0 test, 1 validation

  // Features.
  int sht_order = 4;
  StftConfig stft;

  // Model and training.
  nn::EnhancerConfig model;
  std::size_t epochs = 5;
  std::size_t batch_size = 4;
  double learning_rate = 1e-3;
  std::size_t segment_frames = 0;  // random training crops; 0 = whole utterances

  std::size_t stft_channels() const { return 2 * mic_count; }
  std::size_t sht_channels() const;
  /// Fills the model's input widths and bin count from the data settings.
  void sync_model();
  void validate() const;
  ArrayGeometry array() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const nlohmann::json& j);
/// Empty path gives the defaults.
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const nn::EnhancerConfig& c);
nn::EnhancerConfig enhancer_config_from_json(const nlohmann::json& j);

}  // namespace shenh::pipeline
