#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "shenh/nn/enhancer.hpp"
#include "shenh/pipeline/config.hpp"

namespace shenh::pipeline {

namespace fs = std::filesystem;

inline constexpr const char* kManifestName = "manifest.jsonl";

/// Line-delimited JSON records.
std::vector<nlohmann::json> read_manifest(const fs::path& path);
void write_manifest(const fs::path& path, const std::vector<nlohmann::json>& records);

/// Simulates one impulse-response set per scenario: the training scenarios
/// followed by pairs_per_cell scenarios for every eval (snr, rt60) cell.
/// Returns the number of scenarios written.
std::size_t cmd_rir(const ExperimentConfig& config, const fs::path& out_dir);

/// Mixture (all mics) and target (reference mic) for every scenario.
std::size_t cmd_mix(const ExperimentConfig& config, const fs::path& speech_dir,
                    const fs::path& noise_dir, const fs::path& rir_dir, const fs::path& out_dir);

/// STFT and SHT tensors per utterance, plus the target and unprocessed
/// reference channel so the directory is self-contained.
std::size_t cmd_features(const ExperimentConfig& config, const fs::path& data_dir,
                         const fs::path& out_dir);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double learning_rate = 0.0;
  std::uint64_t steps = 0;
};

struct TrainOptions {
  std::optional<fs::path> resume;
  /// Stop after this many epochs in total (defaults to config.epochs).
  std::optional<std::size_t> stop_after;
};

/// Writes <out>/model.ckpt after every epoch and <out>/losses.jsonl.
std::vector<EpochRecord> cmd_train(const ExperimentConfig& config, const fs::path& features_dir,
                                   const fs::path& out_dir, const TrainOptions& options = {});

struct CellResult {
  double snr = 0.0;
  double rt60 = 0.0;
  std::size_t count = 0;
  double stoi_unprocessed = 0.0;
  double stoi_enhanced = 0.0;
  double si_sdr_unprocessed = 0.0;
  double si_sdr_enhanced = 0.0;
};

struct EvalSummary {
  std::vector<CellResult> cells;  // grid order; count 0 marks a missing cell
  CellResult overall;
  std::string table;
};

/// Scores every eval-split utterance; writes per-utterance, per-cell, per-row
/// and overall records to `report`.
EvalSummary cmd_eval(const ExperimentConfig& config, const fs::path& checkpoint,
                     const fs::path& features_dir, const fs::path& report);

std::string cmd_info(const ExperimentConfig& config);

/// Model rebuilt from a checkpoint written by cmd_train.
nn::Enhancer<float> load_model(const fs::path& checkpoint);

/// 64-bit FNV-1a, used for the file-name split.
std::uint64_t fnv1a(const std::string& s);

}  // namespace shenh::pipeline
