#include "shenh/pipeline/config.hpp"

#include <set>
#include <stdexcept>

#include "shenh/io/atomic_file.hpp"

namespace shenh::pipeline {

using nlohmann::json;

namespace {

// Reads known keys from an object and rejects the rest.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw std::invalid_argument(where_ + ": expected an object");
  }
  ~Fields() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw std::invalid_argument(where_ + ": unknown key '" + key + "'");
    }
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw std::invalid_argument(where_ + "." + key + ": " + e.what());
    }
  }
  const json* sub(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace

std::size_t ExperimentConfig::sht_channels() const {
  if (sht_order < 0) return 0;
  const auto q = static_cast<std::size_t>(sht_order + 1);
  return 2 * q * q;
}

void ExperimentConfig::sync_model() {
  model.stft_channels = stft_channels();
  model.sht_channels = sht_channels();
  model.bins = stft.bins();
}

ArrayGeometry ExperimentConfig::array() const { return uniform_circular_array(mic_count, array_radius); }

void ExperimentConfig::validate() const {
  stft.validate();
  if (sample_rate != stft.sample_rate) throw std::invalid_argument("stft.sample_rate must match sample_rate");
  for (double d : room) {
    if (!(d > 0.0)) throw std::invalid_argument("room dimensions must be positive");
  }
  if (wall_margin < 0.0) throw std::invalid_argument("wall_margin must be non-negative");
  for (double d : room) {
    if (d <= 2.0 * (wall_margin + array_radius)) throw std::invalid_argument("array does not fit in the room");
  }
  if (!(source_distance > 0.0)) throw std::invalid_argument("source_distance must be positive");
  if (mic_count == 0) throw std::invalid_argument("mic_count must be positive");
  if (sht_order < 0) throw std::invalid_argument("sht_order must be non-negative");
  if (train_snr_min > train_snr_max || train_rt60_min > train_rt60_max) {
    throw std::invalid_argument("training ranges must have min <= max");
  }
  if (eval_snrs.empty() || eval_rt60s.empty()) throw std::invalid_argument("eval grid is empty");
  if (split_modulo < 3) throw std::invalid_argument("split_modulo must be at least 3");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be non-negative");
  if (model.stft_channels != stft_channels() || model.sht_channels != sht_channels() ||
      model.bins != stft.bins()) {
    throw std::invalid_argument("model input widths disagree with mic_count / sht_order / stft");
  }
  model.validate();
}

json to_json(const nn::EnhancerConfig& c) {
  return {{"variant", to_string(c.variant)},
          {"stft_channels", c.stft_channels},
          {"sht_channels", c.sht_channels},
          {"encoder_blocks", c.encoder_blocks},
          {"glu_channels", c.glu_channels},
          {"decoder_blocks", c.decoder_blocks},
          {"decoder_channels", c.decoder_channels},
          {"kernel_freq", c.kernel_freq},
          {"kernel_time", c.kernel_time},
          {"recurrent_hidden", c.recurrent_hidden},
          {"bins", c.bins},
          {"direction", nn::to_string(c.direction)},
          {"skip_connections", c.skip_connections},
          {"bn_momentum", c.bn_momentum},
          {"bn_eps", c.bn_eps}};
}

nn::EnhancerConfig enhancer_config_from_json(const json& j) {
  nn::EnhancerConfig c;
  Fields f(j, "model");
  std::string variant = to_string(c.variant);
  std::string direction = nn::to_string(c.direction);
  f.get("variant", variant);
  f.get("direction", direction);
  c.variant = parse_variant(variant);
  c.direction = nn::parse_direction(direction);
  f.get("stft_channels", c.stft_channels);
  f.get("sht_channels", c.sht_channels);
  f.get("encoder_blocks", c.encoder_blocks);
  f.get("glu_channels", c.glu_channels);
  f.get("decoder_blocks", c.decoder_blocks);
  f.get("decoder_channels", c.decoder_channels);
  f.get("kernel_freq", c.kernel_freq);
  f.get("kernel_time", c.kernel_time);
  f.get("recurrent_hidden", c.recurrent_hidden);
  f.get("bins", c.bins);
  f.get("skip_connections", c.skip_connections);
  f.get("bn_momentum", c.bn_momentum);
  f.get("bn_eps", c.bn_eps);
  return c;
}

json to_json(const ExperimentConfig& c) {
  return {{"seed", c.seed},
          {"sample_rate", c.sample_rate},
          {"sound_speed", c.sound_speed},
          {"room", c.room},
          {"wall_margin", c.wall_margin},
          {"source_distance", c.source_distance},
          {"mic_count", c.mic_count},
          {"array_radius", c.array_radius},
          {"noise_sources", c.noise_sources},
          {"train_snr_min", c.train_snr_min},
          {"train_snr_max", c.train_snr_max},
          {"train_rt60_min", c.train_rt60_min},
          {"train_rt60_max", c.train_rt60_max},
          {"eval_snrs", c.eval_snrs},
          {"eval_rt60s", c.eval_rt60s},
          {"train_scenarios", c.train_scenarios},
          {"pairs_per_cell", c.pairs_per_cell},
          {"direct_path_target", c.direct_path_target},
          {"zero_noise", c.zero_noise},
          {"split_modulo", c.split_modulo},
          {"sht_order", c.sht_order},
          {"stft",
           {{"frame_len", c.stft.frame_len},
            {"hop", c.stft.hop},
            {"fft_size", c.stft.fft_size},
            {"sample_rate", c.stft.sample_rate}}},
          {"model", to_json(c.model)},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"segment_frames", c.segment_frames}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  {
    Fields f(j, "config");
    f.get("seed", c.seed);
    f.get("sample_rate", c.sample_rate);
    f.get("sound_speed", c.sound_speed);
    f.get("room", c.room);
    f.get("wall_margin", c.wall_margin);
    f.get("source_distance", c.source_distance);
    f.get("mic_count", c.mic_count);
    f.get("array_radius", c.array_radius);
    f.get("noise_sources", c.noise_sources);
    f.get("train_snr_min", c.train_snr_min);
    f.get("train_snr_max", c.train_snr_max);
    f.get("train_rt60_min", c.train_rt60_min);
    f.get("train_rt60_max", c.train_rt60_max);
    f.get("eval_snrs", c.eval_snrs);
    f.get("eval_rt60s", c.eval_rt60s);
    f.get("train_scenarios", c.train_scenarios);
    f.get("pairs_per_cell", c.pairs_per_cell);
    f.get("direct_path_target", c.direct_path_target);
    f.get("zero_noise", c.zero_noise);
    f.get("split_modulo", c.split_modulo);
    f.get("sht_order", c.sht_order);
    f.get("epochs", c.epochs);
    f.get("batch_size", c.batch_size);
    f.get("learning_rate", c.learning_rate);
    f.get("segment_frames", c.segment_frames);
    if (const json* s = f.sub("stft")) {
      Fields g(*s, "stft");
      g.get("frame_len", c.stft.frame_len);
      g.get("hop", c.stft.hop);
      g.get("fft_size", c.stft.fft_size);
      g.get("sample_rate", c.stft.sample_rate);
    }
    if (const json* m = f.sub("model")) {
      c.model = enhancer_config_from_json(*m);
      // Input widths follow the data settings unless given explicitly.
      if (!m->contains("stft_channels")) c.model.stft_channels = c.stft_channels();
      if (!m->contains("sht_channels")) c.model.sht_channels = c.sht_channels();
      if (!m->contains("bins")) c.model.bins = c.stft.bins();
    } else {
      c.sync_model();
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  if (path.empty()) {
    ExperimentConfig c;
    c.sync_model();
    c.validate();
    return c;
  }
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace shenh::pipeline
