#include "shenh/pipeline/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <iomanip>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>

#include "shenh/acoustics.hpp"
#include "shenh/features.hpp"
#include "shenh/io/atomic_file.hpp"
#include "shenh/io/checkpoint.hpp"
#include "shenh/io/tensor_file.hpp"
#include "shenh/io/wav.hpp"
#include "shenh/log.hpp"
#include "shenh/metrics.hpp"
#include "shenh/nn/training.hpp"

namespace shenh::pipeline {

using nlohmann::json;

namespace {

// Stream separators for the per-item generators.
constexpr std::uint64_t kMixSalt = 0x6d69780000000000ULL;
constexpr std::uint64_t kEpochSalt = 0x65706f6368000000ULL;
constexpr std::uint64_t kCropSalt = 0x63726f7000000000ULL;

// Runs fn(i) for i in [0, n) across threads; rethrows the first failure.
template <class Fn>
void parallel_for(std::size_t n, Fn fn) {
  std::exception_ptr error;
  std::mutex mutex;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

std::string item_id(const char* prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%05zu", prefix, index);
  return buf;
}

std::vector<fs::path> list_wavs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw std::runtime_error("no .wav files in " + dir.string());
  return out;
}

Vec3 vec3(const json& j) { return j.get<Vec3>(); }

double dist(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2]));
}

bool within(const Vec3& p, const Vec3& room, double margin) {
  for (int a = 0; a < 3; ++a) {
    if (p[a] < margin || p[a] > room[a] - margin) return false;
  }
  return true;
}

struct Placement {
  Vec3 center;
  Vec3 source;
  std::vector<Vec3> noise;
};

Placement place(const ExperimentConfig& c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double inset = c.wall_margin + c.array_radius;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Placement p;
    for (int a = 0; a < 3; ++a) p.center[a] = inset + (c.room[a] - 2.0 * inset) * u(rng);
    const double z = 2.0 * u(rng) - 1.0;
    const double phi = 2.0 * kPi * u(rng);
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3 dir{s * std::cos(phi), s * std::sin(phi), z};
    for (int a = 0; a < 3; ++a) p.source[a] = p.center[a] + c.source_distance * dir[a];
    if (!within(p.source, c.room, c.wall_margin)) continue;
    bool ok = true;
    for (std::size_t k = 0; k < c.noise_sources && ok; ++k) {
      Vec3 n{};
      int tries = 0;
      do {
        for (int a = 0; a < 3; ++a) {
          n[a] = c.wall_margin + (c.room[a] - 2.0 * c.wall_margin) * u(rng);
        }
      } while ((dist(n, p.center) < 0.5 || dist(n, p.source) < 0.5) && ++tries < 1000);
      ok = tries < 1000;
      p.noise.push_back(n);
    }
    if (ok) return p;
  }
  throw std::runtime_error("could not place source and array inside the room");
}

RoomConfig room_for(const ExperimentConfig& c, double rt60, const Vec3& source, const Vec3& center) {
  RoomConfig r;
  r.dimensions = c.room;
  r.rt60 = rt60;
  r.source_pos = source;
  r.array_center = center;
  r.array = c.array();
  r.sample_rate = c.sample_rate;
  r.sound_speed = c.sound_speed;
  return r;
}

MultichannelSignal truncate(const MultichannelSignal& x, std::size_t samples) {
  return x.samples() == samples ? x : x.resized(samples);
}

}  // namespace

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<json> read_manifest(const fs::path& path) {
  std::istringstream in(io::read_file(path));
  std::vector<json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_manifest(const fs::path& path, const std::vector<json>& records) {
  std::string text;
  for (const auto& r : records) {
    text += r.dump();
    text += '\n';
  }
  io::write_atomic(path, text);
}

// ------------------------------------------------------------------------ rir

std::size_t cmd_rir(const ExperimentConfig& c, const fs::path& out_dir) {
  c.validate();
  struct Plan {
    std::string split;
    double snr;
    double rt60;
  };
  std::vector<Plan> plans;
  for (std::size_t i = 0; i < c.train_scenarios; ++i) plans.push_back({"train", 0.0, 0.0});
  for (double snr : c.eval_snrs) {
    for (double rt60 : c.eval_rt60s) {
      for (std::size_t k = 0; k < c.pairs_per_cell; ++k) plans.push_back({"eval", snr, rt60});
    }
  }
  if (plans.empty()) throw std::invalid_argument("configuration requests no scenarios");

  fs::create_directories(out_dir);
  std::vector<json> records(plans.size());
  parallel_for(plans.size(), [&](std::size_t i) {
    const std::uint64_t seed = c.seed ^ static_cast<std::uint64_t>(i);
    std::mt19937_64 rng(seed);
    Plan p = plans[i];
    if (p.split == "train") {
      std::uniform_real_distribution<double> snr(c.train_snr_min, c.train_snr_max);
      std::uniform_real_distribution<double> rt(c.train_rt60_min, c.train_rt60_max);
      p.snr = snr(rng);
      p.rt60 = rt(rng);
    }
    const Placement pl = place(c, rng);
    const std::string id = item_id("s", i);

    const auto rir = simulate_rir(room_for(c, p.rt60, pl.source, pl.center));
    io::write_wav(out_dir / (id + ".wav"), rir);
    json noise_files = json::array();
    for (std::size_t k = 0; k < pl.noise.size(); ++k) {
      const auto nr = simulate_rir(room_for(c, p.rt60, pl.noise[k], pl.center));
      const std::string name = id + "_noise" + std::to_string(k) + ".wav";
      io::write_wav(out_dir / name, nr);
      noise_files.push_back(name);
    }
    json mics = json::array();
    for (const auto& m : room_for(c, p.rt60, pl.source, pl.center).mic_positions()) mics.push_back(m);
    records[i] = {{"id", id},
                  {"index", i},
                  {"split", p.split},
                  {"seed", seed},
                  {"snr", p.snr},
                  {"rt60", p.rt60},
                  {"room", c.room},
                  {"source", pl.source},
                  {"array_center", pl.center},
                  {"mics", mics},
                  {"noise_positions", pl.noise},
                  {"rir", id + ".wav"},
                  {"noise_rirs", noise_files}};
  });
  write_manifest(out_dir / kManifestName, records);
  return records.size();
}

// ------------------------------------------------------------------------ mix

std::size_t cmd_mix(const ExperimentConfig& c, const fs::path& speech_dir, const fs::path& noise_dir,
                    const fs::path& rir_dir, const fs::path& out_dir) {
  c.validate();
  const auto scenarios = read_manifest(rir_dir / kManifestName);
  if (scenarios.empty()) throw std::runtime_error("no scenarios in " + rir_dir.string());
  const auto speech = list_wavs(speech_dir);
  const auto noises = c.zero_noise ? std::vector<fs::path>{} : list_wavs(noise_dir);

  std::vector<fs::path> test_pool;
  std::vector<fs::path> train_pool;
  for (const auto& s : speech) {
    (fnv1a(s.filename().string()) % c.split_modulo == 0 ? test_pool : train_pool).push_back(s);
  }
  if (test_pool.empty() || train_pool.empty()) {
    throw std::runtime_error("speech corpus too small to split into train and test by file hash (" +
                             std::to_string(speech.size()) + " files)");
  }
  const auto is_validation = [&](const fs::path& p) {
    return fnv1a(p.filename().string()) % c.split_modulo == 1;
  };

  fs::create_directories(out_dir);
  std::vector<json> records(scenarios.size());
  parallel_for(scenarios.size(), [&](std::size_t i) {
    const json& sc = scenarios[i];
    const std::string id = sc.at("id").get<std::string>();
    const std::string split = sc.at("split").get<std::string>();
    const double snr = sc.at("snr").get<double>();
    const double rt60 = sc.at("rt60").get<double>();
    std::mt19937_64 rng(sc.at("seed").get<std::uint64_t>() ^ kMixSalt);

    const auto& pool = split == "eval" ? test_pool : train_pool;
    const fs::path speech_file = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    const auto dry = io::read_wav(speech_file, c.sample_rate);
    if (dry.channels() != 1) throw std::runtime_error(speech_file.string() + " is not mono");
    const std::size_t len = dry.samples();

    const auto rir = io::read_wav(rir_dir / sc.at("rir").get<std::string>(), c.sample_rate);
    if (rir.channels() != c.mic_count) {
      throw std::runtime_error(id + ": impulse response has " + std::to_string(rir.channels()) +
                               " channels, config expects " + std::to_string(c.mic_count));
    }
    const auto reverberant = truncate(apply_rir(dry, rir), len);

    MultichannelSignal target;
    if (c.direct_path_target) {
      RoomConfig room = room_for(c, rt60, vec3(sc.at("source")), vec3(sc.at("array_center")));
      room.max_order = 0;
      const auto direct = simulate_rir(room);
      target = truncate(apply_rir(dry, direct), len).extract(0);
    } else {
      target = reverberant.extract(0);
    }

    json rec = {{"id", id},
                {"index", sc.at("index")},
                {"split", split == "eval" ? "eval" : (is_validation(speech_file) ? "validation" : "train")},
                {"snr", snr},
                {"rt60", rt60},
                {"speech", speech_file.filename().string()},
                {"mixture", id + "_mix.wav"},
                {"target", id + "_target.wav"}};

    MultichannelSignal mixture;
    if (c.zero_noise) {
      mixture = reverberant;
      rec["noise"] = nullptr;
      rec["noise_scale"] = 0.0;
    } else {
      const fs::path noise_file =
          noises[std::uniform_int_distribution<std::size_t>(0, noises.size() - 1)(rng)];
      const auto noise = io::read_wav(noise_file, c.sample_rate);
      if (noise.channels() != 1) throw std::runtime_error(noise_file.string() + " is not mono");
      const std::size_t offset =
          std::uniform_int_distribution<std::size_t>(0, noise.samples() - 1)(rng);
      std::vector<double> seg(len);
      const auto src = noise.channel(0);
      for (std::size_t n = 0; n < len; ++n) seg[n] = src[(offset + n) % src.size()];
      const auto dry_noise = MultichannelSignal::mono(std::move(seg), c.sample_rate);

      MultichannelSignal field(c.mic_count, len, c.sample_rate);
      for (const auto& name : sc.at("noise_rirs")) {
        const auto nr = io::read_wav(rir_dir / name.get<std::string>(), c.sample_rate);
        const auto wet = truncate(apply_rir(dry_noise, nr), len);
        auto f = field.data();
        const auto w = wet.data();
        for (std::size_t k = 0; k < f.size(); ++k) f[k] += w[k];
      }
      const auto mixed = mix_at_snr(reverberant, field, snr, 0);
      mixture = mixed.mixture;
      rec["noise"] = noise_file.filename().string();
      rec["noise_offset"] = offset;
      rec["noise_scale"] = mixed.noise_scale;
    }
    io::write_wav(out_dir / (id + "_mix.wav"), mixture);
    io::write_wav(out_dir / (id + "_target.wav"), target);
    records[i] = std::move(rec);
  });
  write_manifest(out_dir / kManifestName, records);
  return records.size();
}

// ------------------------------------------------------------------- features

std::size_t cmd_features(const ExperimentConfig& c, const fs::path& data_dir,
                         const fs::path& out_dir) {
  c.validate();
  const auto items = read_manifest(data_dir / kManifestName);
  if (items.empty()) throw std::runtime_error("no utterances in " + data_dir.string());
  const auto geometry = c.array();
  fs::create_directories(out_dir);
  std::vector<json> records(items.size());
  parallel_for(items.size(), [&](std::size_t i) {
    const json& it = items[i];
    const std::string id = it.at("id").get<std::string>();
    const auto mix = io::read_wav(data_dir / it.at("mixture").get<std::string>(), c.sample_rate);
    const auto target = io::read_wav(data_dir / it.at("target").get<std::string>(), c.sample_rate);
    if (mix.channels() != geometry.count()) {
      throw std::runtime_error(id + ": mixture has " + std::to_string(mix.channels()) +
                               " channels, array has " + std::to_string(geometry.count()));
    }
    const auto spec = stft(mix, c.stft);
    const auto sht = extract_sht_features(spec, geometry, c.sht_order);
    const auto stft_t = split_complex(spec.data(), spec.frames(), spec.bins(), spec.channels());
    const auto sht_t = split_complex(sht.data(), sht.frames(), sht.bins(), sht.coeffs());
    if (stft_t.channels() != c.stft_channels() || sht_t.channels() != c.sht_channels()) {
      throw std::logic_error("feature widths disagree with the configuration");
    }

    io::write_tensor_file(out_dir / (id + ".stft.shtf"), io::to_record(stft_t.cast<float>()));
    io::write_tensor_file(out_dir / (id + ".sht.shtf"), io::to_record(sht_t.cast<float>()));
    io::write_tensor_file(out_dir / (id + ".target.shtf"),
                          io::make_record<double>({target.samples()}, target.channel(0)));
    io::write_tensor_file(out_dir / (id + ".reference.shtf"),
                          io::make_record<double>({mix.samples()}, mix.channel(0)));
    json rec = it;
    rec.erase("mixture");
    rec["frames"] = spec.frames();
    rec["bins"] = spec.bins();
    rec["samples"] = mix.samples();
    rec["sht_order"] = c.sht_order;
    rec["stft"] = id + ".stft.shtf";
    rec["sht"] = id + ".sht.shtf";
    rec["target"] = id + ".target.shtf";
    rec["reference"] = id + ".reference.shtf";
    records[i] = std::move(rec);
  });
  write_manifest(out_dir / kManifestName, records);
  return records.size();
}

// ---------------------------------------------------------------------- train

namespace {

struct Utterance {
  json record;
  Tensor3<float> stft;
  Tensor3<float> sht;
  std::vector<double> target;
  std::vector<double> reference;
  double gain = 1.0;  // level normalization applied to the model inputs and target
};

// Inputs and target are scaled so the reference-channel STFT has unit mean
// power. The raw levels sit near 1e-4 after the 1/(4 pi d) spreading.
double level_gain(const Tensor3<float>& stft) {
  double power = 0.0;
  const std::size_t n = stft.frames() * stft.bins();
  for (std::size_t t = 0; t < stft.frames(); ++t) {
    for (std::size_t f = 0; f < stft.bins(); ++f) {
      const double re = stft.at(t, f, 0);
      const double im = stft.at(t, f, 1);
      power += re * re + im * im;
    }
  }
  power /= static_cast<double>(std::max<std::size_t>(n, 1));
  return power > 0.0 ? 1.0 / std::sqrt(power) : 1.0;
}

void scale(Tensor3<float>& x, double g) {
  for (auto& v : x.data()) v = static_cast<float>(v * g);
}

Utterance load_utterance(const fs::path& dir, const json& rec) {
  Utterance u;
  u.record = rec;
  u.stft = io::to_tensor3(io::read_tensor_file(dir / rec.at("stft").get<std::string>()));
  u.sht = io::to_tensor3(io::read_tensor_file(dir / rec.at("sht").get<std::string>()));
  u.target = io::record_values<double>(io::read_tensor_file(dir / rec.at("target").get<std::string>()));
  if (rec.contains("reference")) {
    u.reference =
        io::record_values<double>(io::read_tensor_file(dir / rec.at("reference").get<std::string>()));
  }
  if (u.stft.frames() != u.sht.frames() || u.stft.bins() != u.sht.bins()) {
    throw std::runtime_error(rec.at("id").get<std::string>() + ": STFT and SHT tensors disagree");
  }
  u.gain = level_gain(u.stft);
  scale(u.stft, u.gain);
  scale(u.sht, u.gain);
  return u;
}

std::vector<Utterance> load_split(const fs::path& dir, const std::vector<json>& manifest,
                                  const std::string& split) {
  std::vector<const json*> wanted;
  for (const auto& r : manifest) {
    if (r.at("split").get<std::string>() == split) wanted.push_back(&r);
  }
  std::vector<Utterance> out(wanted.size());
  parallel_for(wanted.size(), [&](std::size_t i) { out[i] = load_utterance(dir, *wanted[i]); });
  return out;
}

void check_widths(const ExperimentConfig& c, const Utterance& u) {
  if (u.stft.channels() != c.model.stft_channels || u.sht.channels() != c.model.sht_channels ||
      u.stft.bins() != c.model.bins) {
    throw std::runtime_error("features of " + u.record.at("id").get<std::string>() +
                             " do not match the model input widths (regenerate features or fix "
                             "mic_count / sht_order)");
  }
}

nn::Example<float> make_example(const Utterance& u, Variant variant) {
  std::vector<double> target(u.target);
  for (auto& v : target) v *= u.gain;
  return {make_model_input<float>(u.stft, u.sht, variant), std::move(target)};
}

Tensor3<float> crop_frames(const Tensor3<float>& x, std::size_t start, std::size_t count) {
  Tensor3<float> out(count, x.bins(), x.channels());
  const std::size_t row = x.bins() * x.channels();
  std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(start * row), count * row,
              out.data().begin());
  return out;
}

nn::Example<float> make_crop(const Utterance& u, Variant variant, const StftConfig& stft,
                             std::size_t start, std::size_t count) {
  const std::size_t s0 = start * stft.hop;
  const std::size_t s1 = std::min(u.target.size(), s0 + stft.samples_for(count));
  std::vector<double> target(u.target.begin() + static_cast<std::ptrdiff_t>(std::min(s0, s1)),
                             u.target.begin() + static_cast<std::ptrdiff_t>(s1));
  for (auto& v : target) v *= u.gain;
  return {make_model_input<float>(crop_frames(u.stft, start, count), crop_frames(u.sht, start, count),
                                  variant),
          std::move(target)};
}

io::TensorRecord param_record(const nn::Param<float>& p) {
  std::vector<std::uint64_t> dims(p.shape.begin(), p.shape.end());
  return io::make_record<float>(dims, p.value);
}

io::TensorRecord moment_record(const nn::Param<float>& p, const std::vector<float>& m) {
  std::vector<std::uint64_t> dims(p.shape.begin(), p.shape.end());
  return io::make_record<float>(dims, m);
}

void restore(std::vector<float>& dst, const io::Checkpoint& ck, const std::string& name) {
  const auto v = io::record_values<float>(ck.at(name));
  if (v.size() != dst.size()) throw std::runtime_error("checkpoint tensor " + name + " has the wrong size");
  dst = v;
}

json epoch_json(const EpochRecord& e) {
  return {{"epoch", e.epoch},
          {"train_loss", e.train_loss},
          {"validation_loss", e.validation_loss},
          {"learning_rate", e.learning_rate},
          {"steps", e.steps}};
}

EpochRecord epoch_from_json(const json& j) {
  return {j.at("epoch").get<std::size_t>(), j.at("train_loss").get<double>(),
          j.at("validation_loss").get<double>(), j.at("learning_rate").get<double>(),
          j.at("steps").get<std::uint64_t>()};
}

}  // namespace

nn::Enhancer<float> load_model(const fs::path& checkpoint) {
  const auto ck = io::read_checkpoint(checkpoint);
  const auto mc = enhancer_config_from_json(ck.config.at("model"));
  nn::Enhancer<float> model(mc, 0);
  for (auto& p : model.params().params()) restore(p.value, ck, "param/" + p.name);
  for (auto& b : model.params().buffers()) restore(b.value, ck, "buffer/" + b.name);
  return model;
}

std::vector<EpochRecord> cmd_train(const ExperimentConfig& c, const fs::path& features_dir,
                                   const fs::path& out_dir, const TrainOptions& options) {
  c.validate();
  const auto manifest = read_manifest(features_dir / kManifestName);
  auto train = load_split(features_dir, manifest, "train");
  auto validation = load_split(features_dir, manifest, "validation");
  if (train.empty()) throw std::runtime_error("no training utterances in " + features_dir.string());
  for (const auto& u : train) check_widths(c, u);
  for (const auto& u : validation) check_widths(c, u);
  const Variant variant = c.model.variant;

  std::vector<nn::Example<float>> val_examples;
  for (const auto& u : validation.empty() ? train : validation) {
    val_examples.push_back(make_example(u, variant));
  }
  if (validation.empty()) log_warning("no validation utterances; validating on the training set");

  nn::Enhancer<float> model(c.model, c.seed);
  nn::AdamConfig adam_cfg;
  adam_cfg.lr = c.learning_rate;
  nn::Adam<float> adam(model.params(), adam_cfg);
  nn::LrScheduler scheduler;
  std::vector<EpochRecord> history;
  std::size_t start_epoch = 0;

  if (options.resume) {
    const auto ck = io::read_checkpoint(*options.resume);
    if (ck.config.at("model") != to_json(c.model)) {
      throw std::runtime_error("checkpoint " + options.resume->string() +
                               " was trained with a different model configuration");
    }
    auto& params = model.params();
    for (std::size_t k = 0; k < params.size(); ++k) {
      restore(params[k].value, ck, "param/" + params[k].name);
      restore(adam.first_moment()[k], ck, "adam_m/" + params[k].name);
      restore(adam.second_moment()[k], ck, "adam_v/" + params[k].name);
    }
    for (auto& b : params.buffers()) restore(b.value, ck, "buffer/" + b.name);
    const auto& st = ck.train_state;
    adam.set_steps(st.at("steps").get<std::uint64_t>());
    adam.config().lr = st.at("learning_rate").get<double>();
    scheduler.restore(st.at("scheduler").at("has_best").get<bool>(),
                      st.at("scheduler").at("best").get<double>(),
                      st.at("scheduler").at("misses").get<int>());
    for (const auto& e : st.at("history")) history.push_back(epoch_from_json(e));
    start_epoch = st.at("epoch").get<std::size_t>();
  }

  fs::create_directories(out_dir);
  const std::size_t stop = std::min(c.epochs, options.stop_after.value_or(c.epochs));
  for (std::size_t epoch = start_epoch; epoch < stop; ++epoch) {
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(c.seed ^ (kEpochSalt + epoch));
    std::shuffle(order.begin(), order.end(), rng);
    std::mt19937_64 crop_rng(c.seed ^ (kCropSalt + epoch));

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += c.batch_size) {
      std::vector<nn::Example<float>> batch;
      for (std::size_t k = b0; k < std::min(order.size(), b0 + c.batch_size); ++k) {
        const auto& u = train[order[k]];
        const std::size_t frames = u.stft.frames();
        if (c.segment_frames > 0 && frames > c.segment_frames) {
          const std::size_t start =
              std::uniform_int_distribution<std::size_t>(0, frames - c.segment_frames)(crop_rng);
          batch.push_back(make_crop(u, variant, c.stft, start, c.segment_frames));
        } else {
          batch.push_back(make_example(u, variant));
        }
      }
      loss_sum += nn::train_step(model, adam, batch, c.stft);
      ++batches;
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    rec.validation_loss = nn::evaluate_loss(model, val_examples, c.stft, c.batch_size);
    if (!std::isfinite(rec.validation_loss)) {
      throw std::runtime_error("validation loss is not finite after epoch " + std::to_string(epoch + 1));
    }
    rec.learning_rate = adam.config().lr;
    rec.steps = adam.steps();
    adam.config().lr = scheduler.observe(rec.validation_loss, adam.config().lr);
    history.push_back(rec);
    std::ostringstream msg;
    msg << "epoch " << rec.epoch << " train " << rec.train_loss << " validation "
        << rec.validation_loss << " lr " << rec.learning_rate;
    log_info(msg.str());

    io::Checkpoint ck;
    ck.config = to_json(c);
    json hist = json::array();
    for (const auto& h : history) hist.push_back(epoch_json(h));
    ck.train_state = {{"epoch", epoch + 1},
                      {"steps", adam.steps()},
                      {"learning_rate", adam.config().lr},
                      {"scheduler",
                       {{"has_best", scheduler.has_best()},
                        {"best", scheduler.best()},
                        {"misses", scheduler.misses()}}},
                      {"history", hist}};
    const auto& params = model.params();
    for (std::size_t k = 0; k < params.size(); ++k) {
      ck.tensors.push_back({"param/" + params[k].name, param_record(params[k])});
    }
    for (const auto& b : params.buffers()) ck.tensors.push_back({"buffer/" + b.name, param_record(b)});
    for (std::size_t k = 0; k < params.size(); ++k) {
      ck.tensors.push_back({"adam_m/" + params[k].name, moment_record(params[k], adam.first_moment()[k])});
      ck.tensors.push_back({"adam_v/" + params[k].name, moment_record(params[k], adam.second_moment()[k])});
    }
    io::write_checkpoint(out_dir / "model.ckpt", ck);
    std::vector<json> lines;
    for (const auto& h : history) lines.push_back(epoch_json(h));
    write_manifest(out_dir / "losses.jsonl", lines);
  }
  return history;
}

// ----------------------------------------------------------------------- eval

EvalSummary cmd_eval(const ExperimentConfig& c, const fs::path& checkpoint,
                     const fs::path& features_dir, const fs::path& report) {
  const auto manifest = read_manifest(features_dir / kManifestName);
  const auto utts = load_split(features_dir, manifest, "eval");
  if (utts.empty()) throw std::runtime_error("eval set in " + features_dir.string() + " is empty");
  const auto model = load_model(checkpoint);
  const auto& mc = model.config();
  for (const auto& u : utts) {
    if (u.stft.channels() != mc.stft_channels || u.sht.channels() != mc.sht_channels ||
        u.stft.bins() != mc.bins) {
      throw std::runtime_error("features of " + u.record.at("id").get<std::string>() +
                               " do not match the checkpoint's model");
    }
  }

  struct Scores {
    double snr, rt60, stoi_u, stoi_e, sdr_u, sdr_e;
  };
  std::vector<Scores> scores(utts.size());
  for (std::size_t i = 0; i < utts.size(); ++i) {
    const auto& u = utts[i];
    const auto input = make_model_input<float>(u.stft, u.sht, mc.variant);
    auto enhanced = nn::enhance(model, input, c.stft);
    for (auto& v : enhanced) v /= u.gain;
    const std::size_t len = std::min({enhanced.size(), u.target.size(), u.reference.size()});
    const std::span<const double> clean(u.target.data(), len);
    const std::span<const double> enh(enhanced.data(), len);
    const std::span<const double> mix(u.reference.data(), len);
    scores[i] = {u.record.at("snr").get<double>(), u.record.at("rt60").get<double>(),
                 stoi(clean, mix, c.sample_rate), stoi(clean, enh, c.sample_rate),
                 si_sdr(clean, mix), si_sdr(clean, enh)};
  }

  std::vector<json> lines;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    const auto& s = scores[i];
    lines.push_back({{"type", "utterance"},
                     {"id", utts[i].record.at("id")},
                     {"snr", s.snr},
                     {"rt60", s.rt60},
                     {"stoi_unprocessed", s.stoi_u},
                     {"stoi_enhanced", s.stoi_e},
                     {"si_sdr_unprocessed", s.sdr_u},
                     {"si_sdr_enhanced", s.sdr_e}});
  }

  const auto close = [](double a, double b) { return std::abs(a - b) < 1e-9; };
  const auto cell_json = [](const char* type, const CellResult& r) {
    json j = {{"type", type}, {"count", r.count}};
    if (std::string(type) != "overall") j["snr"] = r.snr;
    if (std::string(type) == "cell") j["rt60"] = r.rt60;
    if (r.count == 0) {
      j["missing"] = true;
      return j;
    }
    j["stoi_unprocessed"] = r.stoi_unprocessed;
    j["stoi_enhanced"] = r.stoi_enhanced;
    j["si_sdr_unprocessed"] = r.si_sdr_unprocessed;
    j["si_sdr_enhanced"] = r.si_sdr_enhanced;
    return j;
  };
  const auto average = [](CellResult& r, const Scores& s) {
    ++r.count;
    r.stoi_unprocessed += s.stoi_u;
    r.stoi_enhanced += s.stoi_e;
    r.si_sdr_unprocessed += s.sdr_u;
    r.si_sdr_enhanced += s.sdr_e;
  };
  const auto finish = [](CellResult& r) {
    if (r.count == 0) return;
    const double n = static_cast<double>(r.count);
    r.stoi_unprocessed /= n;
    r.stoi_enhanced /= n;
    r.si_sdr_unprocessed /= n;
    r.si_sdr_enhanced /= n;
  };

  EvalSummary summary;
  std::vector<CellResult> rows;
  std::size_t matched = 0;
  for (double snr : c.eval_snrs) {
    CellResult row;
    row.snr = snr;
    for (double rt60 : c.eval_rt60s) {
      CellResult cell;
      cell.snr = snr;
      cell.rt60 = rt60;
      for (const auto& s : scores) {
        if (close(s.snr, snr) && close(s.rt60, rt60)) {
          average(cell, s);
          average(row, s);
          average(summary.overall, s);
          ++matched;
        }
      }
      finish(cell);
      if (cell.count == 0) {
        log_warning("eval cell snr " + std::to_string(snr) + " dB, rt60 " + std::to_string(rt60) +
                    " s has no utterances");
      }
      summary.cells.push_back(cell);
      lines.push_back(cell_json("cell", cell));
    }
    finish(row);
    rows.push_back(row);
    lines.push_back(cell_json("row", row));
  }
  finish(summary.overall);
  lines.push_back(cell_json("overall", summary.overall));
  if (matched < scores.size()) {
    log_warning(std::to_string(scores.size() - matched) +
                " eval utterances fall outside the configured grid");
  }
  write_manifest(report, lines);

  std::ostringstream t;
  t << std::fixed << std::setprecision(2);
  t << "STOI x100 (unprocessed / enhanced)\n";
  t << std::setw(8) << "SNR dB";
  for (double rt : c.eval_rt60s) t << std::setw(16) << ("T60 " + std::to_string(rt).substr(0, 3));
  t << std::setw(16) << "avg" << "\n";
  std::size_t k = 0;
  for (std::size_t r = 0; r < c.eval_snrs.size(); ++r) {
    t << std::setw(8) << c.eval_snrs[r];
    for (std::size_t j = 0; j < c.eval_rt60s.size(); ++j, ++k) {
      const auto& cell = summary.cells[k];
      std::ostringstream v;
      v << std::fixed << std::setprecision(2);
      if (cell.count == 0) {
        v << "missing";
      } else {
        v << 100.0 * cell.stoi_unprocessed << "/" << 100.0 * cell.stoi_enhanced;
      }
      t << std::setw(16) << v.str();
    }
    std::ostringstream v;
    v << std::fixed << std::setprecision(2);
    if (rows[r].count == 0) {
      v << "missing";
    } else {
      v << 100.0 * rows[r].stoi_unprocessed << "/" << 100.0 * rows[r].stoi_enhanced;
    }
    t << std::setw(16) << v.str() << "\n";
  }
  if (summary.overall.count > 0) {
    t << "overall STOI " << 100.0 * summary.overall.stoi_unprocessed << " -> "
      << 100.0 * summary.overall.stoi_enhanced << ", SI-SDR " << summary.overall.si_sdr_unprocessed
      << " -> " << summary.overall.si_sdr_enhanced << " dB over " << summary.overall.count
      << " utterances\n";
  }
  summary.table = t.str();
  return summary;
}

// ----------------------------------------------------------------------- info

std::string cmd_info(const ExperimentConfig& c) {
  std::ostringstream out;
  for (Variant v : {Variant::parallel, Variant::serial}) {
    nn::EnhancerConfig mc = c.model;
    if (v != mc.variant) {
      const auto reference = nn::EnhancerConfig::full_size(mc.variant);
      if (mc.glu_channels == reference.glu_channels) {
        mc.glu_channels = nn::EnhancerConfig::full_size(v).glu_channels;
      }
      mc.variant = v;
    }
    const auto cost = count_params_flops(mc);
    out << std::fixed << std::setprecision(3);
    out << to_string(v) << (v == c.model.variant ? " (configured)" : "") << ": "
        << cost.params << " parameters (" << static_cast<double>(cost.params) / 1e6 << " M), "
        << cost.flops_per_second / 1e9 << " GFLOPs per second of audio\n";
  }
  out << "reference parallel model: 1.82 M parameters, 19.52 G FLOPs\n";
  return out.str();
}

}  // namespace shenh::pipeline
