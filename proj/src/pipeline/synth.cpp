#include "shenh/pipeline/synth.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include "shenh/io/wav.hpp"

namespace shenh::pipeline {

namespace {

constexpr double kTwoPi = 6.283185307179586;
constexpr double kTargetRms = 0.05;

void normalize_rms(std::vector<double>& x, double rms) {
  double e = 0.0;
  std::size_t active = 0;
  for (double v : x) {
    if (v != 0.0) {
      e += v * v;
      ++active;
    }
  }
  if (active == 0 || e <= 0.0) return;
  const double g = rms / std::sqrt(e / static_cast<double>(active));
  for (auto& v : x) v *= g;
}

void voiced(std::vector<double>& out, std::size_t start, std::size_t len, double fs,
            std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double f0a = 90.0 + 130.0 * u(rng);
  const double f0b = f0a * (0.85 + 0.3 * u(rng));
  const double formant[3] = {300.0 + 500.0 * u(rng), 900.0 + 1400.0 * u(rng),
                             2400.0 + 800.0 * u(rng)};
  const double width[3] = {90.0, 130.0, 200.0};
  const double gain[3] = {1.0, 0.6, 0.3};
  const std::size_t harmonics = static_cast<std::size_t>(4000.0 / std::min(f0a, f0b));
  std::vector<double> phase(harmonics, 0.0);
  for (auto& p : phase) p = kTwoPi * u(rng);
  double base = 0.0;
  for (std::size_t n = 0; n < len && start + n < out.size(); ++n) {
    const double r = static_cast<double>(n) / static_cast<double>(len);
    const double f0 = f0a + (f0b - f0a) * r;
    base += kTwoPi * f0 / fs;
    const double env = std::sin(M_PI * r);
    double acc = 0.0;
    for (std::size_t k = 1; k <= harmonics; ++k) {
      const double fk = f0 * static_cast<double>(k);
      if (fk > 0.45 * fs) break;
      double a = 0.02 / static_cast<double>(k);
      for (int q = 0; q < 3; ++q) {
        const double d = (fk - formant[q]) / width[q];
        a += gain[q] * std::exp(-0.5 * d * d);
      }
      acc += a * std::sin(static_cast<double>(k) * base + phase[k - 1]);
    }
    out[start + n] += env * acc;
  }
}

void unvoiced(std::vector<double>& out, std::size_t start, std::size_t len, double fs,
              std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  // Two-pole resonator around a fricative band.
  const double fc = 2500.0 + 3000.0 * u(rng);
  const double bw = fc / 2.0;
  const double rr = std::exp(-M_PI * bw / fs);
  const double a1 = 2.0 * rr * std::cos(kTwoPi * fc / fs);
  const double a2 = -rr * rr;
  double y1 = 0.0;
  double y2 = 0.0;
  for (std::size_t n = 0; n < len && start + n < out.size(); ++n) {
    const double r = static_cast<double>(n) / static_cast<double>(len);
    const double y = (1.0 - rr) * g(rng) + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    out[start + n] += 0.5 * std::sin(M_PI * r) * y;
  }
}

}  // namespace

std::vector<double> synth_speech(std::uint64_t seed, double seconds, double fs) {
  if (!(seconds > 0.0)) throw std::invalid_argument("utterance length must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto total = static_cast<std::size_t>(seconds * fs);
  std::vector<double> x(total, 0.0);
  auto pos = static_cast<std::size_t>((0.1 + 0.1 * u(rng)) * fs);
  const auto tail = static_cast<std::size_t>(0.1 * fs);
  while (pos + tail < total) {
    const auto len = static_cast<std::size_t>((0.12 + 0.18 * u(rng)) * fs);
    if (u(rng) < 0.75) {
      voiced(x, pos, len, fs, rng);
    } else {
      unvoiced(x, pos, len, fs, rng);
    }
    pos += len;
    const double gap = u(rng) < 0.15 ? 0.15 + 0.15 * u(rng) : 0.02 + 0.06 * u(rng);
    pos += static_cast<std::size_t>(gap * fs);
  }
  for (std::size_t n = total - std::min(total, tail); n < total; ++n) x[n] = 0.0;
  normalize_rms(x, kTargetRms);
  return x;
}

NoiseKind noise_kind_for(std::size_t index) { return static_cast<NoiseKind>(index % 5); }

std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::white: return "white";
    case NoiseKind::pink: return "pink";
    case NoiseKind::brown: return "brown";
    case NoiseKind::babble: return "babble";
    case NoiseKind::hum: return "hum";
  }
  return "unknown";
}

std::vector<double> synth_noise(std::uint64_t seed, double seconds, double fs, NoiseKind kind) {
  if (!(seconds > 0.0)) throw std::invalid_argument("noise length must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto total = static_cast<std::size_t>(seconds * fs);
  std::vector<double> x(total, 0.0);
  switch (kind) {
    case NoiseKind::white:
      for (auto& v : x) v = g(rng);
      break;
    case NoiseKind::pink: {
      // Paul Kellet's economy filter.
      double b0 = 0.0, b1 = 0.0, b2 = 0.0;
      for (auto& v : x) {
        const double w = g(rng);
        b0 = 0.99765 * b0 + w * 0.0990460;
        b1 = 0.96300 * b1 + w * 0.2965164;
        b2 = 0.57000 * b2 + w * 1.0526913;
        v = b0 + b1 + b2 + w * 0.1848;
      }
      break;
    }
    case NoiseKind::brown: {
      double y = 0.0;
      for (auto& v : x) {
        y = 0.995 * y + g(rng);
        v = y;
      }
      break;
    }
    case NoiseKind::babble:
      for (int talker = 0; talker < 5; ++talker) {
        const auto s = synth_speech(rng(), seconds, fs);
        for (std::size_t n = 0; n < total; ++n) x[n] += s[n];
      }
      for (std::size_t n = 0; n < total; ++n) x[n] += 0.002 * g(rng);
      break;
    case NoiseKind::hum: {
      const double f0 = 50.0 + 70.0 * u(rng);
      for (std::size_t n = 0; n < total; ++n) {
        const double t = static_cast<double>(n) / fs;
        double v = 0.0;
        for (int k = 1; k <= 8; ++k) v += std::sin(kTwoPi * f0 * k * t) / k;
        x[n] = v + 0.3 * g(rng);
      }
      break;
    }
  }
  normalize_rms(x, kTargetRms);
  return x;
}

CorpusKind parse_corpus_kind(const std::string& s) {
  if (s == "speech") return CorpusKind::speech;
  if (s == "noise") return CorpusKind::noise;
  throw std::invalid_argument("unknown corpus kind '" + s + "' (expected speech or noise)");
}

std::vector<std::filesystem::path> write_corpus(const std::filesystem::path& dir, CorpusKind kind,
                                                std::size_t count, double seconds,
                                                std::uint64_t seed, double fs) {
  std::vector<std::filesystem::path> out;
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t sub = seed ^ static_cast<std::uint64_t>(i);
    auto samples = kind == CorpusKind::speech ? synth_speech(sub, seconds, fs)
                                              : synth_noise(sub, seconds, fs, noise_kind_for(i));
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%04zu.wav",
                  kind == CorpusKind::speech ? "speech" : "noise", i);
    const auto path = dir / name;
    io::write_wav(path, MultichannelSignal::mono(std::move(samples), fs), io::WavFormat::float32);
    out.push_back(path);
  }
  return out;
}

}  // namespace shenh::pipeline
