// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pipeline_support.hpp"
#include "shenh/acoustics.hpp"
#include "shenh/log.hpp"
#include "shenh/metrics.hpp"
#include "shenh/nn/optim.hpp"
#include "shenh/spectral.hpp"
#include "support.hpp"

using namespace shenh;
using namespace testing_support;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome orthonormality() {
  const auto t0 = Clock::now();
  const QuadratureGrid grid(64, 128);
  double worst = 0.0;
  for (std::size_t a = 0; a < sh_count(4); ++a) {
    for (std::size_t b = 0; b < sh_count(4); ++b) {
      const ShIndex ia = ShIndex::from_flat(a), ib = ShIndex::from_flat(b);
      const cplx g = grid.inner([&](const SphDirection& d) { return sph_harm(ia, d); },
                                [&](const SphDirection& d) { return sph_harm(ib, d); });
      worst = std::max(worst, std::abs(g - cplx(a == b ? 1.0 : 0.0, 0.0)));
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && secs < 5.0,
          fmt("max |<Y,Y'> - delta| = %.2e over 625 pairs, %.2f s", worst, secs)};
}

Outcome discrete_sht() {
  const auto dirs = fibonacci_sphere(2000);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  ShCoeffVector truth(2);
  for (std::size_t q = 0; q < truth.size(); ++q) truth[q] = {nd(rng), nd(rng)};
  const auto field = [&](const SphDirection& d) { return sht_inverse(truth, d); };
  std::vector<cplx> samples;
  for (const auto& d : dirs) samples.push_back(field(d));
  const auto disc = sht_forward(samples, dirs, 2);
  const QuadratureGrid grid(64, 128);
  double err = 0.0, norm = 0.0;
  for (std::size_t q = 0; q < disc.size(); ++q) {
    const cplx ref = grid.integrate(field, ShIndex::from_flat(q));
    err += std::norm(disc[q] - ref);
    norm += std::norm(ref);
  }
  const double rel = std::sqrt(err / norm);

  const auto uca = uniform_circular_array(9, 0.035);
  const std::vector<cplx> ones(9, 1.0);
  const auto p = sht_forward(ones, uca, 4);
  double dev = std::abs(p.at(0, 0) - std::sqrt(4 * kPi));
  for (int n = 1; n <= 4; ++n) {
    for (int m = -n; m <= n; ++m) {
      if (m != 0 || n % 2 == 1) dev = std::max(dev, std::abs(p.at(n, m)));
    }
  }
  return {rel <= 1e-3 && dev <= 1e-12,
          fmt("2000-point relative error %.2e; UCA identity deviation %.2e", rel, dev)};
}

Outcome stft_reconstruction() {
  const StftConfig c;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<std::size_t> len(2000, 40000);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    MultichannelSignal x(1, len(rng), c.sample_rate);
    for (auto& v : x.data()) v = nd(rng);
    const auto spec = stft(x, c);
    const auto y = istft(spec, c);
    const auto r = interior_range(spec.frames(), c);
    double e = 0.0, s = 0.0;
    for (std::size_t n = r.begin; n < r.end; ++n) {
      e += (y.at(0, n) - x.at(0, n)) * (y.at(0, n) - x.at(0, n));
      s += x.at(0, n) * x.at(0, n);
    }
    worst = std::max(worst, std::sqrt(e / s));
  }
  return {worst <= 1e-6, fmt("worst interior relative error %.2e over 100 signals", worst)};
}

Outcome rir_validity() {
  const auto t0 = Clock::now();
  RoomConfig c;
  c.source_pos = {2.0, 2.5, 1.5};
  c.array_center = {3.0, 2.5, 1.5};
  c.array = uniform_circular_array(9, 0.035);
  bool ok = true;
  std::string detail;

  const auto anechoic = simulate_rir(c);
  int worst_delay = 0;
  const auto mics = c.mic_positions();
  for (std::size_t i = 0; i < mics.size(); ++i) {
    const auto h = anechoic.channel(i);
    const auto peak = std::max_element(h.begin(), h.end(), [](double a, double b) {
      return std::abs(a) < std::abs(b);
    }) - h.begin();
    double d = 0.0;
    for (int k = 0; k < 3; ++k) d += (mics[i][k] - c.source_pos[k]) * (mics[i][k] - c.source_pos[k]);
    const long want = std::lround(std::sqrt(d) / c.sound_speed * c.sample_rate);
    worst_delay = std::max(worst_delay, static_cast<int>(std::abs(peak - want)));
  }
  ok = ok && worst_delay <= 1;
  detail += fmt("delay error %d samples;", worst_delay);

  for (double rt : {0.2, 0.4, 0.6}) {
    c.rt60 = rt;
    const auto h = simulate_rir(c);
    const double t60 = schroeder_t60(h.channel(0), c.sample_rate);
    const double rel = std::abs(t60 - rt) / rt;
    ok = ok && rel <= 0.2;
    detail += fmt(" T60 %.1f -> %.3f (%+.0f%%)", rt, t60, 100.0 * (t60 - rt) / rt);
  }
  const double secs = seconds_since(t0);
  detail += fmt("; %.1f s", secs);
  return {ok && secs < 60.0, detail};
}

Outcome gradient() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t entries = 0;
  for (Variant v : {Variant::parallel, Variant::serial}) {
    const auto c = tiny_config(v);
    nn::Enhancer<double> m(c, 11);
    const auto batch = random_batch<double>(c, tiny_stft(), 2, 6, 21);
    const auto r = gradient_check(m, batch, tiny_stft());
    worst = std::max(worst, r.max_rel_error);
    entries += r.checked;
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-3 && secs < 120.0,
          fmt("max relative error %.2e over %zu entries (both variants), %.1f s", worst, entries, secs)};
}

Outcome overfit() {
  const auto t0 = Clock::now();
  const auto c = tiny_config();
  nn::Enhancer<float> m(c, 5);
  nn::Adam<float> opt(m.params(), nn::AdamConfig{1e-3});
  const auto batch = random_batch<float>(c, tiny_stft(), 2, 6, 2);
  const double first = nn::evaluate_loss(m, batch, tiny_stft(), 2);
  for (int i = 0; i < 500; ++i) nn::train_step(m, opt, batch, tiny_stft());
  const double last = nn::evaluate_loss(m, batch, tiny_stft(), 2);
  const double drop = 1.0 - last / first;
  const double secs = seconds_since(t0);
  return {drop >= 0.9 && secs < 600.0,
          fmt("loss %.4g -> %.4g (%.1f%% lower) in %.1f s", first, last, 100.0 * drop, secs)};
}

Outcome parameter_count() {
  const auto cost = nn::count_params_flops(nn::EnhancerConfig{});
  const double rel = std::abs(static_cast<double>(cost.params) - 1.82e6) / 1.82e6;
  const auto info = pipeline::cmd_info(pipeline::ExperimentConfig{});
  const bool prints = info.find(std::to_string(cost.params)) != std::string::npos &&
                      info.find("1.82 M") != std::string::npos;
  return {rel <= 0.2 && prints,
          fmt("%zu parameters, %.1f%% from 1.82 M; info prints both: %s", cost.params, 100.0 * rel,
              prints ? "yes" : "no")};
}

Outcome metric_sanity() {
  const auto s = pipeline::synth_speech(1, 3.0, 16000);
  const auto noise = pipeline::synth_noise(4, 3.0, 16000, pipeline::NoiseKind::babble);
  const double self = stoi(s, s);
  const double ps = mean_power(s), pn = mean_power(noise);
  std::vector<double> scores;
  for (double snr : {-5.0, 0.0, 5.0}) {
    const double g = std::sqrt(ps / pn * std::pow(10.0, -snr / 10));
    std::vector<double> y(s.size());
    for (std::size_t n = 0; n < s.size(); ++n) y[n] = s[n] + g * noise[n];
    scores.push_back(stoi(s, y));
  }
  const bool monotone = scores[0] < scores[1] && scores[1] < scores[2];

  std::vector<double> est(s.size());
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  for (std::size_t n = 0; n < s.size(); ++n) est[n] = s[n] + 0.01 * nd(rng);
  const double base = si_sdr(s, est);
  double spread = 0.0;
  for (double a : {0.5, 2.0, 8.0, 0.125}) {
    std::vector<double> scaled(est);
    for (auto& v : scaled) v *= a;
    spread = std::max(spread, std::abs(si_sdr(s, scaled) - base));
  }
  const bool below_cap = base < kSiSdrCap;
  return {self >= 0.999 && monotone && spread == 0.0 && below_cap,
          fmt("stoi(x,x) %.6f; STOI at -5/0/5 dB %.4f/%.4f/%.4f; SI-SDR %.2f dB, scale spread %.1e",
              self, scores[0], scores[1], scores[2], base, spread)};
}

// Desk-scale run: synthetic corpora, both variants trained with the same
// data, seed and epoch budget. The grid is the -5 dB row, the condition
// the variant comparison was reported on; cell (a) is fixed in advance.
constexpr double kHeldOutSnr = -5.0;
constexpr double kHeldOutRt60 = 0.6;

Outcome end_to_end() {
  const auto t0 = Clock::now();
  TempDir dir("acceptance");
  pipeline::ExperimentConfig c;
  c.seed = 2024;
  c.train_scenarios = 60;
  c.eval_snrs = {kHeldOutSnr};
  c.pairs_per_cell = 4;
  c.epochs = 36;
  c.batch_size = 4;
  c.segment_frames = 64;
  c.model.encoder_blocks = 3;
  c.model.glu_channels = 8;
  c.model.decoder_blocks = 3;
  c.model.decoder_channels = 16;
  c.model.recurrent_hidden = 16;
  c.sync_model();

  const auto root = dir.path();
  pipeline::write_corpus(root / "speech", pipeline::CorpusKind::speech, 80, 2.0, c.seed);
  pipeline::write_corpus(root / "noise", pipeline::CorpusKind::noise, 5, 10.0, c.seed + 1);
  pipeline::cmd_rir(c, root / "rirs");
  const std::size_t utterances = pipeline::cmd_mix(c, root / "speech", root / "noise", root / "rirs", root / "data");
  pipeline::cmd_features(c, root / "data", root / "features");
  const double data_secs = seconds_since(t0);

  struct Run {
    pipeline::EvalSummary summary;
    double train_secs = 0.0;
  };
  const auto run = [&](Variant v) {
    auto cv = c;
    cv.model.variant = v;
    // Same widening as the full-size models: the serial encoder sees both inputs.
    if (v == Variant::serial) cv.model.glu_channels *= 2;
    cv.sync_model();
    const std::string name = to_string(v);
    Run r;
    const auto t = Clock::now();
    pipeline::cmd_train(cv, root / "features", root / ("model_" + name));
    r.train_secs = seconds_since(t);
    r.summary = pipeline::cmd_eval(cv, root / ("model_" + name) / "model.ckpt", root / "features",
                                   root / ("report_" + name + ".jsonl"));
    std::printf("%s", r.summary.table.c_str());
    return r;
  };
  const Run par = run(Variant::parallel);
  const Run ser = run(Variant::serial);

  const pipeline::CellResult* cell = nullptr;
  for (const auto& r : par.summary.cells) {
    if (r.snr == kHeldOutSnr && std::abs(r.rt60 - kHeldOutRt60) < 1e-9) cell = &r;
  }
  if (cell == nullptr || cell->count == 0) return {false, "held-out cell missing from the report"};
  const bool a = cell->stoi_enhanced > cell->stoi_unprocessed;
  const bool b = par.summary.overall.stoi_enhanced >= ser.summary.overall.stoi_enhanced;
  const bool budget = par.train_secs <= 1800.0;
  return {utterances >= 50 && a && b && budget,
          fmt("%zu utterances; (a) cell %g dB / %g s: STOI %.4f -> %.4f %s; (b) mean STOI parallel "
              "%.4f vs serial %.4f %s; training %.0f s / %.0f s, data %.0f s",
              utterances, kHeldOutSnr, kHeldOutRt60, cell->stoi_unprocessed, cell->stoi_enhanced,
              a ? "ok" : "not improved", par.summary.overall.stoi_enhanced,
              ser.summary.overall.stoi_enhanced, b ? "ok" : "order reversed", par.train_secs,
              ser.train_secs, data_secs)};
}

Outcome determinism() {
  const auto c = mini_experiment(31);
  TempDir a("accept_det_a"), b("accept_det_b");
  run_data_stages(c, a.path());
  run_data_stages(c, b.path());
  const auto sa = snapshot(a.path());
  const auto sb = snapshot(b.path());
  std::size_t manifests = 0, tensors = 0, mismatched = 0;
  for (const auto& [name, bytes] : sa) {
    const auto it = sb.find(name);
    if (it == sb.end() || it->second != bytes) ++mismatched;
    if (name.ends_with(".jsonl")) ++manifests;
    if (name.ends_with(".shtf")) ++tensors;
  }
  const bool ok = mismatched == 0 && sa.size() == sb.size() && manifests == 3 && tensors > 0;
  return {ok, fmt("%zu files compared (%zu manifests, %zu tensor files), %zu differ", sa.size(),
                  manifests, tensors, mismatched)};
}

}  // namespace

int main(int argc, char** argv) {
  set_log_level(LogLevel::warning);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"spherical-harmonic orthonormality", orthonormality},
      {"discrete vs continuous SHT", discrete_sht},
      {"STFT perfect reconstruction", stft_reconstruction},
      {"RIR validity", rir_validity},
      {"gradient correctness", gradient},
      {"overfit sanity", overfit},
      {"parameter accounting", parameter_count},
      {"metric sanity", metric_sanity},
      {"desk-scale end-to-end", end_to_end},
      {"pipeline determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %d (%s): %s - %s\n", id, criteria[k].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
