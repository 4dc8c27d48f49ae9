#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace shenh {

/// Short-time objective intelligibility of `degraded` against `clean`, both at
/// 16 kHz. Signals are truncated to the shorter length and resampled to the
/// 10 kHz analysis rate internally. Result clipped to [0, 1].
double stoi(std::span<const double> clean, std::span<const double> degraded,
            double sample_rate = 16000.0);

/// Scale-invariant signal-to-distortion ratio in dB, clamped to [-60, 60].
double si_sdr(std::span<const double> reference, std::span<const double> estimate);

constexpr double kSiSdrCap = 60.0;

/// Rational resampler by up/down with a Kaiser-windowed sinc lowpass.
/// Output length ceil(n * up / down).
std::vector<double> resample_poly(std::span<const double> x, std::size_t up, std::size_t down);

struct UtteranceMetrics {
  std::string id;
  double stoi = 0.0;
  double si_sdr = 0.0;
};

/// Per-utterance scores with arithmetic-mean aggregates.
class MetricReport {
 public:
  void add(UtteranceMetrics m);
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const std::vector<UtteranceMetrics>& items() const { return items_; }
  double mean_stoi() const;
  double mean_si_sdr() const;

 private:
  std::vector<UtteranceMetrics> items_;
};

}  // namespace shenh
