#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace shenh {

/// Real multichannel audio at a fixed sample rate. Samples are stored channel
/// by channel.
class MultichannelSignal {
 public:
  MultichannelSignal() = default;
  MultichannelSignal(std::size_t channels, std::size_t samples, double sample_rate);

  /// Single channel from existing samples.
  static MultichannelSignal mono(std::vector<double> samples, double sample_rate);

  std::size_t channels() const { return channels_; }
  std::size_t samples() const { return samples_; }
  double sample_rate() const { return sample_rate_; }

  std::span<double> channel(std::size_t c) {
    return std::span<double>(data_).subspan(c * samples_, samples_);
  }
  std::span<const double> channel(std::size_t c) const {
    return std::span<const double>(data_).subspan(c * samples_, samples_);
  }
  double& at(std::size_t c, std::size_t s) { return data_[c * samples_ + s]; }
  double at(std::size_t c, std::size_t s) const { return data_[c * samples_ + s]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  /// Copy with every channel cut (or zero-extended) to `samples`.
  MultichannelSignal resized(std::size_t samples) const;
  /// One channel as a new mono signal.
  MultichannelSignal extract(std::size_t c) const;

 private:
  std::size_t channels_ = 0;
  std::size_t samples_ = 0;
  double sample_rate_ = 0.0;
  std::vector<double> data_;
};

}  // namespace shenh
