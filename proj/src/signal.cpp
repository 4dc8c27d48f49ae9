#include "shenh/signal.hpp"

#include <algorithm>
#include <stdexcept>

namespace shenh {

MultichannelSignal::MultichannelSignal(std::size_t channels, std::size_t samples,
                                       double sample_rate)
    : channels_(channels), samples_(samples), sample_rate_(sample_rate),
      data_(channels * samples, 0.0) {
  if (!(sample_rate > 0.0)) throw std::invalid_argument("sample rate must be positive");
}

MultichannelSignal MultichannelSignal::mono(std::vector<double> samples, double sample_rate) {
  MultichannelSignal s(1, 0, sample_rate);
  s.samples_ = samples.size();
  s.data_ = std::move(samples);
  return s;
}

MultichannelSignal MultichannelSignal::resized(std::size_t samples) const {
  MultichannelSignal out(channels_, samples, sample_rate_);
  const std::size_t n = std::min(samples, samples_);
  for (std::size_t c = 0; c < channels_; ++c) {
    std::copy_n(channel(c).begin(), n, out.channel(c).begin());
  }
  return out;
}

MultichannelSignal MultichannelSignal::extract(std::size_t c) const {
  if (c >= channels_) throw std::out_of_range("channel index out of range");
  const auto ch = channel(c);
  return mono(std::vector<double>(ch.begin(), ch.end()), sample_rate_);
}

}  // namespace shenh
