#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace shenh {

/// Dense real T x F x C tensor, channel index fastest.
template <class S>
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t frames, std::size_t bins, std::size_t channels, S fill = S(0))
      : frames_(frames), bins_(bins), channels_(channels), data_(frames * bins * channels, fill) {}

  std::size_t frames() const { return frames_; }
  std::size_t bins() const { return bins_; }
  std::size_t channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  S& at(std::size_t t, std::size_t f, std::size_t c) { return data_[(t * bins_ + f) * channels_ + c]; }
  S at(std::size_t t, std::size_t f, std::size_t c) const {
    return data_[(t * bins_ + f) * channels_ + c];
  }

  std::span<S> data() { return data_; }
  std::span<const S> data() const { return data_; }
  std::vector<S>& storage() { return data_; }

  bool same_shape(const Tensor3& o) const {
    return frames_ == o.frames_ && bins_ == o.bins_ && channels_ == o.channels_;
  }

  template <class U>
  Tensor3<U> cast() const {
    Tensor3<U> out(frames_, bins_, channels_);
    std::transform(data_.begin(), data_.end(), out.data().begin(),
                   [](S v) { return static_cast<U>(v); });
    return out;
  }

 private:
  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::size_t channels_ = 0;
  std::vector<S> data_;
};

/// Concatenate along the channel axis.
template <class S>
Tensor3<S> concat_channels(const Tensor3<S>& a, const Tensor3<S>& b) {
  if (a.frames() != b.frames() || a.bins() != b.bins()) {
    throw std::invalid_argument("concat_channels: frame/bin mismatch");
  }
  Tensor3<S> out(a.frames(), a.bins(), a.channels() + b.channels());
  const std::size_t points = a.frames() * a.bins();
  for (std::size_t p = 0; p < points; ++p) {
    std::copy_n(a.data().begin() + p * a.channels(), a.channels(),
                out.data().begin() + p * out.channels());
    std::copy_n(b.data().begin() + p * b.channels(), b.channels(),
                out.data().begin() + p * out.channels() + a.channels());
  }
  return out;
}

/// Split channels [0, first) and [first, C).
template <class S>
std::pair<Tensor3<S>, Tensor3<S>> split_channels(const Tensor3<S>& x, std::size_t first) {
  if (first > x.channels()) throw std::invalid_argument("split_channels: index out of range");
  Tensor3<S> a(x.frames(), x.bins(), first);
  Tensor3<S> b(x.frames(), x.bins(), x.channels() - first);
  const std::size_t points = x.frames() * x.bins();
  for (std::size_t p = 0; p < points; ++p) {
    std::copy_n(x.data().begin() + p * x.channels(), first, a.data().begin() + p * first);
    std::copy_n(x.data().begin() + p * x.channels() + first, x.channels() - first,
                b.data().begin() + p * b.channels());
  }
  return {std::move(a), std::move(b)};
}

}  // namespace shenh
