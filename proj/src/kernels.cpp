#include "shenh/kernels.hpp"

#include <algorithm>
#include <stdexcept>

#include "shenh/fft.hpp"

namespace shenh::kernels {

void ConvShape::validate() const {
  if (taps == 0 || taps % 2 == 0) throw std::invalid_argument("conv taps must be odd");
  if (in_channels == 0 || out_channels == 0) throw std::invalid_argument("empty channel count");
}

namespace {

struct TapRange {
  std::size_t lo;
  std::size_t hi;
};

// Taps k with 0 <= f + k - pad < bins.
inline TapRange tap_range(std::size_t f, std::size_t bins, std::size_t taps) {
  const std::size_t pad = taps / 2;
  const std::size_t lo = f < pad ? pad - f : 0;
  const std::size_t hi = std::min(taps, bins + pad - f);
  return {lo, hi};
}

template <class S>
void check_sizes(const ConvShape& s, std::size_t x, std::size_t w, std::size_t y) {
  s.validate();
  if (x != s.input_size() || w != s.weight_size() || y != s.output_size()) {
    throw std::invalid_argument("conv buffer sizes do not match shape");
  }
}

}  // namespace

template <class S>
void conv_freq_forward(const ConvShape& s, std::span<const S> x, std::span<const S> w,
                       std::span<const S> bias, std::span<S> y) {
  check_sizes<S>(s, x.size(), w.size(), y.size());
  const std::size_t cin = s.in_channels;
  const std::size_t cout = s.out_channels;
  const std::size_t pad = s.taps / 2;
  const std::ptrdiff_t frames = static_cast<std::ptrdiff_t>(s.frames);

  // [tap][in][out] so the inner loop runs over output channels.
  std::vector<S> wt(w.size());
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t j = 0; j < s.taps * cin; ++j) wt[j * cout + o] = w[o * s.taps * cin + j];
  }

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < frames; ++t) {
    for (std::size_t f = 0; f < s.bins; ++f) {
      const auto [lo, hi] = tap_range(f, s.bins, s.taps);
      const std::size_t len = (hi - lo) * cin;
      const S* __restrict xb = x.data() + (static_cast<std::size_t>(t) * s.bins + f + lo - pad) * cin;
      const S* __restrict wb = wt.data() + lo * cin * cout;
      S* __restrict yo = y.data() + (static_cast<std::size_t>(t) * s.bins + f) * cout;
      if (bias.empty()) {
        std::fill(yo, yo + cout, S(0));
      } else {
        std::copy(bias.begin(), bias.end(), yo);
      }
      for (std::size_t j = 0; j < len; ++j) {
        const S xv = xb[j];
        const S* __restrict wr = wb + j * cout;
#pragma omp simd
        for (std::size_t o = 0; o < cout; ++o) yo[o] += xv * wr[o];
      }
    }
  }
}

template <class S>
void conv_freq_forward_reference(const ConvShape& s, std::span<const S> x, std::span<const S> w,
                                 std::span<const S> bias, std::span<S> y) {
  check_sizes<S>(s, x.size(), w.size(), y.size());
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(s.taps / 2);
  for (std::size_t t = 0; t < s.frames; ++t) {
    for (std::size_t f = 0; f < s.bins; ++f) {
      for (std::size_t o = 0; o < s.out_channels; ++o) {
        S acc = bias.empty() ? S(0) : bias[o];
        for (std::size_t k = 0; k < s.taps; ++k) {
          const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(f + k) - pad;
          if (src < 0 || src >= static_cast<std::ptrdiff_t>(s.bins)) continue;
          for (std::size_t i = 0; i < s.in_channels; ++i) {
            acc += w[(o * s.taps + k) * s.in_channels + i] *
                   x[(t * s.bins + static_cast<std::size_t>(src)) * s.in_channels + i];
          }
        }
        y[(t * s.bins + f) * s.out_channels + o] = acc;
      }
    }
  }
}

template <class S>
void conv_freq_backward_data(const ConvShape& s, std::span<const S> gy, std::span<const S> w,
                             std::span<S> gx) {
  check_sizes<S>(s, gx.size(), w.size(), gy.size());
  const std::size_t cin = s.in_channels;
  const std::size_t cout = s.out_channels;
  const std::size_t pad = s.taps / 2;
  const std::ptrdiff_t frames = static_cast<std::ptrdiff_t>(s.frames);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < frames; ++t) {
    S* gxt = gx.data() + static_cast<std::size_t>(t) * s.bins * cin;
    std::fill(gxt, gxt + s.bins * cin, S(0));
    for (std::size_t f = 0; f < s.bins; ++f) {
      const auto [lo, hi] = tap_range(f, s.bins, s.taps);
      const std::size_t len = (hi - lo) * cin;
      S* xb = gxt + (f + lo - pad) * cin;
      const S* go = gy.data() + (static_cast<std::size_t>(t) * s.bins + f) * cout;
      for (std::size_t o = 0; o < cout; ++o) {
        const S g = go[o];
        if (g == S(0)) continue;
        const S* wb = w.data() + (o * s.taps + lo) * cin;
#pragma omp simd
        for (std::size_t j = 0; j < len; ++j) xb[j] += g * wb[j];
      }
    }
  }
}

template <class S>
void conv_freq_backward_data_reference(const ConvShape& s, std::span<const S> gy,
                                       std::span<const S> w, std::span<S> gx) {
  check_sizes<S>(s, gx.size(), w.size(), gy.size());
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(s.taps / 2);
  for (std::size_t t = 0; t < s.frames; ++t) {
    for (std::size_t f = 0; f < s.bins; ++f) {
      for (std::size_t i = 0; i < s.in_channels; ++i) {
        S acc = 0;
        // x[f] feeds y[f - k + pad] through tap k.
        for (std::size_t k = 0; k < s.taps; ++k) {
          const std::ptrdiff_t dst = static_cast<std::ptrdiff_t>(f) - static_cast<std::ptrdiff_t>(k) + pad;
          if (dst < 0 || dst >= static_cast<std::ptrdiff_t>(s.bins)) continue;
          for (std::size_t o = 0; o < s.out_channels; ++o) {
            acc += w[(o * s.taps + k) * s.in_channels + i] *
                   gy[(t * s.bins + static_cast<std::size_t>(dst)) * s.out_channels + o];
          }
        }
        gx[(t * s.bins + f) * s.in_channels + i] = acc;
      }
    }
  }
}

template <class S>
void conv_freq_backward_weight(const ConvShape& s, std::span<const S> x, std::span<const S> gy,
                               std::span<S> gw, std::span<S> gb) {
  check_sizes<S>(s, x.size(), gw.size(), gy.size());
  const std::size_t cin = s.in_channels;
  const std::size_t cout = s.out_channels;
  const std::size_t pad = s.taps / 2;
  const std::ptrdiff_t outs = static_cast<std::ptrdiff_t>(cout);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t oi = 0; oi < outs; ++oi) {
    const std::size_t o = static_cast<std::size_t>(oi);
    S* gwo = gw.data() + o * s.taps * cin;
    S bias_acc = 0;
    for (std::size_t t = 0; t < s.frames; ++t) {
      for (std::size_t f = 0; f < s.bins; ++f) {
        const S g = gy[(t * s.bins + f) * cout + o];
        bias_acc += g;
        if (g == S(0)) continue;
        const auto [lo, hi] = tap_range(f, s.bins, s.taps);
        const std::size_t len = (hi - lo) * cin;
        const S* xb = x.data() + (t * s.bins + f + lo - pad) * cin;
        S* wb = gwo + lo * cin;
#pragma omp simd
        for (std::size_t j = 0; j < len; ++j) wb[j] += g * xb[j];
      }
    }
    if (!gb.empty()) gb[o] += bias_acc;
  }
}

template <class S>
void conv_freq_backward_weight_reference(const ConvShape& s, std::span<const S> x,
                                         std::span<const S> gy, std::span<S> gw,
                                         std::span<S> gb) {
  check_sizes<S>(s, x.size(), gw.size(), gy.size());
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(s.taps / 2);
  for (std::size_t o = 0; o < s.out_channels; ++o) {
    for (std::size_t k = 0; k < s.taps; ++k) {
      for (std::size_t i = 0; i < s.in_channels; ++i) {
        S acc = 0;
        for (std::size_t t = 0; t < s.frames; ++t) {
          for (std::size_t f = 0; f < s.bins; ++f) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(f + k) - pad;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(s.bins)) continue;
            acc += gy[(t * s.bins + f) * s.out_channels + o] *
                   x[(t * s.bins + static_cast<std::size_t>(src)) * s.in_channels + i];
          }
        }
        gw[(o * s.taps + k) * s.in_channels + i] += acc;
      }
    }
    if (!gb.empty()) {
      S acc = 0;
      for (std::size_t p = 0; p < s.frames * s.bins; ++p) acc += gy[p * s.out_channels + o];
      gb[o] += acc;
    }
  }
}

#define SHENH_INSTANTIATE_CONV(S)                                                              \
  template void conv_freq_forward<S>(const ConvShape&, std::span<const S>, std::span<const S>, \
                                     std::span<const S>, std::span<S>);                        \
  template void conv_freq_forward_reference<S>(const ConvShape&, std::span<const S>,           \
                                               std::span<const S>, std::span<const S>,         \
                                               std::span<S>);                                  \
  template void conv_freq_backward_data<S>(const ConvShape&, std::span<const S>,               \
                                           std::span<const S>, std::span<S>);                  \
  template void conv_freq_backward_data_reference<S>(const ConvShape&, std::span<const S>,     \
                                                     std::span<const S>, std::span<S>);        \
  template void conv_freq_backward_weight<S>(const ConvShape&, std::span<const S>,             \
                                             std::span<const S>, std::span<S>, std::span<S>);  \
  template void conv_freq_backward_weight_reference<S>(                                        \
      const ConvShape&, std::span<const S>, std::span<const S>, std::span<S>, std::span<S>);

SHENH_INSTANTIATE_CONV(float)
SHENH_INSTANTIATE_CONV(double)
#undef SHENH_INSTANTIATE_CONV

namespace {

void check_projection(std::size_t points, std::size_t inputs, std::size_t outputs,
                      std::size_t in, std::size_t basis, std::size_t out) {
  if (in != points * inputs || basis != outputs * inputs || out != points * outputs) {
    throw std::invalid_argument("projection buffer sizes do not match");
  }
}

}  // namespace

void project_bins(std::size_t points, std::size_t inputs, std::size_t outputs,
                  std::span<const std::complex<double>> in,
                  std::span<const std::complex<double>> basis,
                  std::span<std::complex<double>> out) {
  check_projection(points, inputs, outputs, in.size(), basis.size(), out.size());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(points);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t pi = 0; pi < n; ++pi) {
    const std::size_t p = static_cast<std::size_t>(pi);
    const std::complex<double>* row = in.data() + p * inputs;
    for (std::size_t q = 0; q < outputs; ++q) {
      const std::complex<double>* b = basis.data() + q * inputs;
      double re = 0.0;
      double im = 0.0;
      for (std::size_t i = 0; i < inputs; ++i) {
        re += b[i].real() * row[i].real() - b[i].imag() * row[i].imag();
        im += b[i].real() * row[i].imag() + b[i].imag() * row[i].real();
      }
      out[p * outputs + q] = {re, im};
    }
  }
}

void project_bins_reference(std::size_t points, std::size_t inputs, std::size_t outputs,
                            std::span<const std::complex<double>> in,
                            std::span<const std::complex<double>> basis,
                            std::span<std::complex<double>> out) {
  check_projection(points, inputs, outputs, in.size(), basis.size(), out.size());
  for (std::size_t p = 0; p < points; ++p) {
    for (std::size_t q = 0; q < outputs; ++q) {
      std::complex<double> acc{};
      for (std::size_t i = 0; i < inputs; ++i) acc += basis[q * inputs + i] * in[p * inputs + i];
      out[p * outputs + q] = acc;
    }
  }
}

std::vector<std::vector<double>> fir_convolve(
    std::span<const double> x, const std::vector<std::span<const double>>& filters) {
  std::vector<std::vector<double>> out(filters.size());
  if (x.empty()) {
    for (std::size_t c = 0; c < filters.size(); ++c) out[c].clear();
    return out;
  }
  std::size_t longest = 0;
  for (const auto& h : filters) longest = std::max(longest, h.size());
  if (longest == 0) return out;

  std::size_t n = 2;
  while (n < x.size() + longest - 1) n *= 2;
  const RealFft fft(n);
  std::vector<double> padded(n, 0.0);
  std::copy(x.begin(), x.end(), padded.begin());
  std::vector<std::complex<double>> xs(fft.bins());
  fft.forward(padded, xs);

  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(filters.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < count; ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    const auto& h = filters[c];
    if (h.empty()) continue;
    std::vector<double> hp(n, 0.0);
    std::copy(h.begin(), h.end(), hp.begin());
    std::vector<std::complex<double>> hs(fft.bins());
    fft.forward(hp, hs);
    for (std::size_t k = 0; k < hs.size(); ++k) hs[k] *= xs[k];
    std::vector<double> y(n);
    fft.inverse(hs, y);
    const std::size_t len = x.size() + h.size() - 1;
    out[c].resize(len);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < len; ++i) out[c][i] = y[i] * scale;
  }
  return out;
}

std::vector<std::vector<double>> fir_convolve_reference(
    std::span<const double> x, const std::vector<std::span<const double>>& filters) {
  std::vector<std::vector<double>> out(filters.size());
  for (std::size_t c = 0; c < filters.size(); ++c) {
    const auto& h = filters[c];
    if (x.empty() || h.empty()) continue;
    out[c].assign(x.size() + h.size() - 1, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t k = 0; k < h.size(); ++k) out[c][i + k] += x[i] * h[k];
    }
  }
  return out;
}

}  // namespace shenh::kernels
