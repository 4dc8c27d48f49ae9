#pragma once

// Data-parallel inner loops. Each OpenMP kernel has a plain serial reference
// with the same signature (suffix _reference) that tests and the benchmark
// compare against.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace shenh::kernels {

/// Shape of a frequency-axis convolution over a T x F x C tensor (channels
/// fastest). Weights are laid out [out][tap][in]; padding is taps / 2 on both
/// sides so F is preserved.
struct ConvShape {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t taps = 5;

  std::size_t weight_size() const { return out_channels * taps * in_channels; }
  std::size_t input_size() const { return frames * bins * in_channels; }
  std::size_t output_size() const { return frames * bins * out_channels; }
  void validate() const;
};

/// y[t,f,o] = b[o] + sum_{k,i} w[o,k,i] x[t, f+k-pad, i]. `bias` may be empty.
template <class S>
void conv_freq_forward(const ConvShape& shape, std::span<const S> x, std::span<const S> w,
                       std::span<const S> bias, std::span<S> y);
template <class S>
void conv_freq_forward_reference(const ConvShape& shape, std::span<const S> x,
                                 std::span<const S> w, std::span<const S> bias, std::span<S> y);

/// Adjoint of conv_freq_forward in x (bias ignored): gx = A^T gy. Overwrites gx.
template <class S>
void conv_freq_backward_data(const ConvShape& shape, std::span<const S> gy, std::span<const S> w,
                             std::span<S> gx);
template <class S>
void conv_freq_backward_data_reference(const ConvShape& shape, std::span<const S> gy,
                                       std::span<const S> w, std::span<S> gx);

/// Accumulates dL/dw and (if non-empty) dL/db.
template <class S>
void conv_freq_backward_weight(const ConvShape& shape, std::span<const S> x,
                               std::span<const S> gy, std::span<S> gw, std::span<S> gb);
template <class S>
void conv_freq_backward_weight_reference(const ConvShape& shape, std::span<const S> x,
                                         std::span<const S> gy, std::span<S> gw,
                                         std::span<S> gb);

/// Per-bin projection out[p, q] = sum_i basis[q, i] in[p, i] for `points`
/// rows of `inputs` complex values; basis is outputs x inputs.
void project_bins(std::size_t points, std::size_t inputs, std::size_t outputs,
                  std::span<const std::complex<double>> in,
                  std::span<const std::complex<double>> basis,
                  std::span<std::complex<double>> out);
void project_bins_reference(std::size_t points, std::size_t inputs, std::size_t outputs,
                            std::span<const std::complex<double>> in,
                            std::span<const std::complex<double>> basis,
                            std::span<std::complex<double>> out);

/// Full linear convolution of x with each filter; output length
/// x.size() + filter.size() - 1 per filter. FFT based.
std::vector<std::vector<double>> fir_convolve(std::span<const double> x,
                                              const std::vector<std::span<const double>>& filters);
/// Direct O(S K) evaluation.
std::vector<std::vector<double>> fir_convolve_reference(
    std::span<const double> x, const std::vector<std::span<const double>>& filters);

}  // namespace shenh::kernels
