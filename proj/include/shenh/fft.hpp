#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace shenh {

/// Real-input DFT of fixed size backed by FFTW. Plans are created once per
/// size and shared; execute() is safe to call from several threads.
class RealFft {
 public:
  explicit RealFft(std::size_t size);

  std::size_t size() const { return size_; }
  std::size_t bins() const { return size_ / 2 + 1; }

  /// X[k] = sum_n x[n] e^{-2 pi j k n / N}, k = 0..N/2.
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  /// Unnormalized inverse: x[n] = sum over the full Hermitian spectrum. The
  /// imaginary parts of the DC and Nyquist bins are ignored.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

 private:
  std::size_t size_;
  void* forward_plan_;
  void* inverse_plan_;
};

}  // namespace shenh
