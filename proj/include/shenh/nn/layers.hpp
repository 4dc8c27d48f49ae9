#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "shenh/nn/params.hpp"
#include "shenh/tensor.hpp"

namespace shenh::nn {

enum class Mode { train, eval };

template <class S>
using Batch = std::vector<Tensor3<S>>;

/// Frequency-axis convolution with a 1-frame time kernel. The transposed form
/// is the adjoint of the plain form with the same weights, so it applies the
/// kernels flipped; both keep F unchanged.
///
/// Weight layout: plain [out][tap][in]; transposed [in][tap][out].
template <class S>
class InplaceConv {
 public:
  InplaceConv() = default;
  InplaceConv(ParameterSet<S>& params, const std::string& name, std::size_t in_channels,
              std::size_t out_channels, std::size_t taps, bool transposed, bool bias = true);

  std::size_t in_channels() const { return in_; }
  std::size_t out_channels() const { return out_; }
  std::size_t taps() const { return taps_; }
  bool transposed() const { return transposed_; }
  std::size_t weight_index() const { return weight_; }
  std::size_t fan_in() const { return in_ * taps_; }

  Tensor3<S> forward(const ParameterSet<S>& params, const Tensor3<S>& x) const;
  /// Accumulates parameter gradients and returns dL/dx.
  Tensor3<S> backward(ParameterSet<S>& params, const Tensor3<S>& x, const Tensor3<S>& gy) const;

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  std::size_t taps_ = 1;
  bool transposed_ = false;
  bool has_bias_ = true;
  std::size_t weight_ = 0;
  std::size_t bias_ = 0;
};

/// Per-channel normalization over every (utterance, frame, bin) of a batch.
template <class S>
class BatchNorm {
 public:
  struct Cache {
    Batch<S> xhat;
    std::vector<S> inv_std;
    std::vector<double> batch_mean;
    std::vector<double> batch_var;  // unbiased
  };

  BatchNorm() = default;
  BatchNorm(ParameterSet<S>& params, const std::string& name, std::size_t channels, double momentum,
            double eps);

  Batch<S> forward(const ParameterSet<S>& params, const Batch<S>& x, Mode mode, Cache* cache) const;
  Batch<S> backward(ParameterSet<S>& params, const Batch<S>& gy, const Cache& cache) const;
  /// running <- momentum * running + (1 - momentum) * batch
  void update_running(ParameterSet<S>& params, const Cache& cache) const;

 private:
  std::size_t channels_ = 0;
  double momentum_ = 0.9;
  double eps_ = 1e-5;
  std::size_t gamma_ = 0;
  std::size_t beta_ = 0;
  std::size_t running_mean_ = 0;
  std::size_t running_var_ = 0;
};

/// ELU(BN(conv_a(x) * sigmoid(conv_b(x)))).
template <class S>
class GluBlock {
 public:
  struct Cache {
    Batch<S> linear;
    Batch<S> gate;  // after the sigmoid
    Batch<S> out;
    typename BatchNorm<S>::Cache bn;
  };

  GluBlock() = default;
  GluBlock(ParameterSet<S>& params, const std::string& name, std::size_t in_channels,
           std::size_t out_channels, std::size_t taps, bool transposed, double bn_momentum,
           double bn_eps);

  std::size_t in_channels() const { return linear_.in_channels(); }
  std::size_t out_channels() const { return linear_.out_channels(); }
  const InplaceConv<S>& linear() const { return linear_; }
  const InplaceConv<S>& gate() const { return gate_; }
  const BatchNorm<S>& norm() const { return norm_; }

  Batch<S> forward(const ParameterSet<S>& params, const Batch<S>& x, Mode mode, Cache* cache) const;
  Batch<S> backward(ParameterSet<S>& params, const Batch<S>& x, const Batch<S>& gy,
                    const Cache& cache) const;

 private:
  InplaceConv<S> linear_;
  InplaceConv<S> gate_;
  BatchNorm<S> norm_;
};

/// LSTM run along time independently for every frequency bin, weights shared
/// across bins. Gate order i, f, g, o.
template <class S>
class ChannelLstm {
 public:
  struct DirectionCache {
    Batch<S> gates;  // T x F x 4H, post-activation
    Batch<S> cell;   // T x F x H
    Batch<S> hidden;
  };
  struct Cache {
    DirectionCache fwd;
    DirectionCache bwd;
  };

  ChannelLstm() = default;
  ChannelLstm(ParameterSet<S>& params, const std::string& name, std::size_t in_channels,
              std::size_t hidden, bool bidirectional);

  std::size_t in_channels() const { return in_; }
  std::size_t hidden() const { return hidden_; }
  std::size_t out_channels() const { return bidirectional_ ? 2 * hidden_ : hidden_; }

  Batch<S> forward(const ParameterSet<S>& params, const Batch<S>& x, Cache* cache) const;
  Batch<S> backward(ParameterSet<S>& params, const Batch<S>& x, const Batch<S>& gy,
                    const Cache& cache) const;

  /// Weight handles for one direction: input kernel, recurrent kernel, bias.
  struct Weights {
    std::size_t wx;
    std::size_t wh;
    std::size_t b;
  };
  const Weights& weights(bool reverse) const { return reverse ? bwd_ : fwd_; }

 private:
  std::size_t in_ = 0;
  std::size_t hidden_ = 0;
  bool bidirectional_ = false;
  Weights fwd_{};
  Weights bwd_{};
};

/// Parameter initialization used by the enhancer: uniform Kaiming fan-in for
/// convolutions, orthogonal blocks for recurrent kernels, zero biases, unit
/// batch-norm scales.
template <class S>
void init_conv(ParameterSet<S>& params, const InplaceConv<S>& conv, std::mt19937_64& rng);
template <class S>
void init_lstm(ParameterSet<S>& params, const ChannelLstm<S>& lstm, std::mt19937_64& rng);

}  // namespace shenh::nn
