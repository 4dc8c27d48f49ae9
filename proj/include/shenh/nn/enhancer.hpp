#pragma once

#include <cstdint>
#include <vector>

#include "shenh/features.hpp"
#include "shenh/nn/config.hpp"
#include "shenh/nn/layers.hpp"
#include "shenh/nn/params.hpp"

namespace shenh::nn {

/// Inplace gated convolutional recurrent enhancer. Output per utterance is a
/// T x F x 2 tensor holding (re, im) of the enhanced reference-channel STFT.
template <class S>
class Enhancer {
 public:
  struct Trace {
    std::vector<Batch<S>> enc_in_a;  // input of each block, first (or only) encoder
    std::vector<Batch<S>> enc_in_b;  // SHT encoder, parallel variant
    std::vector<typename GluBlock<S>::Cache> enc_a;
    std::vector<typename GluBlock<S>::Cache> enc_b;
    std::vector<Batch<S>> enc_out;  // per level, both encoders concatenated
    Batch<S> core_in;
    typename ChannelLstm<S>::Cache lstm;
    Batch<S> lstm_out;
    std::vector<Batch<S>> dec_in;
    std::vector<typename GluBlock<S>::Cache> dec;
    Batch<S> head_in;
  };

  Enhancer(const EnhancerConfig& config, std::uint64_t seed);

  const EnhancerConfig& config() const { return config_; }
  ParameterSet<S>& params() { return params_; }
  const ParameterSet<S>& params() const { return params_; }

  Batch<S> forward(const std::vector<ModelInput<S>>& batch, Mode mode, Trace* trace = nullptr) const;
  Tensor3<S> forward_one(const ModelInput<S>& input) const;

  /// Accumulates parameter gradients given dL/d(output).
  void backward(const Trace& trace, const Batch<S>& grad_out);

  /// Folds the batch statistics of a training forward pass into the running
  /// statistics.
  void commit_batch_stats(const Trace& trace);

 private:
  void check_input(const ModelInput<S>& in) const;

  EnhancerConfig config_;
  ParameterSet<S> params_;
  std::vector<GluBlock<S>> enc_a_;
  std::vector<GluBlock<S>> enc_b_;
  bool has_core_ = false;
  ChannelLstm<S> lstm_;
  InplaceConv<S> proj_;
  std::vector<GluBlock<S>> dec_;
  InplaceConv<S> head_;
};

}  // namespace shenh::nn
