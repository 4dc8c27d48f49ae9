#pragma once

#include <span>
#include <vector>

#include "shenh/features.hpp"
#include "shenh/nn/enhancer.hpp"
#include "shenh/nn/optim.hpp"
#include "shenh/spectral.hpp"

namespace shenh::nn {

/// One training pair: network input and the time-domain target at the
/// reference microphone.
template <class S>
struct Example {
  ModelInput<S> input;
  std::vector<double> target;
};

/// Mean squared error between istft(est) and `target`, taken over the samples
/// that the overlap-add reconstructs exactly and that the target covers.
/// `est` is T x F x 2 (re, im). Writes dL/d(est) when `grad` is non-null.
template <class S>
double spectral_mse(const Tensor3<S>& est, std::span<const double> target,
                    const StftConfig& config, Tensor3<S>* grad = nullptr);

/// Network output as a complex single-channel spectrogram.
template <class S>
Spectrogram to_spectrogram(const Tensor3<S>& out);

/// Forward, loss, backward and one Adam update. Returns the batch mean loss.
template <class S>
double train_step(Enhancer<S>& model, Adam<S>& optimizer, const std::vector<Example<S>>& batch,
                  const StftConfig& config);

/// Evaluation-mode mean loss over `examples`, processed `batch_size` at a time.
template <class S>
double evaluate_loss(const Enhancer<S>& model, const std::vector<Example<S>>& examples,
                     const StftConfig& config, std::size_t batch_size = 4);

/// Enhanced time-domain signal for one input.
template <class S>
std::vector<double> enhance(const Enhancer<S>& model, const ModelInput<S>& input,
                            const StftConfig& config);

}  // namespace shenh::nn
