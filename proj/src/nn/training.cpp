#include "shenh/nn/training.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace shenh::nn {

template <class S>
Spectrogram to_spectrogram(const Tensor3<S>& out) {
  if (out.channels() != 2) throw std::invalid_argument("expected a (re, im) output tensor");
  Spectrogram spec(out.frames(), out.bins(), 1);
  auto d = spec.data();
  const auto o = out.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = {static_cast<double>(o[2 * i]), static_cast<double>(o[2 * i + 1])};
  }
  return spec;
}

template <class S>
double spectral_mse(const Tensor3<S>& est, std::span<const double> target,
                    const StftConfig& config, Tensor3<S>* grad) {
  const auto y = istft(to_spectrogram(est), config);
  const SampleRange interior = interior_range(est.frames(), config);
  const std::size_t end = std::min({interior.end, target.size(), y.samples()});
  if (end <= interior.begin) {
    throw std::invalid_argument("estimate and target do not overlap");
  }
  const std::size_t n = end - interior.begin;
  const auto yy = y.channel(0);
  double loss = 0.0;
  for (std::size_t i = interior.begin; i < end; ++i) {
    const double e = yy[i] - target[i];
    loss += e * e;
  }
  loss /= static_cast<double>(n);

  if (grad) {
    MultichannelSignal dy(1, y.samples(), y.sample_rate());
    auto g = dy.channel(0);
    for (std::size_t i = interior.begin; i < end; ++i) {
      g[i] = 2.0 * (yy[i] - target[i]) / static_cast<double>(n);
    }
    const auto gs = istft_adjoint(dy, est.frames(), config);
    *grad = Tensor3<S>(est.frames(), est.bins(), 2);
    auto out = grad->data();
    const auto d = gs.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
      out[2 * i] = static_cast<S>(d[i].real());
      out[2 * i + 1] = static_cast<S>(d[i].imag());
    }
  }
  return loss;
}

template <class S>
double train_step(Enhancer<S>& model, Adam<S>& optimizer, const std::vector<Example<S>>& batch,
                  const StftConfig& config) {
  if (batch.empty()) throw std::invalid_argument("empty training batch");
  std::vector<ModelInput<S>> inputs;
  for (const auto& ex : batch) inputs.push_back(ex.input);

  typename Enhancer<S>::Trace trace;
  model.params().zero_grad();
  const Batch<S> out = model.forward(inputs, Mode::train, &trace);

  double loss = 0.0;
  Batch<S> grads(batch.size());
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    loss += spectral_mse(out[i], batch[i].target, config, &grads[i]);
    for (auto& g : grads[i].data()) g = static_cast<S>(g * inv_b);
  }
  loss *= inv_b;
  if (!std::isfinite(loss)) {
    throw std::runtime_error("non-finite training loss at step " +
                             std::to_string(optimizer.steps() + 1) +
                             "; lower the learning rate or check the input features");
  }

  model.backward(trace, grads);
  for (const auto& p : model.params().params()) {
    for (S g : p.grad) {
      if (!std::isfinite(g)) {
        throw std::runtime_error("non-finite gradient in " + p.name + " at step " +
                                 std::to_string(optimizer.steps() + 1));
      }
    }
  }
  optimizer.step(model.params());
  model.commit_batch_stats(trace);
  return loss;
}

template <class S>
double evaluate_loss(const Enhancer<S>& model, const std::vector<Example<S>>& examples,
                     const StftConfig& config, std::size_t batch_size) {
  if (examples.empty()) throw std::invalid_argument("no examples to evaluate");
  batch_size = std::max<std::size_t>(batch_size, 1);
  double total = 0.0;
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    const std::size_t stop = std::min(examples.size(), start + batch_size);
    std::vector<ModelInput<S>> inputs;
    for (std::size_t i = start; i < stop; ++i) inputs.push_back(examples[i].input);
    const auto out = model.forward(inputs, Mode::eval);
    for (std::size_t i = start; i < stop; ++i) {
      total += spectral_mse(out[i - start], examples[i].target, config);
    }
  }
  return total / static_cast<double>(examples.size());
}

template <class S>
std::vector<double> enhance(const Enhancer<S>& model, const ModelInput<S>& input,
                            const StftConfig& config) {
  const auto y = istft(to_spectrogram(model.forward_one(input)), config);
  const auto c = y.channel(0);
  return {c.begin(), c.end()};
}

#define SHENH_TRAINING(S)                                                                      \
  template Spectrogram to_spectrogram<S>(const Tensor3<S>&);                                   \
  template double spectral_mse<S>(const Tensor3<S>&, std::span<const double>,                  \
                                  const StftConfig&, Tensor3<S>*);                             \
  template double train_step<S>(Enhancer<S>&, Adam<S>&, const std::vector<Example<S>>&,        \
                                const StftConfig&);                                            \
  template double evaluate_loss<S>(const Enhancer<S>&, const std::vector<Example<S>>&,         \
                                   const StftConfig&, std::size_t);                            \
  template std::vector<double> enhance<S>(const Enhancer<S>&, const ModelInput<S>&,            \
                                          const StftConfig&);
SHENH_TRAINING(float)
SHENH_TRAINING(double)
#undef SHENH_TRAINING

}  // namespace shenh::nn
