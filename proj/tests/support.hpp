#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "shenh/nn/enhancer.hpp"
#include "shenh/nn/training.hpp"

namespace testing_support {

using namespace shenh;
using namespace shenh::nn;

// 17 bins, 6 frames.
inline StftConfig tiny_stft() { return StftConfig{32, 16, 32, 16000.0}; }

inline EnhancerConfig tiny_config(Variant v = Variant::parallel) {
  EnhancerConfig c;
  c.variant = v;
  c.stft_channels = 4;
  c.sht_channels = 8;
  c.encoder_blocks = 1;
  c.glu_channels = 4;
  c.decoder_blocks = 1;
  c.decoder_channels = 4;
  c.recurrent_hidden = 4;
  c.bins = 17;
  return c;
}

template <class S>
ModelInput<S> random_input(const EnhancerConfig& c, std::size_t frames, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Tensor3<S> a(frames, c.bins, c.stft_channels), b(frames, c.bins, c.sht_channels);
  for (auto& v : a.data()) v = static_cast<S>(nd(rng));
  for (auto& v : b.data()) v = static_cast<S>(nd(rng));
  return make_model_input<S>(std::move(a), std::move(b), c.variant);
}

template <class S>
std::vector<Example<S>> random_batch(const EnhancerConfig& c, const StftConfig& stft,
                                     std::size_t items, std::size_t frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<Example<S>> out;
  for (std::size_t i = 0; i < items; ++i) {
    Example<S> ex{random_input<S>(c, frames, rng), std::vector<double>(stft.samples_for(frames))};
    // A smooth target the network can actually fit.
    for (std::size_t n = 0; n < ex.target.size(); ++n) {
      ex.target[n] = 0.5 * std::sin(0.3 * n + i) + 0.1 * nd(rng);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

// Training-mode batch loss, the quantity train_step differentiates.
template <class S>
double batch_loss(const Enhancer<S>& model, const std::vector<Example<S>>& batch,
                  const StftConfig& stft) {
  std::vector<ModelInput<S>> in;
  for (const auto& e : batch) in.push_back(e.input);
  const auto out = model.forward(in, Mode::train);
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) loss += spectral_mse(out[i], batch[i].target, stft);
  return loss / static_cast<double>(batch.size());
}

template <class S>
void analytic_gradient(Enhancer<S>& model, const std::vector<Example<S>>& batch,
                       const StftConfig& stft) {
  std::vector<ModelInput<S>> in;
  for (const auto& e : batch) in.push_back(e.input);
  typename Enhancer<S>::Trace trace;
  model.params().zero_grad();
  const auto out = model.forward(in, Mode::train, &trace);
  Batch<S> grads(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    spectral_mse(out[i], batch[i].target, stft, &grads[i]);
    for (auto& g : grads[i].data()) g /= static_cast<S>(batch.size());
  }
  model.backward(trace, grads);
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// Central differences on every parameter entry. Entries where both the
// analytic and numeric values sit below `floor` are compared absolutely.
inline GradCheck gradient_check(Enhancer<double>& model, const std::vector<Example<double>>& batch,
                                const StftConfig& stft, double h = 1e-6, double floor = 1e-7) {
  analytic_gradient(model, batch, stft);
  GradCheck r;
  for (auto& p : model.params().params()) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double keep = p.value[i];
      p.value[i] = keep + h;
      const double up = batch_loss(model, batch, stft);
      p.value[i] = keep - h;
      const double down = batch_loss(model, batch, stft);
      p.value[i] = keep;
      const double numeric = (up - down) / (2 * h);
      const double analytic = p.grad[i];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), floor});
      r.max_rel_error = std::max(r.max_rel_error, std::abs(numeric - analytic) / denom);
      ++r.checked;
    }
  }
  return r;
}

}  // namespace testing_support
