#include "shenh/nn/enhancer.hpp"

#include <random>
#include <stdexcept>
#include <string>

namespace shenh::nn {

std::string to_string(Direction d) {
  return d == Direction::bidirectional ? "bidirectional" : "unidirectional";
}

Direction parse_direction(const std::string& s) {
  if (s == "unidirectional") return Direction::unidirectional;
  if (s == "bidirectional") return Direction::bidirectional;
  throw std::invalid_argument("unknown direction '" + s + "'");
}

EnhancerConfig EnhancerConfig::full_size(Variant variant) {
  EnhancerConfig c;
  c.variant = variant;
  c.glu_channels = variant == Variant::parallel ? 32 : 64;
  return c;
}

std::size_t EnhancerConfig::encoder_width() const {
  if (encoder_blocks == 0) return stft_channels + sht_channels;
  return variant == Variant::parallel ? 2 * glu_channels : glu_channels;
}

std::size_t EnhancerConfig::recurrent_width() const {
  return recurrent_hidden > 0 ? decoder_channels : encoder_width();
}

std::size_t EnhancerConfig::decoder_input_width(std::size_t j) const {
  std::size_t w = j == 0 ? recurrent_width() : decoder_channels;
  if (skip_connections && j < encoder_blocks) w += encoder_width();
  return w;
}

bool EnhancerConfig::is_empty() const {
  return encoder_blocks == 0 && decoder_blocks == 0 && recurrent_hidden == 0;
}

void EnhancerConfig::validate() const {
  if (is_empty()) throw std::invalid_argument("enhancer config has no layers");
  if (stft_channels == 0 || sht_channels == 0) {
    throw std::invalid_argument("input channel counts must be positive");
  }
  if (encoder_blocks > 0 && glu_channels == 0) throw std::invalid_argument("glu_channels is zero");
  if ((decoder_blocks > 0 || recurrent_hidden > 0) && decoder_channels == 0) {
    throw std::invalid_argument("decoder_channels is zero");
  }
  if (kernel_freq == 0 || kernel_freq % 2 == 0) {
    throw std::invalid_argument("kernel_freq must be odd");
  }
  if (kernel_time != 1) throw std::invalid_argument("only kernel_time = 1 is supported");
  if (bins == 0) throw std::invalid_argument("bins must be positive");
  if (!(bn_momentum >= 0.0 && bn_momentum < 1.0)) {
    throw std::invalid_argument("bn_momentum must lie in [0, 1)");
  }
  if (!(bn_eps > 0.0)) throw std::invalid_argument("bn_eps must be positive");
}

namespace {

struct Counter {
  std::size_t params = 0;
  double macs = 0.0;

  void conv(std::size_t in, std::size_t out, std::size_t taps, bool bias = true) {
    params += in * out * taps + (bias ? out : 0);
    macs += static_cast<double>(in * out * taps);
  }
  void glu(std::size_t in, std::size_t out, std::size_t taps) {
    conv(in, out, taps);
    conv(in, out, taps);
    params += 2 * out;
  }
  void lstm(std::size_t in, std::size_t hidden, std::size_t directions) {
    params += directions * 4 * hidden * (in + hidden + 1);
    macs += static_cast<double>(directions * 4 * hidden * (in + hidden));
  }
};

}  // namespace

ModelCost count_params_flops(const EnhancerConfig& c, double frames_per_second) {
  ModelCost cost;
  if (c.is_empty()) return cost;
  Counter n;
  const std::size_t k = c.kernel_freq;
  const bool parallel = c.variant == Variant::parallel;
  for (std::size_t b = 0; b < c.encoder_blocks; ++b) {
    if (parallel) {
      n.glu(b == 0 ? c.stft_channels : c.glu_channels, c.glu_channels, k);
      n.glu(b == 0 ? c.sht_channels : c.glu_channels, c.glu_channels, k);
    } else {
      n.glu(b == 0 ? c.stft_channels + c.sht_channels : c.glu_channels, c.glu_channels, k);
    }
  }
  if (c.recurrent_hidden > 0) {
    const std::size_t dirs = c.direction == Direction::bidirectional ? 2 : 1;
    n.lstm(c.encoder_width(), c.recurrent_hidden, dirs);
    n.conv(dirs * c.recurrent_hidden, c.decoder_channels, 1);
  }
  for (std::size_t j = 0; j < c.decoder_blocks; ++j) {
    n.glu(c.decoder_input_width(j), c.decoder_channels, k);
  }
  n.conv(c.decoder_blocks > 0 ? c.decoder_channels : c.recurrent_width(), 2, 1);

  cost.params = n.params;
  cost.macs_per_bin_frame = n.macs;
  cost.flops_per_second = 2.0 * n.macs * static_cast<double>(c.bins) * frames_per_second;
  return cost;
}

// ------------------------------------------------------------------- Enhancer

template <class S>
Enhancer<S>::Enhancer(const EnhancerConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const auto& c = config_;
  const std::size_t k = c.kernel_freq;
  const bool parallel = c.variant == Variant::parallel;
  for (std::size_t b = 0; b < c.encoder_blocks; ++b) {
    const std::string idx = std::to_string(b);
    if (parallel) {
      enc_a_.emplace_back(params_, "enc_stft." + idx, b == 0 ? c.stft_channels : c.glu_channels,
                          c.glu_channels, k, false, c.bn_momentum, c.bn_eps);
      enc_b_.emplace_back(params_, "enc_sht." + idx, b == 0 ? c.sht_channels : c.glu_channels,
                          c.glu_channels, k, false, c.bn_momentum, c.bn_eps);
    } else {
      enc_a_.emplace_back(params_, "enc." + idx,
                          b == 0 ? c.stft_channels + c.sht_channels : c.glu_channels,
                          c.glu_channels, k, false, c.bn_momentum, c.bn_eps);
    }
  }
  if (c.recurrent_hidden > 0) {
    has_core_ = true;
    lstm_ = ChannelLstm<S>(params_, "core.lstm", c.encoder_width(), c.recurrent_hidden,
                           c.direction == Direction::bidirectional);
    proj_ = InplaceConv<S>(params_, "core.proj", lstm_.out_channels(), c.decoder_channels, 1, false);
  }
  for (std::size_t j = 0; j < c.decoder_blocks; ++j) {
    dec_.emplace_back(params_, "dec." + std::to_string(j), c.decoder_input_width(j),
                      c.decoder_channels, k, true, c.bn_momentum, c.bn_eps);
  }
  head_ = InplaceConv<S>(params_, "head", c.decoder_blocks > 0 ? c.decoder_channels : c.recurrent_width(),
                         2, 1, false);

  std::mt19937_64 rng(seed);
  for (auto* list : {&enc_a_, &enc_b_, &dec_}) {
    for (const auto& blk : *list) {
      init_conv(params_, blk.linear(), rng);
      init_conv(params_, blk.gate(), rng);
    }
  }
  if (has_core_) {
    init_lstm(params_, lstm_, rng);
    init_conv(params_, proj_, rng);
  }
  init_conv(params_, head_, rng);
}

template <class S>
void Enhancer<S>::check_input(const ModelInput<S>& in) const {
  if (in.variant != config_.variant) {
    throw std::invalid_argument("input prepared for the " + to_string(in.variant) +
                                " variant, model is " + to_string(config_.variant));
  }
  const auto check = [&](const Tensor3<S>& t, std::size_t channels, const char* what) {
    if (t.channels() != channels) {
      throw std::invalid_argument(std::string(what) + " input has " + std::to_string(t.channels()) +
                                  " channels, expected " + std::to_string(channels));
    }
    if (t.frames() == 0) throw std::invalid_argument("empty input");
  };
  if (config_.variant == Variant::parallel) {
    check(in.stft, config_.stft_channels, "STFT");
    check(in.sht, config_.sht_channels, "SHT");
    if (in.stft.frames() != in.sht.frames() || in.stft.bins() != in.sht.bins()) {
      throw std::invalid_argument("STFT and SHT inputs differ in frames or bins");
    }
  } else {
    check(in.serial, config_.stft_channels + config_.sht_channels, "serial");
  }
}

template <class S>
Batch<S> Enhancer<S>::forward(const std::vector<ModelInput<S>>& batch, Mode mode,
                              Trace* trace) const {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  for (const auto& in : batch) check_input(in);
  Trace local;
  Trace& tr = trace ? *trace : local;
  const bool keep = trace != nullptr;
  const bool parallel = config_.variant == Variant::parallel;

  Batch<S> a;
  Batch<S> b;
  for (const auto& in : batch) {
    if (parallel) {
      a.push_back(in.stft);
      b.push_back(in.sht);
    } else {
      a.push_back(in.serial);
    }
  }

  const std::size_t levels = enc_a_.size();
  tr.enc_in_a.assign(keep ? levels : 0, {});
  tr.enc_in_b.assign(keep && parallel ? levels : 0, {});
  tr.enc_a.assign(keep ? levels : 0, {});
  tr.enc_b.assign(keep && parallel ? levels : 0, {});
  tr.enc_out.assign(levels, {});

  const auto level_output = [&](const Batch<S>& x, const Batch<S>& y) {
    if (!parallel) return x;
    Batch<S> out;
    for (std::size_t i = 0; i < x.size(); ++i) out.push_back(concat_channels(x[i], y[i]));
    return out;
  };

  for (std::size_t l = 0; l < levels; ++l) {
    Batch<S> na = enc_a_[l].forward(params_, a, mode, keep ? &tr.enc_a[l] : nullptr);
    if (keep) tr.enc_in_a[l] = std::move(a);
    a = std::move(na);
    if (parallel) {
      Batch<S> nb = enc_b_[l].forward(params_, b, mode, keep ? &tr.enc_b[l] : nullptr);
      if (keep) tr.enc_in_b[l] = std::move(b);
      b = std::move(nb);
    }
    tr.enc_out[l] = level_output(a, b);
  }

  Batch<S> x = levels > 0 ? tr.enc_out[levels - 1] : level_output(a, b);
  if (has_core_) {
    Batch<S> h = lstm_.forward(params_, x, keep ? &tr.lstm : nullptr);
    if (keep) tr.core_in = std::move(x);
    x.clear();
    for (const auto& t : h) x.push_back(proj_.forward(params_, t));
    if (keep) tr.lstm_out = std::move(h);
  }

  tr.dec_in.assign(keep ? dec_.size() : 0, {});
  tr.dec.assign(keep ? dec_.size() : 0, {});
  for (std::size_t j = 0; j < dec_.size(); ++j) {
    if (config_.skip_connections && j < levels) {
      const auto& skip = tr.enc_out[levels - 1 - j];
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = concat_channels(x[i], skip[i]);
    }
    Batch<S> y = dec_[j].forward(params_, x, mode, keep ? &tr.dec[j] : nullptr);
    if (keep) tr.dec_in[j] = std::move(x);
    x = std::move(y);
  }

  Batch<S> out;
  for (const auto& t : x) out.push_back(head_.forward(params_, t));
  if (keep) tr.head_in = std::move(x);
  return out;
}

template <class S>
Tensor3<S> Enhancer<S>::forward_one(const ModelInput<S>& input) const {
  auto out = forward({input}, Mode::eval, nullptr);
  return std::move(out.front());
}

namespace {

template <class S>
void add_into(Batch<S>& acc, const Batch<S>& g) {
  if (g.empty()) return;
  if (acc.empty()) {
    acc = g;
    return;
  }
  for (std::size_t i = 0; i < acc.size(); ++i) {
    auto d = acc[i].data();
    const auto s = g[i].data();
    for (std::size_t k = 0; k < d.size(); ++k) d[k] += s[k];
  }
}

}  // namespace

template <class S>
void Enhancer<S>::backward(const Trace& tr, const Batch<S>& grad_out) {
  const bool parallel = config_.variant == Variant::parallel;
  const std::size_t levels = enc_a_.size();
  if (grad_out.size() != tr.head_in.size()) throw std::invalid_argument("gradient batch size");

  Batch<S> g;
  for (std::size_t i = 0; i < grad_out.size(); ++i) {
    g.push_back(head_.backward(params_, tr.head_in[i], grad_out[i]));
  }

  std::vector<Batch<S>> level_grad(levels);
  for (std::size_t j = dec_.size(); j-- > 0;) {
    Batch<S> gx = dec_[j].backward(params_, tr.dec_in[j], g, tr.dec[j]);
    if (config_.skip_connections && j < levels) {
      const std::size_t main = gx.front().channels() - config_.encoder_width();
      Batch<S> gmain;
      Batch<S> gskip;
      for (auto& t : gx) {
        auto parts = split_channels(t, main);
        gmain.push_back(std::move(parts.first));
        gskip.push_back(std::move(parts.second));
      }
      add_into(level_grad[levels - 1 - j], gskip);
      g = std::move(gmain);
    } else {
      g = std::move(gx);
    }
  }

  if (has_core_) {
    Batch<S> gh;
    for (std::size_t i = 0; i < g.size(); ++i) {
      gh.push_back(proj_.backward(params_, tr.lstm_out[i], g[i]));
    }
    g = lstm_.backward(params_, tr.core_in, gh, tr.lstm);
  }
  if (levels == 0) return;
  add_into(level_grad[levels - 1], g);

  Batch<S> ga;
  Batch<S> gb;
  for (std::size_t l = levels; l-- > 0;) {
    Batch<S> gl = std::move(level_grad[l]);
    if (parallel) {
      Batch<S> la;
      Batch<S> lb;
      for (auto& t : gl) {
        auto parts = split_channels(t, config_.glu_channels);
        la.push_back(std::move(parts.first));
        lb.push_back(std::move(parts.second));
      }
      add_into(la, ga);
      add_into(lb, gb);
      gb = enc_b_[l].backward(params_, tr.enc_in_b[l], lb, tr.enc_b[l]);
      ga = enc_a_[l].backward(params_, tr.enc_in_a[l], la, tr.enc_a[l]);
    } else {
      add_into(gl, ga);
      ga = enc_a_[l].backward(params_, tr.enc_in_a[l], gl, tr.enc_a[l]);
    }
  }
}

template <class S>
void Enhancer<S>::commit_batch_stats(const Trace& tr) {
  for (std::size_t l = 0; l < enc_a_.size() && l < tr.enc_a.size(); ++l) {
    enc_a_[l].norm().update_running(params_, tr.enc_a[l].bn);
  }
  for (std::size_t l = 0; l < enc_b_.size() && l < tr.enc_b.size(); ++l) {
    enc_b_[l].norm().update_running(params_, tr.enc_b[l].bn);
  }
  for (std::size_t j = 0; j < dec_.size() && j < tr.dec.size(); ++j) {
    dec_[j].norm().update_running(params_, tr.dec[j].bn);
  }
}

template class Enhancer<float>;
template class Enhancer<double>;

}  // namespace shenh::nn
