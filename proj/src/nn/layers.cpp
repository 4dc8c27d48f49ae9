#include "shenh/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "shenh/kernels.hpp"

namespace shenh::nn {

namespace {

template <class S>
inline S sigmoid(S x) {
  return S(1) / (S(1) + std::exp(-x));
}

// libm tanh is several times slower than exp here and dominates the LSTM.
template <class S>
inline S tanh_exp(S x) {
  return S(1) - S(2) / (std::exp(S(2) * x) + S(1));
}

kernels::ConvShape make_shape(std::size_t frames, std::size_t bins, std::size_t in,
                              std::size_t out, std::size_t taps) {
  kernels::ConvShape s;
  s.frames = frames;
  s.bins = bins;
  s.in_channels = in;
  s.out_channels = out;
  s.taps = taps;
  return s;
}

// Fixed number of bin chunks so gradient reductions do not depend on the
// thread count.
constexpr std::size_t kReductionChunks = 8;

}  // namespace

// ---------------------------------------------------------------- InplaceConv

template <class S>
InplaceConv<S>::InplaceConv(ParameterSet<S>& params, const std::string& name,
                            std::size_t in_channels, std::size_t out_channels, std::size_t taps,
                            bool transposed, bool bias)
    : in_(in_channels), out_(out_channels), taps_(taps), transposed_(transposed), has_bias_(bias) {
  if (taps % 2 == 0) throw std::invalid_argument("conv taps must be odd");
  if (transposed) {
    weight_ = params.add(name + ".weight", {in_channels, taps, out_channels});
  } else {
    weight_ = params.add(name + ".weight", {out_channels, taps, in_channels});
  }
  if (bias) bias_ = params.add(name + ".bias", {out_channels});
}

template <class S>
Tensor3<S> InplaceConv<S>::forward(const ParameterSet<S>& params, const Tensor3<S>& x) const {
  if (x.channels() != in_) {
    throw std::invalid_argument("conv expects " + std::to_string(in_) + " channels, got " +
                                std::to_string(x.channels()));
  }
  Tensor3<S> y(x.frames(), x.bins(), out_);
  const std::span<const S> no_bias;
  const auto bias = has_bias_ ? params.value(bias_) : no_bias;
  if (!transposed_) {
    kernels::conv_freq_forward<S>(make_shape(x.frames(), x.bins(), in_, out_, taps_), x.data(),
                                  params.value(weight_), bias, y.data());
  } else {
    kernels::conv_freq_backward_data<S>(make_shape(x.frames(), x.bins(), out_, in_, taps_),
                                        x.data(), params.value(weight_), y.data());
    if (has_bias_) {
      auto d = y.data();
      for (std::size_t p = 0; p < x.frames() * x.bins(); ++p) {
        for (std::size_t o = 0; o < out_; ++o) d[p * out_ + o] += bias[o];
      }
    }
  }
  return y;
}

template <class S>
Tensor3<S> InplaceConv<S>::backward(ParameterSet<S>& params, const Tensor3<S>& x,
                                    const Tensor3<S>& gy) const {
  Tensor3<S> gx(x.frames(), x.bins(), in_);
  const std::span<S> no_grad;
  auto gb = has_bias_ ? params.grad(bias_) : no_grad;
  if (!transposed_) {
    const auto shape = make_shape(x.frames(), x.bins(), in_, out_, taps_);
    kernels::conv_freq_backward_data<S>(shape, gy.data(), params.value(weight_), gx.data());
    kernels::conv_freq_backward_weight<S>(shape, x.data(), gy.data(), params.grad(weight_), gb);
  } else {
    const auto shape = make_shape(x.frames(), x.bins(), out_, in_, taps_);
    kernels::conv_freq_forward<S>(shape, gy.data(), params.value(weight_), {}, gx.data());
    kernels::conv_freq_backward_weight<S>(shape, gy.data(), x.data(), params.grad(weight_), {});
    if (has_bias_) {
      const auto g = gy.data();
      for (std::size_t p = 0; p < x.frames() * x.bins(); ++p) {
        for (std::size_t o = 0; o < out_; ++o) gb[o] += g[p * out_ + o];
      }
    }
  }
  return gx;
}

// ------------------------------------------------------------------ BatchNorm

template <class S>
BatchNorm<S>::BatchNorm(ParameterSet<S>& params, const std::string& name, std::size_t channels,
                        double momentum, double eps)
    : channels_(channels), momentum_(momentum), eps_(eps) {
  gamma_ = params.add(name + ".gamma", {channels}, S(1));
  beta_ = params.add(name + ".beta", {channels}, S(0));
  running_mean_ = params.add_buffer(name + ".running_mean", {channels}, S(0));
  running_var_ = params.add_buffer(name + ".running_var", {channels}, S(1));
}

template <class S>
Batch<S> BatchNorm<S>::forward(const ParameterSet<S>& params, const Batch<S>& x, Mode mode,
                               Cache* cache) const {
  const std::size_t C = channels_;
  std::vector<double> mean(C, 0.0);
  std::vector<double> var(C, 0.0);
  std::size_t count = 0;
  for (const auto& t : x) {
    if (t.channels() != C) throw std::invalid_argument("batch norm channel mismatch");
    count += t.frames() * t.bins();
  }

  if (mode == Mode::train) {
    if (count < 2) throw std::invalid_argument("batch norm needs at least two points in training");
    for (const auto& t : x) {
      const auto d = t.data();
      for (std::size_t p = 0; p < t.frames() * t.bins(); ++p) {
        for (std::size_t c = 0; c < C; ++c) mean[c] += d[p * C + c];
      }
    }
    for (auto& m : mean) m /= static_cast<double>(count);
    for (const auto& t : x) {
      const auto d = t.data();
      for (std::size_t p = 0; p < t.frames() * t.bins(); ++p) {
        for (std::size_t c = 0; c < C; ++c) {
          const double e = d[p * C + c] - mean[c];
          var[c] += e * e;
        }
      }
    }
    for (auto& v : var) v /= static_cast<double>(count);
  } else {
    const auto& rm = params.buffer(running_mean_).value;
    const auto& rv = params.buffer(running_var_).value;
    for (std::size_t c = 0; c < C; ++c) {
      mean[c] = rm[c];
      var[c] = rv[c];
    }
  }

  std::vector<S> inv_std(C);
  for (std::size_t c = 0; c < C; ++c) inv_std[c] = static_cast<S>(1.0 / std::sqrt(var[c] + eps_));
  const auto gamma = params.value(gamma_);
  const auto beta = params.value(beta_);

  Batch<S> y;
  Batch<S> xhat;
  y.reserve(x.size());
  for (const auto& t : x) {
    Tensor3<S> out(t.frames(), t.bins(), C);
    Tensor3<S> norm(t.frames(), t.bins(), C);
    const auto d = t.data();
    auto o = out.data();
    auto n = norm.data();
    for (std::size_t p = 0; p < t.frames() * t.bins(); ++p) {
      for (std::size_t c = 0; c < C; ++c) {
        const S h = (d[p * C + c] - static_cast<S>(mean[c])) * inv_std[c];
        n[p * C + c] = h;
        o[p * C + c] = gamma[c] * h + beta[c];
      }
    }
    y.push_back(std::move(out));
    if (cache) xhat.push_back(std::move(norm));
  }

  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = inv_std;
    cache->batch_mean.clear();
    cache->batch_var.clear();
    if (mode == Mode::train) {
      cache->batch_mean = mean;
      cache->batch_var = var;
      for (auto& v : cache->batch_var) v *= static_cast<double>(count) / static_cast<double>(count - 1);
    }
  }
  return y;
}

template <class S>
Batch<S> BatchNorm<S>::backward(ParameterSet<S>& params, const Batch<S>& gy,
                                const Cache& cache) const {
  const std::size_t C = channels_;
  const bool training = !cache.batch_mean.empty();
  const auto gamma = params.value(gamma_);
  auto ggamma = params.grad(gamma_);
  auto gbeta = params.grad(beta_);

  std::vector<double> sum_g(C, 0.0);
  std::vector<double> sum_gx(C, 0.0);
  std::size_t count = 0;
  for (std::size_t b = 0; b < gy.size(); ++b) {
    const auto g = gy[b].data();
    const auto h = cache.xhat[b].data();
    const std::size_t points = gy[b].frames() * gy[b].bins();
    count += points;
    for (std::size_t p = 0; p < points; ++p) {
      for (std::size_t c = 0; c < C; ++c) {
        sum_g[c] += g[p * C + c];
        sum_gx[c] += static_cast<double>(g[p * C + c]) * h[p * C + c];
      }
    }
  }
  for (std::size_t c = 0; c < C; ++c) {
    ggamma[c] += static_cast<S>(sum_gx[c]);
    gbeta[c] += static_cast<S>(sum_g[c]);
  }

  Batch<S> gx;
  gx.reserve(gy.size());
  const double n = static_cast<double>(count);
  for (std::size_t b = 0; b < gy.size(); ++b) {
    Tensor3<S> out(gy[b].frames(), gy[b].bins(), C);
    const auto g = gy[b].data();
    const auto h = cache.xhat[b].data();
    auto o = out.data();
    const std::size_t points = gy[b].frames() * gy[b].bins();
    for (std::size_t p = 0; p < points; ++p) {
      for (std::size_t c = 0; c < C; ++c) {
        const double scale = static_cast<double>(gamma[c]) * cache.inv_std[c];
        double v = g[p * C + c];
        if (training) v -= (sum_g[c] + h[p * C + c] * sum_gx[c]) / n;
        o[p * C + c] = static_cast<S>(scale * v);
      }
    }
    gx.push_back(std::move(out));
  }
  return gx;
}

template <class S>
void BatchNorm<S>::update_running(ParameterSet<S>& params, const Cache& cache) const {
  if (cache.batch_mean.empty()) return;
  auto& rm = params.buffer(running_mean_).value;
  auto& rv = params.buffer(running_var_).value;
  for (std::size_t c = 0; c < channels_; ++c) {
    rm[c] = static_cast<S>(momentum_ * rm[c] + (1.0 - momentum_) * cache.batch_mean[c]);
    rv[c] = static_cast<S>(momentum_ * rv[c] + (1.0 - momentum_) * cache.batch_var[c]);
  }
}

// ------------------------------------------------------------------- GluBlock

template <class S>
GluBlock<S>::GluBlock(ParameterSet<S>& params, const std::string& name, std::size_t in_channels,
                      std::size_t out_channels, std::size_t taps, bool transposed,
                      double bn_momentum, double bn_eps)
    : linear_(params, name + ".linear", in_channels, out_channels, taps, transposed),
      gate_(params, name + ".gate", in_channels, out_channels, taps, transposed),
      norm_(params, name + ".bn", out_channels, bn_momentum, bn_eps) {}

template <class S>
Batch<S> GluBlock<S>::forward(const ParameterSet<S>& params, const Batch<S>& x, Mode mode,
                              Cache* cache) const {
  Batch<S> linear;
  Batch<S> gate;
  Batch<S> product;
  for (const auto& t : x) {
    Tensor3<S> a = linear_.forward(params, t);
    Tensor3<S> g = gate_.forward(params, t);
    Tensor3<S> z(a.frames(), a.bins(), a.channels());
    auto ad = a.data();
    auto gd = g.data();
    auto zd = z.data();
    for (std::size_t i = 0; i < zd.size(); ++i) {
      gd[i] = sigmoid(gd[i]);
      zd[i] = ad[i] * gd[i];
    }
    product.push_back(std::move(z));
    if (cache) {
      linear.push_back(std::move(a));
      gate.push_back(std::move(g));
    }
  }

  Batch<S> y = norm_.forward(params, product, mode, cache ? &cache->bn : nullptr);
  for (auto& t : y) {
    for (auto& v : t.data()) v = v > S(0) ? v : std::expm1(v);
  }
  if (cache) {
    cache->linear = std::move(linear);
    cache->gate = std::move(gate);
    cache->out = y;
  }
  return y;
}

template <class S>
Batch<S> GluBlock<S>::backward(ParameterSet<S>& params, const Batch<S>& x, const Batch<S>& gy,
                               const Cache& cache) const {
  Batch<S> gn;
  gn.reserve(gy.size());
  for (std::size_t b = 0; b < gy.size(); ++b) {
    Tensor3<S> t = gy[b];
    const auto y = cache.out[b].data();
    auto d = t.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!(y[i] > S(0))) d[i] *= y[i] + S(1);
    }
    gn.push_back(std::move(t));
  }
  const Batch<S> gz = norm_.backward(params, gn, cache.bn);

  Batch<S> gx;
  gx.reserve(x.size());
  for (std::size_t b = 0; b < x.size(); ++b) {
    const auto a = cache.linear[b].data();
    const auto g = cache.gate[b].data();
    const auto z = gz[b].data();
    Tensor3<S> ga(gz[b].frames(), gz[b].bins(), gz[b].channels());
    Tensor3<S> gg(gz[b].frames(), gz[b].bins(), gz[b].channels());
    auto gad = ga.data();
    auto ggd = gg.data();
    for (std::size_t i = 0; i < z.size(); ++i) {
      gad[i] = z[i] * g[i];
      ggd[i] = z[i] * a[i] * g[i] * (S(1) - g[i]);
    }
    Tensor3<S> dx = linear_.backward(params, x[b], ga);
    const Tensor3<S> dx2 = gate_.backward(params, x[b], gg);
    auto d = dx.data();
    const auto d2 = dx2.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += d2[i];
    gx.push_back(std::move(dx));
  }
  return gx;
}

// ---------------------------------------------------------------- ChannelLstm

template <class S>
ChannelLstm<S>::ChannelLstm(ParameterSet<S>& params, const std::string& name,
                            std::size_t in_channels, std::size_t hidden, bool bidirectional)
    : in_(in_channels), hidden_(hidden), bidirectional_(bidirectional) {
  const std::size_t g = 4 * hidden;
  fwd_.wx = params.add(name + ".weight_ih", {g, in_channels});
  fwd_.wh = params.add(name + ".weight_hh", {g, hidden});
  fwd_.b = params.add(name + ".bias", {g});
  if (bidirectional) {
    bwd_.wx = params.add(name + ".weight_ih_reverse", {g, in_channels});
    bwd_.wh = params.add(name + ".weight_hh_reverse", {g, hidden});
    bwd_.b = params.add(name + ".bias_reverse", {g});
  }
}

namespace {

template <class S>
void lstm_run(const ParameterSet<S>& params, const typename ChannelLstm<S>::Weights& w,
              std::size_t in, std::size_t H, bool reverse, const Tensor3<S>& x,
              typename ChannelLstm<S>::DirectionCache& out, std::size_t item) {
  const std::size_t T = x.frames();
  const std::size_t F = x.bins();
  const std::size_t G = 4 * H;
  const auto wx = params.value(w.wx);
  const auto wh = params.value(w.wh);
  const auto bias = params.value(w.b);
  auto& gates = out.gates[item];
  auto& cell = out.cell[item];
  auto& hidden = out.hidden[item];
  gates = Tensor3<S>(T, F, G);
  cell = Tensor3<S>(T, F, H);
  hidden = Tensor3<S>(T, F, H);

  // Transposed kernels: the inner loops run over the 4H gate rows.
  std::vector<S> wxt(G * in);
  std::vector<S> wht(G * H);
  for (std::size_t r = 0; r < G; ++r) {
    for (std::size_t i = 0; i < in; ++i) wxt[i * G + r] = wx[r * in + i];
    for (std::size_t j = 0; j < H; ++j) wht[j * G + r] = wh[r * H + j];
  }

  const std::ptrdiff_t bins = static_cast<std::ptrdiff_t>(F);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t fi = 0; fi < bins; ++fi) {
    const std::size_t f = static_cast<std::size_t>(fi);
    std::vector<S> z(G);
    std::vector<S> h_prev(H, S(0));
    std::vector<S> c_prev(H, S(0));
    for (std::size_t step = 0; step < T; ++step) {
      const std::size_t t = reverse ? T - 1 - step : step;
      const S* xt = &x.data()[(t * F + f) * in];
      std::copy(bias.begin(), bias.end(), z.begin());
      for (std::size_t i = 0; i < in; ++i) {
        const S xv = xt[i];
        const S* wr = wxt.data() + i * G;
#pragma omp simd
        for (std::size_t r = 0; r < G; ++r) z[r] += xv * wr[r];
      }
      for (std::size_t j = 0; j < H; ++j) {
        const S hv = h_prev[j];
        const S* wr = wht.data() + j * G;
#pragma omp simd
        for (std::size_t r = 0; r < G; ++r) z[r] += hv * wr[r];
      }
      S* gt = &gates.data()[(t * F + f) * G];
      S* ct = &cell.data()[(t * F + f) * H];
      S* ht = &hidden.data()[(t * F + f) * H];
      for (std::size_t j = 0; j < H; ++j) {
        const S ig = sigmoid(z[j]);
        const S fg = sigmoid(z[H + j]);
        const S gg = tanh_exp(z[2 * H + j]);
        const S og = sigmoid(z[3 * H + j]);
        gt[j] = ig;
        gt[H + j] = fg;
        gt[2 * H + j] = gg;
        gt[3 * H + j] = og;
        const S c = fg * c_prev[j] + ig * gg;
        ct[j] = c;
        ht[j] = og * tanh_exp(c);
      }
      std::copy(ht, ht + H, h_prev.begin());
      std::copy(ct, ct + H, c_prev.begin());
    }
  }
}

template <class S>
void lstm_backprop(ParameterSet<S>& params, const typename ChannelLstm<S>::Weights& w,
                   std::size_t in, std::size_t H, bool reverse, const Tensor3<S>& x,
                   const Tensor3<S>& gy, std::size_t gy_offset, std::size_t gy_width,
                   const typename ChannelLstm<S>::DirectionCache& cache, std::size_t item,
                   Tensor3<S>& gx) {
  const std::size_t T = x.frames();
  const std::size_t F = x.bins();
  const std::size_t G = 4 * H;
  const auto wx = params.value(w.wx);
  const auto wh = params.value(w.wh);
  const auto& gates = cache.gates[item];
  const auto& cell = cache.cell[item];
  const auto& hidden = cache.hidden[item];

  const std::size_t chunks = std::min(F, kReductionChunks);
  std::vector<std::vector<S>> gwx(chunks, std::vector<S>(G * in, S(0)));
  std::vector<std::vector<S>> gwh(chunks, std::vector<S>(G * H, S(0)));
  std::vector<std::vector<S>> gb(chunks, std::vector<S>(G, S(0)));

  const std::ptrdiff_t nchunks = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < nchunks; ++ci) {
    const std::size_t chunk = static_cast<std::size_t>(ci);
    const std::size_t f_begin = F * chunk / chunks;
    const std::size_t f_end = F * (chunk + 1) / chunks;
    auto& lwx = gwx[chunk];
    auto& lwh = gwh[chunk];
    auto& lb = gb[chunk];
    std::vector<S> dz(G);
    std::vector<S> dh_next(H);
    std::vector<S> dc_next(H);
    for (std::size_t f = f_begin; f < f_end; ++f) {
      std::fill(dh_next.begin(), dh_next.end(), S(0));
      std::fill(dc_next.begin(), dc_next.end(), S(0));
      for (std::size_t step = T; step-- > 0;) {
        const std::size_t t = reverse ? T - 1 - step : step;
        const bool has_prev = step > 0;
        const std::size_t tp = reverse ? t + 1 : t - 1;  // valid only if has_prev
        const S* gt = &gates.data()[(t * F + f) * G];
        const S* ct = &cell.data()[(t * F + f) * H];
        const S* gyt = &gy.data()[(t * F + f) * gy_width + gy_offset];
        for (std::size_t j = 0; j < H; ++j) {
          const S ig = gt[j];
          const S fg = gt[H + j];
          const S gg = gt[2 * H + j];
          const S og = gt[3 * H + j];
          const S tc = tanh_exp(ct[j]);
          const S dh = gyt[j] + dh_next[j];
          const S dc = dh * og * (S(1) - tc * tc) + dc_next[j];
          const S c_prev = has_prev ? cell.data()[(tp * F + f) * H + j] : S(0);
          dz[j] = dc * gg * ig * (S(1) - ig);
          dz[H + j] = dc * c_prev * fg * (S(1) - fg);
          dz[2 * H + j] = dc * ig * (S(1) - gg * gg);
          dz[3 * H + j] = dh * tc * og * (S(1) - og);
          dc_next[j] = dc * fg;
        }
        const S* xt = &x.data()[(t * F + f) * in];
        S* gxt = &gx.data()[(t * F + f) * in];
        std::fill(dh_next.begin(), dh_next.end(), S(0));
        for (std::size_t r = 0; r < G; ++r) {
          const S d = dz[r];
          lb[r] += d;
          S* lwr = lwx.data() + r * in;
          const S* wr = wx.data() + r * in;
          for (std::size_t i = 0; i < in; ++i) {
            lwr[i] += d * xt[i];
            gxt[i] += d * wr[i];
          }
          const S* whr = wh.data() + r * H;
          if (has_prev) {
            const S* hp = &hidden.data()[(tp * F + f) * H];
            S* lhr = lwh.data() + r * H;
            for (std::size_t j = 0; j < H; ++j) lhr[j] += d * hp[j];
          }
          for (std::size_t j = 0; j < H; ++j) dh_next[j] += d * whr[j];
        }
      }
    }
  }

  auto pwx = params.grad(w.wx);
  auto pwh = params.grad(w.wh);
  auto pb = params.grad(w.b);
  for (std::size_t c = 0; c < chunks; ++c) {
    for (std::size_t i = 0; i < pwx.size(); ++i) pwx[i] += gwx[c][i];
    for (std::size_t i = 0; i < pwh.size(); ++i) pwh[i] += gwh[c][i];
    for (std::size_t i = 0; i < pb.size(); ++i) pb[i] += gb[c][i];
  }
}

}  // namespace

template <class S>
Batch<S> ChannelLstm<S>::forward(const ParameterSet<S>& params, const Batch<S>& x,
                                 Cache* cache) const {
  Cache local;
  Cache& c = cache ? *cache : local;
  const std::size_t n = x.size();
  c.fwd.gates.resize(n);
  c.fwd.cell.resize(n);
  c.fwd.hidden.resize(n);
  if (bidirectional_) {
    c.bwd.gates.resize(n);
    c.bwd.cell.resize(n);
    c.bwd.hidden.resize(n);
  }
  Batch<S> y;
  y.reserve(n);
  for (std::size_t b = 0; b < n; ++b) {
    if (x[b].channels() != in_) throw std::invalid_argument("LSTM input width mismatch");
    lstm_run<S>(params, fwd_, in_, hidden_, false, x[b], c.fwd, b);
    if (!bidirectional_) {
      y.push_back(c.fwd.hidden[b]);
    } else {
      lstm_run<S>(params, bwd_, in_, hidden_, true, x[b], c.bwd, b);
      y.push_back(concat_channels(c.fwd.hidden[b], c.bwd.hidden[b]));
    }
  }
  return y;
}

template <class S>
Batch<S> ChannelLstm<S>::backward(ParameterSet<S>& params, const Batch<S>& x, const Batch<S>& gy,
                                  const Cache& cache) const {
  Batch<S> gx;
  gx.reserve(x.size());
  const std::size_t width = out_channels();
  for (std::size_t b = 0; b < x.size(); ++b) {
    Tensor3<S> g(x[b].frames(), x[b].bins(), in_);
    lstm_backprop<S>(params, fwd_, in_, hidden_, false, x[b], gy[b], 0, width, cache.fwd, b, g);
    if (bidirectional_) {
      lstm_backprop<S>(params, bwd_, in_, hidden_, true, x[b], gy[b], hidden_, width, cache.bwd,
                       b, g);
    }
    gx.push_back(std::move(g));
  }
  return gx;
}

// ---------------------------------------------------------------------- init

template <class S>
void init_conv(ParameterSet<S>& params, const InplaceConv<S>& conv, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(conv.fan_in()));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : params[conv.weight_index()].value) v = static_cast<S>(dist(rng));
}

template <class S>
void init_lstm(ParameterSet<S>& params, const ChannelLstm<S>& lstm, std::mt19937_64& rng) {
  const std::size_t H = lstm.hidden();
  const std::size_t in = lstm.in_channels();
  for (bool reverse : {false, true}) {
    if (reverse && lstm.out_channels() == H) break;
    const auto& w = lstm.weights(reverse);
    const double bound = std::sqrt(3.0 / static_cast<double>(in));
    std::uniform_real_distribution<double> uni(-bound, bound);
    for (auto& v : params[w.wx].value) v = static_cast<S>(uni(rng));

    // Orthonormal H x H block per gate (Gram-Schmidt on Gaussian rows).
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto& wh = params[w.wh].value;
    for (std::size_t gate = 0; gate < 4; ++gate) {
      std::vector<std::vector<double>> rows(H, std::vector<double>(H));
      for (std::size_t r = 0; r < H; ++r) {
        for (;;) {
          for (auto& v : rows[r]) v = gauss(rng);
          for (std::size_t k = 0; k < r; ++k) {
            double dot = 0.0;
            for (std::size_t j = 0; j < H; ++j) dot += rows[r][j] * rows[k][j];
            for (std::size_t j = 0; j < H; ++j) rows[r][j] -= dot * rows[k][j];
          }
          double norm = 0.0;
          for (double v : rows[r]) norm += v * v;
          norm = std::sqrt(norm);
          if (norm > 1e-6) {
            for (auto& v : rows[r]) v /= norm;
            break;
          }
        }
        for (std::size_t j = 0; j < H; ++j) {
          wh[(gate * H + r) * H + j] = static_cast<S>(rows[r][j]);
        }
      }
    }
  }
}

template class InplaceConv<float>;
template class InplaceConv<double>;
template class BatchNorm<float>;
template class BatchNorm<double>;
template class GluBlock<float>;
template class GluBlock<double>;
template class ChannelLstm<float>;
template class ChannelLstm<double>;
template void init_conv<float>(ParameterSet<float>&, const InplaceConv<float>&, std::mt19937_64&);
template void init_conv<double>(ParameterSet<double>&, const InplaceConv<double>&,
                                std::mt19937_64&);
template void init_lstm<float>(ParameterSet<float>&, const ChannelLstm<float>&, std::mt19937_64&);
template void init_lstm<double>(ParameterSet<double>&, const ChannelLstm<double>&,
                                std::mt19937_64&);

}  // namespace shenh::nn
