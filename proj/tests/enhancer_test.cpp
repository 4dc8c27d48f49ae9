#include <doctest.h>

#include <cmath>
#include <random>

#include "shenh/nn/enhancer.hpp"
#include "shenh/nn/layers.hpp"
#include "support.hpp"

using namespace shenh;
using namespace shenh::nn;
using namespace testing_support;

namespace {

template <class S>
Tensor3<S> randn_tensor(std::size_t t, std::size_t f, std::size_t c, std::uint64_t seed) {
  Tensor3<S> x(t, f, c);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  for (auto& v : x.data()) v = static_cast<S>(nd(rng));
  return x;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("inplace conv examples") {
  ParameterSet<double> ps;
  const InplaceConv<double> one(ps, "one", 1, 1, 5, false);
  CHECK(ps.total_count() == 6);
  for (auto& v : ps[one.weight_index()].value) v = 1.0;
  const Tensor3<double> ones(2, 7, 1, 1.0);
  const auto y = one.forward(ps, ones);
  const double want[] = {3, 4, 5, 5, 5, 4, 3};
  for (std::size_t f = 0; f < 7; ++f) CHECK(y.at(1, f, 0) == want[f]);

  ParameterSet<double> p2;
  const InplaceConv<double> id(p2, "id", 3, 3, 5, false);
  const InplaceConv<double> idt(p2, "idt", 3, 3, 5, true);
  for (std::size_t c = 0; c < 3; ++c) {
    p2[id.weight_index()].value[(c * 5 + 2) * 3 + c] = 1.0;
    p2[idt.weight_index()].value[(c * 5 + 2) * 3 + c] = 1.0;
  }
  const auto x = randn_tensor<double>(3, 11, 3, 1);
  const auto yi = id.forward(p2, x);
  const auto yt = idt.forward(p2, x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(yi.data()[i] == x.data()[i]);
    CHECK(yt.data()[i] == x.data()[i]);
  }
  CHECK_THROWS(id.forward(p2, randn_tensor<double>(3, 11, 2, 1)));
}

TEST_CASE("transposed conv is the adjoint of the plain conv") {
  for (auto [cin, cout] : {std::pair<std::size_t, std::size_t>{4, 7}, {32, 16}, {1, 1}}) {
    ParameterSet<float> ps;
    const InplaceConv<float> fwd(ps, "a", cin, cout, 5, false, false);
    const InplaceConv<float> adj(ps, "b", cout, cin, 5, true, false);
    std::mt19937_64 rng(cin);
    init_conv(ps, fwd, rng);
    ps[adj.weight_index()].value = ps[fwd.weight_index()].value;
    const auto x = randn_tensor<float>(5, 19, cin, 2);
    const auto y = randn_tensor<float>(5, 19, cout, 3);
    const auto ax = fwd.forward(ps, x);
    const auto aty = adj.forward(ps, y);
    CHECK(aty.frames() == 5);
    CHECK(aty.bins() == 19);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < ax.size(); ++i) lhs += double(ax.data()[i]) * y.data()[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += double(x.data()[i]) * aty.data()[i];
    CHECK(std::abs(lhs - rhs) <= 1e-5 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("GLU block with a zeroed gate halves the linear branch") {
  ParameterSet<double> ps;
  const GluBlock<double> g(ps, "g", 3, 4, 5, false, 0.9, 1e-5);
  std::mt19937_64 rng(4);
  init_conv(ps, g.linear(), rng);
  const Batch<double> x{randn_tensor<double>(4, 9, 3, 5), randn_tensor<double>(4, 9, 3, 6)};
  typename GluBlock<double>::Cache cache;
  const auto y = g.forward(ps, x, Mode::train, &cache);
  for (const auto& t : cache.gate) {
    for (double v : t.data()) CHECK(v == 0.5);
  }
  // Oracle: batch-normalize 0.5 * linear(x) per channel, then ELU.
  std::vector<double> mean(4, 0.0), var(4, 0.0);
  std::size_t n = 0;
  std::vector<Tensor3<double>> pre;
  for (const auto& t : x) pre.push_back(g.linear().forward(ps, t));
  for (auto& t : pre) {
    for (auto& v : t.data()) v *= 0.5;
    for (std::size_t p = 0; p < t.frames() * t.bins(); ++p, ++n) {
      for (std::size_t c = 0; c < 4; ++c) mean[c] += t.data()[p * 4 + c];
    }
  }
  for (auto& m : mean) m /= n;
  for (auto& t : pre) {
    for (std::size_t p = 0; p < t.frames() * t.bins(); ++p) {
      for (std::size_t c = 0; c < 4; ++c) var[c] += std::pow(t.data()[p * 4 + c] - mean[c], 2);
    }
  }
  for (auto& v : var) v /= n;
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t p = 0; p < pre[b].frames() * pre[b].bins(); ++p) {
      for (std::size_t c = 0; c < 4; ++c) {
        const double z = (pre[b].data()[p * 4 + c] - mean[c]) / std::sqrt(var[c] + 1e-5);
        const double want = z > 0 ? z : std::expm1(z);
        CHECK(y[b].data()[p * 4 + c] == doctest::Approx(want).epsilon(1e-10));
        CHECK(y[b].data()[p * 4 + c] > -1.0);
      }
    }
  }

  ParameterSet<double> pz;
  const GluBlock<double> gz(pz, "z", 3, 4, 5, false, 0.9, 1e-5);
  const Batch<double> zeros{Tensor3<double>(2, 5, 3)};
  const auto yz = gz.forward(pz, zeros, Mode::train, nullptr);
  for (double v : yz[0].data()) CHECK(v == 0.0);
}

TEST_CASE("batch norm running statistics") {
  ParameterSet<double> ps;
  const BatchNorm<double> bn(ps, "bn", 1, 0.9, 1e-5);
  Batch<double> x{Tensor3<double>(1, 4, 1)};
  const double vals[] = {1, 2, 3, 6};
  for (std::size_t i = 0; i < 4; ++i) x[0].data()[i] = vals[i];
  typename BatchNorm<double>::Cache cache;
  bn.forward(ps, x, Mode::train, &cache);
  bn.update_running(ps, cache);
  // mean 3, unbiased variance 14/3
  CHECK(ps.buffer(0).value[0] == doctest::Approx(0.3));
  CHECK(ps.buffer(1).value[0] == doctest::Approx(0.9 + 0.1 * 14.0 / 3.0));
  const auto y = bn.forward(ps, x, Mode::eval, nullptr);
  CHECK(y[0].data()[0] == doctest::Approx((1 - 0.3) / std::sqrt(ps.buffer(1).value[0] + 1e-5)));
}

TEST_CASE("channel LSTM") {
  SUBCASE("zero input and zero biases stay at the origin") {
    ParameterSet<double> ps;
    const ChannelLstm<double> l(ps, "l", 3, 5, false);
    std::mt19937_64 rng(1);
    init_lstm(ps, l, rng);
    const Batch<double> x{Tensor3<double>(6, 4, 3)};
    const auto y = l.forward(ps, x, nullptr);
    for (double v : y[0].data()) CHECK(v == 0.0);
  }
  SUBCASE("scalar cell matches a hand evaluation") {
    ParameterSet<double> ps;
    const ChannelLstm<double> l(ps, "l", 1, 1, false);
    const auto& w = l.weights(false);
    ps[w.wx].value = {0.5, -0.3, 0.8, 0.2};
    ps[w.wh].value = {0.1, 0.4, -0.6, 0.7};
    ps[w.b].value = {0.05, 1.0, -0.1, 0.0};
    Batch<double> x{Tensor3<double>(2, 1, 1)};
    x[0].data()[0] = 0.9;
    x[0].data()[1] = -0.4;
    const auto y = l.forward(ps, x, nullptr);
    double h = 0.0, c = 0.0;
    for (std::size_t t = 0; t < 2; ++t) {
      const double in = x[0].data()[t];
      const double i = sigmoid(0.5 * in + 0.1 * h + 0.05);
      const double f = sigmoid(-0.3 * in + 0.4 * h + 1.0);
      const double g = std::tanh(0.8 * in - 0.6 * h - 0.1);
      const double o = sigmoid(0.2 * in + 0.7 * h);
      c = f * c + i * g;
      h = o * std::tanh(c);
      CHECK(y[0].data()[t] == doctest::Approx(h).epsilon(1e-12));
    }
  }
  SUBCASE("unidirectional output is causal") {
    ParameterSet<double> ps;
    const ChannelLstm<double> l(ps, "l", 2, 3, false);
    std::mt19937_64 rng(2);
    init_lstm(ps, l, rng);
    auto x = randn_tensor<double>(8, 5, 2, 3);
    const auto y0 = l.forward(ps, {x}, nullptr)[0];
    for (std::size_t f = 0; f < 5; ++f) x.at(5, f, 1) += 3.0;
    const auto y1 = l.forward(ps, {x}, nullptr)[0];
    for (std::size_t t = 0; t < 5; ++t) {
      for (std::size_t f = 0; f < 5; ++f) {
        for (std::size_t c = 0; c < 3; ++c) CHECK(y0.at(t, f, c) == y1.at(t, f, c));
      }
    }
    CHECK(y0.at(5, 0, 0) != y1.at(5, 0, 0));
  }
}

TEST_CASE("enhancer forward contract") {
  for (Variant v : {Variant::parallel, Variant::serial}) {
    auto c = tiny_config(v);
    c.encoder_blocks = 2;
    c.decoder_blocks = 3;
    Enhancer<float> m(c, 7);
    std::mt19937_64 rng(1);
    const auto in = random_input<float>(c, 9, rng);
    const auto y = m.forward_one(in);
    CHECK(y.frames() == 9);
    CHECK(y.bins() == 17);
    CHECK(y.channels() == 2);
    const auto y2 = m.forward_one(in);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.data()[i] == y2.data()[i]);

    Enhancer<float> same(c, 7);
    for (std::size_t p = 0; p < m.params().size(); ++p) {
      CHECK(m.params()[p].value == same.params()[p].value);
    }
  }
  const auto c = tiny_config(Variant::parallel);
  Enhancer<float> m(c, 1);
  std::mt19937_64 rng(2);
  auto serial_in = random_input<float>(tiny_config(Variant::serial), 4, rng);
  CHECK_THROWS(m.forward_one(serial_in));
  auto wrong = random_input<float>(c, 4, rng);
  wrong.sht = Tensor3<float>(4, 17, 6);
  CHECK_THROWS(m.forward_one(wrong));
}

TEST_CASE("output stays finite with a silenced SHT encoder and saturated gates") {
  auto c = tiny_config(Variant::parallel);
  c.encoder_blocks = 2;
  Enhancer<float> m(c, 3);
  for (auto& p : m.params().params()) {
    if (p.name.rfind("enc_sht", 0) == 0 && p.name.find(".weight") != std::string::npos) {
      std::fill(p.value.begin(), p.value.end(), 0.0f);
    }
    if (p.name.find(".gate.bias") != std::string::npos) {
      std::fill(p.value.begin(), p.value.end(), 80.0f);
    }
  }
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    auto in = random_input<float>(c, 7, rng);
    for (auto& v : in.stft.data()) v *= 1e3f;
    for (float v : m.forward_one(in).data()) CHECK(std::isfinite(v));
  }
}

TEST_CASE("whole model is causal in evaluation mode") {
  auto c = tiny_config(Variant::parallel);
  c.encoder_blocks = 2;
  c.decoder_blocks = 2;
  Enhancer<double> m(c, 5);
  std::mt19937_64 rng(3);
  auto in = random_input<double>(c, 10, rng);
  const auto y0 = m.forward_one(in);
  for (std::size_t f = 0; f < 17; ++f) in.sht.at(6, f, 3) += 1.0;
  const auto y1 = m.forward_one(in);
  for (std::size_t t = 0; t < 6; ++t) {
    for (std::size_t f = 0; f < 17; ++f) {
      CHECK(y0.at(t, f, 0) == y1.at(t, f, 0));
      CHECK(y0.at(t, f, 1) == y1.at(t, f, 1));
    }
  }
}

TEST_CASE("every layer preserves frames and bins") {
  auto c = tiny_config(Variant::parallel);
  c.encoder_blocks = 3;
  c.decoder_blocks = 4;
  Enhancer<float> m(c, 2);
  std::mt19937_64 rng(4);
  const std::vector<ModelInput<float>> batch{random_input<float>(c, 5, rng)};
  typename Enhancer<float>::Trace trace;
  m.forward(batch, Mode::train, &trace);
  auto check = [](const Batch<float>& b) {
    for (const auto& t : b) {
      CHECK(t.frames() == 5);
      CHECK(t.bins() == 17);
    }
  };
  for (const auto& b : trace.enc_out) check(b);
  for (const auto& b : trace.dec_in) check(b);
  check(trace.lstm_out);
  check(trace.head_in);
}

TEST_CASE("analytic gradients match central differences") {
  for (Variant v : {Variant::parallel, Variant::serial}) {
    auto c = tiny_config(v);
    Enhancer<double> m(c, 11);
    const auto stft = tiny_stft();
    const auto batch = random_batch<double>(c, stft, 2, 6, 21);
    const auto r = gradient_check(m, batch, stft);
    MESSAGE("max relative error " << r.max_rel_error << " over " << r.checked << " entries");
    CHECK(r.max_rel_error <= 1e-3);
  }
  auto c = tiny_config(Variant::parallel);
  c.direction = Direction::bidirectional;
  Enhancer<double> m(c, 12);
  const auto batch = random_batch<double>(c, tiny_stft(), 2, 6, 22);
  CHECK(gradient_check(m, batch, tiny_stft()).max_rel_error <= 1e-3);
}

TEST_CASE("parameter and FLOP accounting") {
  const auto par = count_params_flops(EnhancerConfig::full_size(Variant::parallel));
  CHECK(par.params >= 0.8 * 1.82e6);
  CHECK(par.params <= 1.2 * 1.82e6);
  CHECK(par.flops_per_second == doctest::Approx(2 * par.macs_per_bin_frame * 257 * 62.5));

  EnhancerConfig empty;
  empty.encoder_blocks = 0;
  empty.decoder_blocks = 0;
  empty.recurrent_hidden = 0;
  CHECK(count_params_flops(empty).params == 0);
  CHECK_THROWS(empty.validate());

  // Analytic count agrees with the parameters the model actually allocates.
  for (Variant v : {Variant::parallel, Variant::serial}) {
    auto c = tiny_config(v);
    c.encoder_blocks = 2;
    c.decoder_blocks = 3;
    const Enhancer<float> m(c, 1);
    CHECK(count_params_flops(c).params == m.params().total_count());
  }
  auto bad = tiny_config();
  bad.kernel_freq = 4;
  CHECK_THROWS(bad.validate());
}
