#include "shenh/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace shenh::nn {

template <class S>
Adam<S>::Adam(const ParameterSet<S>& params, AdamConfig config) : config_(config) {
  for (const auto& p : params.params()) {
    m_.emplace_back(p.size(), S(0));
    v_.emplace_back(p.size(), S(0));
  }
}

template <class S>
void Adam<S>::step(ParameterSet<S>& params) {
  if (params.size() != m_.size()) throw std::logic_error("optimizer built for another parameter set");
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  const S b1 = static_cast<S>(config_.beta1);
  const S b2 = static_cast<S>(config_.beta2);
  const S step = static_cast<S>(config_.lr / c1);
  const S inv_c2 = static_cast<S>(1.0 / c2);
  const S eps = static_cast<S>(config_.eps);
  if (config_.lr == 0.0) {
    // Moments still advance so a later nonzero rate sees the same state.
    for (std::size_t k = 0; k < params.size(); ++k) {
      const auto& g = params[k].grad;
      for (std::size_t i = 0; i < g.size(); ++i) {
        m_[k][i] = b1 * m_[k][i] + (S(1) - b1) * g[i];
        v_[k][i] = b2 * v_[k][i] + (S(1) - b2) * g[i] * g[i];
      }
    }
    return;
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const S g = p.grad[i];
      m[i] = b1 * m[i] + (S(1) - b1) * g;
      v[i] = b2 * v[i] + (S(1) - b2) * g * g;
      p.value[i] -= step * m[i] / (std::sqrt(v[i] * inv_c2) + eps);
    }
  }
}

double LrScheduler::observe(double loss, double lr) {
  if (!has_best_ || loss < best_) {
    has_best_ = true;
    best_ = loss;
    misses_ = 0;
    return lr;
  }
  ++misses_;
  if (misses_ >= patience_) {
    misses_ = 0;
    return lr * factor_;
  }
  return lr;
}

double lr_from_history(const std::vector<double>& history, double initial_lr) {
  if (history.empty()) throw std::invalid_argument("learning-rate schedule needs at least one epoch");
  LrScheduler s;
  double lr = initial_lr;
  for (double l : history) lr = s.observe(l, lr);
  return lr;
}

template class Adam<float>;
template class Adam<double>;

}  // namespace shenh::nn
