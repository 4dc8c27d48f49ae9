#pragma once

#include <cstdint>
#include <vector>

#include "shenh/nn/params.hpp"

namespace shenh::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers follow the parameter order of
/// the set they were created for.
template <class S>
class Adam {
 public:
  Adam(const ParameterSet<S>& params, AdamConfig config = {});

  void step(ParameterSet<S>& params);

  AdamConfig& config() { return config_; }
  const AdamConfig& config() const { return config_; }
  std::uint64_t steps() const { return steps_; }
  void set_steps(std::uint64_t steps) { steps_ = steps; }
  std::vector<std::vector<S>>& first_moment() { return m_; }
  std::vector<std::vector<S>>& second_moment() { return v_; }
  const std::vector<std::vector<S>>& first_moment() const { return m_; }
  const std::vector<std::vector<S>>& second_moment() const { return v_; }

 private:
  AdamConfig config_;
  std::uint64_t steps_ = 0;
  std::vector<std::vector<S>> m_;
  std::vector<std::vector<S>> v_;
};

/// Halves the rate once two consecutive epochs fail to improve on the best
/// validation loss seen so far; the miss counter then starts over.
class LrScheduler {
 public:
  explicit LrScheduler(int patience_epochs = 2, double factor = 0.5)
      : patience_(patience_epochs), factor_(factor) {}

  /// Records one epoch and returns the rate to use next.
  double observe(double validation_loss, double current_lr);

  double best() const { return best_; }
  int misses() const { return misses_; }
  bool has_best() const { return has_best_; }
  void restore(bool has_best, double best, int misses) {
    has_best_ = has_best;
    best_ = best;
    misses_ = misses;
  }

 private:
  int patience_;
  double factor_;
  bool has_best_ = false;
  double best_ = 0.0;
  int misses_ = 0;
};

/// Replays `history` through a fresh scheduler starting at `initial_lr`.
double lr_from_history(const std::vector<double>& history, double initial_lr);

}  // namespace shenh::nn
