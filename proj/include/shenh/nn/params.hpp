#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace shenh::nn {

/// Named tensor with a gradient buffer of the same size.
template <class S>
struct Param {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<S> value;
  std::vector<S> grad;

  std::size_t size() const { return value.size(); }
};

/// Trainable parameters plus non-trainable buffers (batch-norm running
/// statistics). Index handles stay valid for the lifetime of the set.
template <class S>
class ParameterSet {
 public:
  std::size_t add(std::string name, std::vector<std::size_t> shape, S fill = S(0)) {
    return add_to(params_, std::move(name), std::move(shape), fill, true);
  }
  std::size_t add_buffer(std::string name, std::vector<std::size_t> shape, S fill = S(0)) {
    return add_to(buffers_, std::move(name), std::move(shape), fill, false);
  }

  Param<S>& operator[](std::size_t i) { return params_[i]; }
  const Param<S>& operator[](std::size_t i) const { return params_[i]; }
  Param<S>& buffer(std::size_t i) { return buffers_[i]; }
  const Param<S>& buffer(std::size_t i) const { return buffers_[i]; }

  std::span<const S> value(std::size_t i) const { return params_[i].value; }
  std::span<S> grad(std::size_t i) { return params_[i].grad; }

  std::size_t size() const { return params_.size(); }
  std::size_t buffer_count() const { return buffers_.size(); }
  std::vector<Param<S>>& params() { return params_; }
  const std::vector<Param<S>>& params() const { return params_; }
  std::vector<Param<S>>& buffers() { return buffers_; }
  const std::vector<Param<S>>& buffers() const { return buffers_; }

  std::size_t total_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), S(0));
  }

 private:
  static std::size_t add_to(std::vector<Param<S>>& list, std::string name,
                            std::vector<std::size_t> shape, S fill, bool with_grad) {
    const std::size_t n =
        std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    Param<S> p{std::move(name), std::move(shape), std::vector<S>(n, fill), {}};
    if (with_grad) p.grad.assign(n, S(0));
    list.push_back(std::move(p));
    return list.size() - 1;
  }

  std::vector<Param<S>> params_;
  std::vector<Param<S>> buffers_;
};

}  // namespace shenh::nn
