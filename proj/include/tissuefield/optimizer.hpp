#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tissuefield {

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam over a fixed list of parameter blocks.
class Adam {
 public:
  Adam() = default;
  Adam(const std::vector<std::size_t>& block_sizes, AdamSettings settings = {});

  void step(std::span<const std::span<float>> params, std::span<const std::span<float>> grads,
            double learning_rate);

  std::int64_t steps() const { return steps_; }
  std::vector<std::vector<float>>& first_moments() { return m_; }
  std::vector<std::vector<float>>& second_moments() { return v_; }
  const std::vector<std::vector<float>>& first_moments() const { return m_; }
  const std::vector<std::vector<float>>& second_moments() const { return v_; }
  void set_steps(std::int64_t steps) { steps_ = steps; }

 private:
  AdamSettings settings_;
  std::int64_t steps_ = 0;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
};

/// Exponential decay from ``start`` to ``end`` over ``total`` iterations.
double exponential_learning_rate(double start, double end, long iter, long total);

}  // namespace tissuefield
