#include "tissuefield/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "tissuefield/errors.hpp"

namespace tissuefield {

Adam::Adam(const std::vector<std::size_t>& block_sizes, AdamSettings settings) : settings_(settings) {
  for (std::size_t n : block_sizes) {
    m_.emplace_back(n, 0.0f);
    v_.emplace_back(n, 0.0f);
  }
}

void Adam::step(std::span<const std::span<float>> params, std::span<const std::span<float>> grads,
                double learning_rate) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw InvalidArgument("optimizer block count mismatch");
  }
  ++steps_;
  const float b1 = static_cast<float>(settings_.beta1);
  const float b2 = static_cast<float>(settings_.beta2);
  const double c1 = 1.0 - std::pow(settings_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(settings_.beta2, static_cast<double>(steps_));
  const float step_size = static_cast<float>(learning_rate * std::sqrt(c2) / c1);
  const float eps = static_cast<float>(settings_.epsilon * std::sqrt(c2));
  for (std::size_t b = 0; b < m_.size(); ++b) {
    if (params[b].size() != m_[b].size() || grads[b].size() != m_[b].size()) {
      throw InvalidArgument("optimizer block size mismatch");
    }
    float* p = params[b].data();
    const float* g = grads[b].data();
    float* m = m_[b].data();
    float* v = v_[b].data();
    const std::size_t n = m_[b].size();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + (1.0f - b1) * g[i];
      v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
      p[i] -= step_size * m[i] / (std::sqrt(v[i]) + eps);
    }
  }
}

double exponential_learning_rate(double start, double end, long iter, long total) {
  if (total <= 0) return start;
  const double frac = std::clamp(static_cast<double>(iter) / static_cast<double>(total), 0.0, 1.0);
  return start * std::pow(end / start, frac);
}

}  // namespace tissuefield
