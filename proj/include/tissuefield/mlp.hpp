#pragma once

// Batched multilayer perceptron with ReLU hidden layers, optional input
// skip connections and a linear output layer. Samples are columns.
//
// Alongside the usual backward pass it propagates forward-mode tangents
// (d output / d input along a set of directions) and backpropagates through
// them. Because ReLU' is piecewise constant the tangent pass is linear in
// the weights given the activation pattern, which makes the exact gradient of
// a Jacobian-based loss a first-order computation.

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace tissuefield {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

struct MlpLayout {
  int inputs = 0;
  int width = 0;
  int hidden_layers = 0;
  int outputs = 0;
  /// Hidden layer indices whose input is [previous activation; network input].
  std::vector<int> skips;

  bool has_skip(int layer) const;
  friend bool operator==(const MlpLayout&, const MlpLayout&) = default;
};

struct MlpInit {
  std::uint64_t seed = 0;
  /// Output weights are uniform in +-output_scale / sqrt(fan_in); 0 selects
  /// the Glorot bound.
  double output_scale = 0.0;
};

template <typename Scalar>
class Mlp {
 public:
  using Matrix = MatrixX<Scalar>;

  struct Cache {
    /// Input of every layer (after skip concatenation); size layers() .
    std::vector<Matrix> layer_inputs;
  };

  struct TangentCache {
    /// Tangent inputs of every layer, directions stacked along columns.
    std::vector<Matrix> layer_inputs;
    int directions = 0;
  };

  Mlp() = default;
  Mlp(const MlpLayout& layout, const MlpInit& init);

  const MlpLayout& layout() const { return layout_; }
  int layers() const { return layout_.hidden_layers + 1; }
  int layer_inputs(int layer) const;
  int layer_outputs(int layer) const;

  std::span<Scalar> parameters() { return params_; }
  std::span<const Scalar> parameters() const { return params_; }
  std::span<Scalar> gradients() { return grads_; }
  std::span<const Scalar> gradients() const { return grads_; }
  void zero_grad();

  /// ``cache`` may be null for inference.
  Matrix forward(const Matrix& input, Cache* cache) const;

  /// Accumulates parameter gradients; writes d loss / d input when requested.
  void backward(const Cache& cache, const Matrix& d_output, Matrix* d_input);

  /// Output tangents for input tangents stacked as ``directions`` blocks of
  /// N columns each. Requires the forward cache of the same batch.
  Matrix tangent_forward(const Cache& cache, const Matrix& input_tangents, int directions,
                         TangentCache* tangent_cache) const;

  /// Accumulates parameter gradients of a loss on the output tangents.
  void tangent_backward(const Cache& cache, const TangentCache& tangent_cache,
                        const Matrix& d_output_tangents);

  /// Naive triple-loop forward pass kept as a reference for the GEMM path.
  Matrix forward_reference(const Matrix& input) const;

 private:
  using ConstMap = Eigen::Map<const Matrix>;
  using Map = Eigen::Map<Matrix>;
  using ConstVecMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;
  using VecMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;

  ConstMap weight(int layer) const;
  ConstVecMap bias(int layer) const;
  Map weight_grad(int layer);
  VecMap bias_grad(int layer);

  MlpLayout layout_;
  std::vector<std::size_t> weight_offsets_;
  std::vector<std::size_t> bias_offsets_;
  // Blocks start on 64-byte boundaries so vectorized kernels see the same
  // alignment in every instance; padding entries stay zero.
  std::vector<Scalar, Eigen::aligned_allocator<Scalar>> params_;
  std::vector<Scalar, Eigen::aligned_allocator<Scalar>> grads_;
};

extern template class Mlp<float>;
extern template class Mlp<double>;

}  // namespace tissuefield
