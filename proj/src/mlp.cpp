#include "tissuefield/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tissuefield/errors.hpp"

namespace tissuefield {

bool MlpLayout::has_skip(int layer) const {
  return layer > 0 && layer < hidden_layers && std::find(skips.begin(), skips.end(), layer) != skips.end();
}

template <typename Scalar>
Mlp<Scalar>::Mlp(const MlpLayout& layout, const MlpInit& init) : layout_(layout) {
  if (layout.inputs <= 0 || layout.outputs <= 0 || layout.hidden_layers < 0 ||
      (layout.hidden_layers > 0 && layout.width <= 0)) {
    throw InvalidArgument("invalid MLP layout");
  }
  constexpr std::size_t kAlign = 64 / sizeof(Scalar);
  const auto pad = [](std::size_t n) { return (n + kAlign - 1) / kAlign * kAlign; };
  std::size_t offset = 0;
  for (int l = 0; l < layers(); ++l) {
    weight_offsets_.push_back(offset);
    offset = pad(offset + static_cast<std::size_t>(layer_inputs(l)) * layer_outputs(l));
    bias_offsets_.push_back(offset);
    offset = pad(offset + layer_outputs(l));
  }
  params_.assign(offset, Scalar(0));
  grads_.assign(offset, Scalar(0));

  std::mt19937_64 rng(init.seed);
  for (int l = 0; l < layers(); ++l) {
    const double fan_in = layer_inputs(l);
    const double fan_out = layer_outputs(l);
    double bound;
    if (l + 1 < layers()) {
      bound = std::sqrt(6.0 / fan_in);
    } else if (init.output_scale > 0.0) {
      bound = init.output_scale / std::sqrt(fan_in);
    } else {
      bound = std::sqrt(6.0 / (fan_in + fan_out));
    }
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t count = static_cast<std::size_t>(fan_in * fan_out);
    for (std::size_t i = 0; i < count; ++i) {
      params_[weight_offsets_[l] + i] = static_cast<Scalar>(dist(rng));
    }
  }
}

template <typename Scalar>
int Mlp<Scalar>::layer_inputs(int layer) const {
  if (layer == 0) return layout_.inputs;
  return layout_.width + (layout_.has_skip(layer) ? layout_.inputs : 0);
}

template <typename Scalar>
int Mlp<Scalar>::layer_outputs(int layer) const {
  return layer + 1 < layers() ? layout_.width : layout_.outputs;
}

template <typename Scalar>
void Mlp<Scalar>::zero_grad() {
  std::fill(grads_.begin(), grads_.end(), Scalar(0));
}

template <typename Scalar>
typename Mlp<Scalar>::ConstMap Mlp<Scalar>::weight(int layer) const {
  return ConstMap(params_.data() + weight_offsets_[layer], layer_outputs(layer), layer_inputs(layer));
}

template <typename Scalar>
typename Mlp<Scalar>::ConstVecMap Mlp<Scalar>::bias(int layer) const {
  return ConstVecMap(params_.data() + bias_offsets_[layer], layer_outputs(layer));
}

template <typename Scalar>
typename Mlp<Scalar>::Map Mlp<Scalar>::weight_grad(int layer) {
  return Map(grads_.data() + weight_offsets_[layer], layer_outputs(layer), layer_inputs(layer));
}

template <typename Scalar>
typename Mlp<Scalar>::VecMap Mlp<Scalar>::bias_grad(int layer) {
  return VecMap(grads_.data() + bias_offsets_[layer], layer_outputs(layer));
}

template <typename Scalar>
typename Mlp<Scalar>::Matrix Mlp<Scalar>::forward(const Matrix& input, Cache* cache) const {
  if (input.rows() != layout_.inputs) throw InvalidArgument("MLP input has wrong feature count");
  if (cache) cache->layer_inputs.assign(layers(), Matrix());
  Matrix z = input;
  for (int l = 0; l < layers(); ++l) {
    if (layout_.has_skip(l)) {
      Matrix joined(layer_inputs(l), input.cols());
      joined.topRows(layout_.width) = z;
      joined.bottomRows(layout_.inputs) = input;
      z.swap(joined);
    }
    Matrix h = weight(l) * z;
    h.colwise() += bias(l);
    if (cache) cache->layer_inputs[l].swap(z);
    if (l + 1 < layers()) {
      z = h.cwiseMax(Scalar(0));
    } else {
      return h;
    }
  }
  return z;  // unreachable: the output layer always returns
}

template <typename Scalar>
void Mlp<Scalar>::backward(const Cache& cache, const Matrix& d_output, Matrix* d_input) {
  const Eigen::Index n = d_output.cols();
  if (d_input) d_input->setZero(layout_.inputs, n);
  Matrix dh = d_output;
  for (int l = layers() - 1; l >= 0; --l) {
    const Matrix& in = cache.layer_inputs[l];
    weight_grad(l).noalias() += dh * in.transpose();
    bias_grad(l) += dh.rowwise().sum();
    if (l == 0) {
      if (d_input) d_input->noalias() += weight(0).transpose() * dh;
      break;
    }
    Matrix dz = weight(l).transpose() * dh;
    if (layout_.has_skip(l) && d_input) *d_input += dz.bottomRows(layout_.inputs);
    const auto active = (in.topRows(layout_.width).array() > Scalar(0)).template cast<Scalar>();
    dh = dz.topRows(layout_.width).array() * active;
  }
}

template <typename Scalar>
typename Mlp<Scalar>::Matrix Mlp<Scalar>::tangent_forward(const Cache& cache,
                                                          const Matrix& input_tangents,
                                                          int directions,
                                                          TangentCache* tangent_cache) const {
  const Eigen::Index n = cache.layer_inputs[0].cols();
  if (input_tangents.rows() != layout_.inputs || input_tangents.cols() != n * directions) {
    throw InvalidArgument("tangent block has wrong shape");
  }
  if (tangent_cache) {
    tangent_cache->layer_inputs.assign(layers(), Matrix());
    tangent_cache->directions = directions;
  }
  Matrix u = input_tangents;
  for (int l = 0; l < layers(); ++l) {
    if (layout_.has_skip(l)) {
      Matrix joined(layer_inputs(l), u.cols());
      joined.topRows(layout_.width) = u;
      joined.bottomRows(layout_.inputs) = input_tangents;
      u.swap(joined);
    }
    Matrix v = weight(l) * u;
    if (tangent_cache) tangent_cache->layer_inputs[l].swap(u);
    if (l + 1 < layers()) {
      const auto active =
          (cache.layer_inputs[l + 1].topRows(layout_.width).array() > Scalar(0)).template cast<Scalar>();
      for (int k = 0; k < directions; ++k) v.middleCols(k * n, n).array() *= active;
      u.swap(v);
    } else {
      return v;
    }
  }
  return u;
}

template <typename Scalar>
void Mlp<Scalar>::tangent_backward(const Cache& cache, const TangentCache& tangent_cache,
                                   const Matrix& d_output_tangents) {
  const Eigen::Index n = cache.layer_inputs[0].cols();
  const int directions = tangent_cache.directions;
  Matrix dv = d_output_tangents;
  for (int l = layers() - 1; l >= 0; --l) {
    weight_grad(l).noalias() += dv * tangent_cache.layer_inputs[l].transpose();
    if (l == 0) break;
    Matrix du = weight(l).transpose() * dv;
    const auto active =
        (cache.layer_inputs[l].topRows(layout_.width).array() > Scalar(0)).template cast<Scalar>();
    dv = du.topRows(layout_.width);
    for (int k = 0; k < directions; ++k) dv.middleCols(k * n, n).array() *= active;
  }
}

template <typename Scalar>
typename Mlp<Scalar>::Matrix Mlp<Scalar>::forward_reference(const Matrix& input) const {
  const Eigen::Index n = input.cols();
  Matrix z = input;
  for (int l = 0; l < layers(); ++l) {
    Matrix in = z;
    if (layout_.has_skip(l)) {
      in.resize(layer_inputs(l), n);
      for (Eigen::Index c = 0; c < n; ++c) {
        for (int r = 0; r < layout_.width; ++r) in(r, c) = z(r, c);
        for (int r = 0; r < layout_.inputs; ++r) in(layout_.width + r, c) = input(r, c);
      }
    }
    const ConstMap w = weight(l);
    const ConstVecMap b = bias(l);
    Matrix out(layer_outputs(l), n);
    for (Eigen::Index c = 0; c < n; ++c) {
      for (int o = 0; o < layer_outputs(l); ++o) {
        Scalar acc = b[o];
        for (int i = 0; i < layer_inputs(l); ++i) acc += w(o, i) * in(i, c);
        out(o, c) = (l + 1 < layers()) ? std::max(acc, Scalar(0)) : acc;
      }
    }
    z.swap(out);
  }
  return z;
}

template class Mlp<float>;
template class Mlp<double>;

}  // namespace tissuefield
