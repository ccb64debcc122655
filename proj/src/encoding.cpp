#include "tissuefield/encoding.hpp"

#include <cmath>

namespace tissuefield {

namespace {

template <typename Scalar>
Scalar frequency(int j) {
  return static_cast<Scalar>(std::ldexp(M_PI, j));
}

}  // namespace

Eigen::VectorXd encode(const Eigen::VectorXd& x, const PositionalEncoding& encoding) {
  MatrixX<double> in = x;
  MatrixX<double> out(encoding.output_dim(static_cast<int>(x.size())), 1);
  encode_into<double>(in, encoding, out, 0);
  return out.col(0);
}

template <typename Scalar>
void encode_into(const MatrixX<Scalar>& x, const PositionalEncoding& encoding, MatrixX<Scalar>& out,
                 int row_offset) {
  const int k = static_cast<int>(x.rows());
  int block = 0;
  if (encoding.include_input) {
    out.middleRows(row_offset, k) = x;
    ++block;
  }
  for (int j = 0; j < encoding.frequencies; ++j) {
    const auto phase = (x.array() * frequency<Scalar>(j)).eval();
    out.middleRows(row_offset + (block++) * k, k) = phase.sin().matrix();
    out.middleRows(row_offset + (block++) * k, k) = phase.cos().matrix();
  }
}

template <typename Scalar>
MatrixX<Scalar> encode_backward(const MatrixX<Scalar>& x, const PositionalEncoding& encoding,
                                const MatrixX<Scalar>& d_encoded, int row_offset) {
  const int k = static_cast<int>(x.rows());
  MatrixX<Scalar> dx = MatrixX<Scalar>::Zero(k, x.cols());
  int block = 0;
  if (encoding.include_input) {
    dx += d_encoded.middleRows(row_offset, k);
    ++block;
  }
  for (int j = 0; j < encoding.frequencies; ++j) {
    const Scalar w = frequency<Scalar>(j);
    const auto phase = (x.array() * w).eval();
    const auto d_sin = d_encoded.middleRows(row_offset + (block++) * k, k).array();
    const auto d_cos = d_encoded.middleRows(row_offset + (block++) * k, k).array();
    dx.array() += w * (d_sin * phase.cos() - d_cos * phase.sin());
  }
  return dx;
}

template <typename Scalar>
void encode_tangents_into(const MatrixX<Scalar>& x, const PositionalEncoding& encoding,
                          MatrixX<Scalar>& out, int row_offset) {
  const int k = static_cast<int>(x.rows());
  const Eigen::Index n = x.cols();
  const int dim = encoding.output_dim(k);
  out.block(row_offset, 0, dim, n * k).setZero();
  for (int c = 0; c < k; ++c) {
    auto cols = out.block(row_offset, c * n, dim, n);
    int block = 0;
    if (encoding.include_input) {
      cols.row(c).setOnes();
      ++block;
    }
    for (int j = 0; j < encoding.frequencies; ++j) {
      const Scalar w = frequency<Scalar>(j);
      const auto phase = (x.row(c).array() * w).eval();
      cols.row((block++) * k + c) = (w * phase.cos()).matrix();
      cols.row((block++) * k + c) = (-w * phase.sin()).matrix();
    }
  }
}

template void encode_into<float>(const MatrixX<float>&, const PositionalEncoding&, MatrixX<float>&, int);
template void encode_into<double>(const MatrixX<double>&, const PositionalEncoding&, MatrixX<double>&,
                                  int);
template MatrixX<float> encode_backward<float>(const MatrixX<float>&, const PositionalEncoding&,
                                               const MatrixX<float>&, int);
template MatrixX<double> encode_backward<double>(const MatrixX<double>&, const PositionalEncoding&,
                                                 const MatrixX<double>&, int);
template void encode_tangents_into<float>(const MatrixX<float>&, const PositionalEncoding&,
                                          MatrixX<float>&, int);
template void encode_tangents_into<double>(const MatrixX<double>&, const PositionalEncoding&,
                                           MatrixX<double>&, int);

}  // namespace tissuefield
