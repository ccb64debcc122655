#pragma once

#include <Eigen/Core>

#include "tissuefield/mlp.hpp"

namespace tissuefield {

/// Sinusoidal frequency features: [x; sin(2^0 pi x); cos(2^0 pi x); ...;
/// sin(2^(L-1) pi x); cos(2^(L-1) pi x)], each block as long as x.
struct PositionalEncoding {
  int frequencies = 0;
  bool include_input = true;

  int output_dim(int input_dim) const { return input_dim * (2 * frequencies + (include_input ? 1 : 0)); }

  /// Row of the encoded vector holding component ``component`` of block ``block``;
  /// block 0 is the raw input when it is included.
  int row(int input_dim, int block, int component) const { return block * input_dim + component; }
};

Eigen::VectorXd encode(const Eigen::VectorXd& x, const PositionalEncoding& encoding);

/// Encodes columns of ``x`` into rows [row_offset, row_offset + dim) of ``out``.
template <typename Scalar>
void encode_into(const MatrixX<Scalar>& x, const PositionalEncoding& encoding, MatrixX<Scalar>& out,
                 int row_offset);

/// d loss / d x given d loss / d encoding (restricted to the encoding rows).
template <typename Scalar>
MatrixX<Scalar> encode_backward(const MatrixX<Scalar>& x, const PositionalEncoding& encoding,
                                const MatrixX<Scalar>& d_encoded, int row_offset);

/// d encoding / d x_j for every component j, stacked as k blocks of N
/// columns, written into rows [row_offset, row_offset + dim) of ``out``.
template <typename Scalar>
void encode_tangents_into(const MatrixX<Scalar>& x, const PositionalEncoding& encoding,
                          MatrixX<Scalar>& out, int row_offset);

}  // namespace tissuefield
