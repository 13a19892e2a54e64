#pragma once

#include "grid.hpp"

#include <Eigen/Dense>

namespace omodl::detail {

using CMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;
using CVector = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;
using RowMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Patch extraction for valid convolution with a (kr x kc) kernel over a
// channel-major stack. Row (ch*kr + a)*kc + b, column i*vc + j holds
// x[ch][i + kr-1-a][j + kc-1-b], so that kernel . column is a true
// (flipped) convolution anchored top-left.
inline RowMatrix im2col(cplx const *x, int channels, int rows, int cols, int kr, int kc) {
  int const vr = rows - kr + 1, vc = cols - kc + 1;
  RowMatrix out(static_cast<Eigen::Index>(channels) * kr * kc, static_cast<Eigen::Index>(vr) * vc);
  for (int ch = 0; ch < channels; ++ch) {
    cplx const *plane = x + static_cast<std::size_t>(ch) * rows * cols;
    for (int a = 0; a < kr; ++a) {
      for (int b = 0; b < kc; ++b) {
        Eigen::Index const row = (static_cast<Eigen::Index>(ch) * kr + a) * kc + b;
        for (int i = 0; i < vr; ++i) {
          cplx const *src = plane + static_cast<std::size_t>(i + kr - 1 - a) * cols + (kc - 1 - b);
          for (int j = 0; j < vc; ++j) out(row, static_cast<Eigen::Index>(i) * vc + j) = src[j];
        }
      }
    }
  }
  return out;
}

// Adjoint of im2col: scatter-add patch columns back onto the stack.
inline void col2im_add(RowMatrix const &patches, int channels, int rows, int cols, int kr, int kc, cplx *out) {
  int const vr = rows - kr + 1, vc = cols - kc + 1;
  for (int ch = 0; ch < channels; ++ch) {
    cplx *plane = out + static_cast<std::size_t>(ch) * rows * cols;
    for (int a = 0; a < kr; ++a) {
      for (int b = 0; b < kc; ++b) {
        Eigen::Index const row = (static_cast<Eigen::Index>(ch) * kr + a) * kc + b;
        for (int i = 0; i < vr; ++i) {
          cplx *dst = plane + static_cast<std::size_t>(i + kr - 1 - a) * cols + (kc - 1 - b);
          for (int j = 0; j < vc; ++j) dst[j] += patches(row, static_cast<Eigen::Index>(i) * vc + j);
        }
      }
    }
  }
}

} // namespace omodl::detail
