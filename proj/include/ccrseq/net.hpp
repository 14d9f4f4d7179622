#pragma once

// Low-level building blocks for the recognizer: im2col convolution, ReLU,
// max-pooling with cached argmax, and stable softmax. Feature maps are
// (channels × H·W) matrices with row-major spatial flattening.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ccrseq/common.hpp"

namespace ccrseq {
namespace net {

// 3x3 same-padding patch matrix: rows are (channel, ky, kx) triples,
// columns are output positions.
template <class S>
MatX<S> im2col3x3(const MatX<S>& x, int h, int w) {
  const int cin = static_cast<int>(x.rows());
  if (x.cols() != static_cast<long>(h) * w) throw std::invalid_argument("im2col3x3: bad spatial size");
  MatX<S> k = MatX<S>::Zero(cin * 9, static_cast<long>(h) * w);
  for (int c = 0; c < cin; ++c)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const int row = c * 9 + ky * 3 + kx;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          for (int xx = 0; xx < w; ++xx) {
            const int sx = xx + kx - 1;
            if (sx < 0 || sx >= w) continue;
            k(row, y * w + xx) = x(c, sy * w + sx);
          }
        }
      }
  return k;
}

// Adjoint of im2col3x3: scatter-adds patch-matrix gradients back to the map.
template <class S>
MatX<S> col2im3x3(const MatX<S>& dk, int cin, int h, int w) {
  if (dk.rows() != static_cast<long>(cin) * 9 || dk.cols() != static_cast<long>(h) * w)
    throw std::invalid_argument("col2im3x3: bad patch-matrix shape");
  MatX<S> dx = MatX<S>::Zero(cin, static_cast<long>(h) * w);
  for (int c = 0; c < cin; ++c)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const int row = c * 9 + ky * 3 + kx;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          for (int xx = 0; xx < w; ++xx) {
            const int sx = xx + kx - 1;
            if (sx < 0 || sx >= w) continue;
            dx(c, sy * w + sx) += dk(row, y * w + xx);
          }
        }
      }
  return dx;
}

// weights (cout × cin·9) applied to a same-padded 3x3 neighborhood.
template <class S>
MatX<S> conv3x3(const MatX<S>& x, const MatX<S>& weight, const MatX<S>& bias, int h, int w) {
  MatX<S> out = weight * im2col3x3(x, h, w);
  out.colwise() += bias.col(0);
  return out;
}

template <class S>
MatX<S> relu(const MatX<S>& x) {
  return x.cwiseMax(S(0));
}

// mask from the forward output: relu'(x)=1 exactly where the output is >0.
template <class S>
MatX<S> relu_backward(const MatX<S>& dy, const MatX<S>& y) {
  return (y.array() > S(0)).template cast<S>().matrix().cwiseProduct(dy);
}

struct PoolShape {
  int h_in, w_in, ph, pw;
  int h_out() const { return h_in / ph; }
  int w_out() const { return w_in / pw; }
};

// Non-overlapping max pool; records the winning input position per cell.
template <class S>
MatX<S> maxpool(const MatX<S>& x, const PoolShape& ps, std::vector<int>* argmax) {
  if (ps.h_in % ps.ph != 0 || ps.w_in % ps.pw != 0)
    throw std::invalid_argument("maxpool: window must tile the input");
  const int c = static_cast<int>(x.rows());
  const int ho = ps.h_out(), wo = ps.w_out();
  MatX<S> out(c, static_cast<long>(ho) * wo);
  if (argmax) argmax->assign(static_cast<size_t>(c) * ho * wo, 0);
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < ho; ++y)
      for (int xx = 0; xx < wo; ++xx) {
        S best = x(ch, (y * ps.ph) * ps.w_in + xx * ps.pw);
        int best_pos = (y * ps.ph) * ps.w_in + xx * ps.pw;
        for (int dy = 0; dy < ps.ph; ++dy)
          for (int dx = 0; dx < ps.pw; ++dx) {
            const int pos = (y * ps.ph + dy) * ps.w_in + xx * ps.pw + dx;
            if (x(ch, pos) > best) {
              best = x(ch, pos);
              best_pos = pos;
            }
          }
        out(ch, y * wo + xx) = best;
        if (argmax) (*argmax)[static_cast<size_t>(ch) * ho * wo + y * wo + xx] = best_pos;
      }
  return out;
}

template <class S>
MatX<S> maxpool_backward(const MatX<S>& dy, const PoolShape& ps, const std::vector<int>& argmax) {
  const int c = static_cast<int>(dy.rows());
  const int ho = ps.h_out(), wo = ps.w_out();
  MatX<S> dx = MatX<S>::Zero(c, static_cast<long>(ps.h_in) * ps.w_in);
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < ho * wo; ++i)
      dx(ch, argmax[static_cast<size_t>(ch) * ho * wo + i]) += dy(ch, i);
  return dx;
}

template <class S>
VecX<S> softmax(const VecX<S>& z) {
  VecX<S> e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

template <class S>
S sigmoid_scalar(S x) {
  return x >= S(0) ? S(1) / (S(1) + std::exp(-x)) : std::exp(x) / (S(1) + std::exp(x));
}

template <class S>
VecX<S> sigmoid(const VecX<S>& x) {
  VecX<S> out(x.size());
  for (long i = 0; i < x.size(); ++i) out(i) = sigmoid_scalar(x(i));
  return out;
}

template <class S>
int argmax(const VecX<S>& v) {
  Eigen::Index idx = 0;
  v.maxCoeff(&idx);
  return static_cast<int>(idx);
}

}  // namespace net
}  // namespace ccrseq
