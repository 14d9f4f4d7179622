#pragma once

// Seeded, allocation-light image transforms on H×W grids in [0,1].
// All geometric ops use inverse mapping with bilinear sampling and
// replicate-border handling, so outputs stay inside [0,1] whenever
// inputs do.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>

#include "ccrseq/common.hpp"
#include "ccrseq/image.hpp"

namespace ccrseq {
namespace imgops {

template <class S>
MatX<S> clamp01(MatX<S> g) {
  return g.cwiseMax(S(0)).cwiseMin(S(1));
}

template <class S>
S bilinear_at(const MatX<S>& g, S y, S x) {
  const long h = g.rows(), w = g.cols();
  y = std::min(std::max(y, S(0)), S(h - 1));
  x = std::min(std::max(x, S(0)), S(w - 1));
  long y0 = static_cast<long>(std::floor(y)), x0 = static_cast<long>(std::floor(x));
  long y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
  S fy = y - S(y0), fx = x - S(x0);
  return g(y0, x0) * (S(1) - fy) * (S(1) - fx) + g(y0, x1) * (S(1) - fy) * fx +
         g(y1, x0) * fy * (S(1) - fx) + g(y1, x1) * fy * fx;
}

// 2x3 inverse map: source = (a x + b y + c, d x + e y + f) for dest (x, y).
template <class S>
struct Affine {
  S a, b, c, d, e, f;
};

template <class S>
MatX<S> warp_affine_inv(const MatX<S>& g, const Affine<S>& m) {
  MatX<S> out(g.rows(), g.cols());
  for (long y = 0; y < g.rows(); ++y)
    for (long x = 0; x < g.cols(); ++x) {
      S sx = m.a * S(x) + m.b * S(y) + m.c;
      S sy = m.d * S(x) + m.e * S(y) + m.f;
      out(y, x) = bilinear_at(g, sy, sx);
    }
  return out;
}

template <class S>
MatX<S> rotate_deg(const MatX<S>& g, S degrees) {
  S th = degrees * S(M_PI) / S(180);
  S cx = S(g.cols() - 1) / S(2), cy = S(g.rows() - 1) / S(2);
  S c = std::cos(th), s = std::sin(th);
  // Inverse of rotation about the center.
  Affine<S> m{c, s, cx - c * cx - s * cy, -s, c, cy + s * cx - c * cy};
  return warp_affine_inv(g, m);
}

template <class S>
MatX<S> shear_x(const MatX<S>& g, S factor) {
  S cy = S(g.rows() - 1) / S(2);
  Affine<S> m{S(1), -factor, factor * cy, S(0), S(1), S(0)};
  return warp_affine_inv(g, m);
}

template <class S>
MatX<S> shear_y(const MatX<S>& g, S factor) {
  S cx = S(g.cols() - 1) / S(2);
  Affine<S> m{S(1), S(0), S(0), -factor, S(1), factor * cx};
  return warp_affine_inv(g, m);
}

template <class S>
MatX<S> translate(const MatX<S>& g, S dx, S dy) {
  Affine<S> m{S(1), S(0), -dx, S(0), S(1), -dy};
  return warp_affine_inv(g, m);
}

// 3x3 homography mapping dest pixel coords to source coords, from four
// correspondences dst[i] -> src[i] (x, y pairs).
template <class S>
Eigen::Matrix<S, 3, 3> homography_dst_to_src(const std::array<std::array<S, 2>, 4>& dst,
                                             const std::array<std::array<S, 2>, 4>& src) {
  Eigen::Matrix<S, 8, 8> A = Eigen::Matrix<S, 8, 8>::Zero();
  Eigen::Matrix<S, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    S x = dst[i][0], y = dst[i][1], u = src[i][0], v = src[i][1];
    A(2 * i, 0) = x; A(2 * i, 1) = y; A(2 * i, 2) = S(1);
    A(2 * i, 6) = -u * x; A(2 * i, 7) = -u * y;
    A(2 * i + 1, 3) = x; A(2 * i + 1, 4) = y; A(2 * i + 1, 5) = S(1);
    A(2 * i + 1, 6) = -v * x; A(2 * i + 1, 7) = -v * y;
    b(2 * i) = u;
    b(2 * i + 1) = v;
  }
  Eigen::Matrix<S, 8, 1> h = A.colPivHouseholderQr().solve(b);
  Eigen::Matrix<S, 3, 3> H;
  H << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), S(1);
  return H;
}

template <class S>
MatX<S> warp_perspective(const MatX<S>& g, const Eigen::Matrix<S, 3, 3>& H_dst_to_src) {
  MatX<S> out(g.rows(), g.cols());
  for (long y = 0; y < g.rows(); ++y)
    for (long x = 0; x < g.cols(); ++x) {
      S wz = H_dst_to_src(2, 0) * S(x) + H_dst_to_src(2, 1) * S(y) + H_dst_to_src(2, 2);
      S sx = (H_dst_to_src(0, 0) * S(x) + H_dst_to_src(0, 1) * S(y) + H_dst_to_src(0, 2)) / wz;
      S sy = (H_dst_to_src(1, 0) * S(x) + H_dst_to_src(1, 1) * S(y) + H_dst_to_src(1, 2)) / wz;
      out(y, x) = bilinear_at(g, sy, sx);
    }
  return out;
}

template <class S>
MatX<S> gaussian_blur(const MatX<S>& g, S sigma) {
  if (sigma <= S(0)) return g;
  int r = std::max(1, static_cast<int>(std::ceil(S(2.5) * sigma)));
  VecX<S> k(2 * r + 1);
  for (int i = -r; i <= r; ++i) k(i + r) = std::exp(-S(i) * S(i) / (S(2) * sigma * sigma));
  k /= k.sum();
  const long h = g.rows(), w = g.cols();
  MatX<S> tmp(h, w), out(h, w);
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      S acc = S(0);
      for (int i = -r; i <= r; ++i)
        acc += k(i + r) * g(y, std::min(std::max(x + i, 0L), w - 1));
      tmp(y, x) = acc;
    }
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      S acc = S(0);
      for (int i = -r; i <= r; ++i)
        acc += k(i + r) * tmp(std::min(std::max(y + i, 0L), h - 1), x);
      out(y, x) = acc;
    }
  return out;
}

template <class S>
MatX<S> adjust_brightness(const MatX<S>& g, S delta) {
  return clamp01<S>((g.array() + delta).matrix());
}

// Pivot at mid-gray so factor 1 is the identity (bit-exactly).
template <class S>
MatX<S> adjust_contrast(const MatX<S>& g, S factor) {
  if (factor == S(1)) return g;
  return clamp01<S>(((g.array() - S(0.5)) * factor + S(0.5)).matrix());
}

// factor 1 = identity (bit-exactly); <1 softens, >1 exaggerates edges.
template <class S>
MatX<S> sharpness(const MatX<S>& g, S factor) {
  if (factor == S(1)) return g;
  MatX<S> soft = gaussian_blur(g, S(0.8));
  return clamp01<S>(soft + factor * (g - soft));
}

template <class S>
MatX<S> posterize(const MatX<S>& g, int bits) {
  if (bits >= 8) return g;  // full depth = no-op on [0,1] grids
  bits = std::max(bits, 1);
  int levels = 1 << bits;
  MatX<S> out(g.rows(), g.cols());
  for (long i = 0; i < g.size(); ++i) {
    int q = std::min(static_cast<int>(g(i) * levels), levels - 1);
    out(i) = S(q) / S(levels - 1);
  }
  return out;
}

// Strictly-above threshold, so threshold 1 is the identity.
template <class S>
MatX<S> solarize(const MatX<S>& g, S threshold) {
  MatX<S> out(g.rows(), g.cols());
  for (long i = 0; i < g.size(); ++i) out(i) = g(i) > threshold ? S(1) - g(i) : g(i);
  return out;
}

template <class S>
MatX<S> autocontrast(const MatX<S>& g) {
  S lo = g.minCoeff(), hi = g.maxCoeff();
  if (hi - lo < S(1e-9)) return g;
  return ((g.array() - lo) / (hi - lo)).matrix();
}

// Histogram equalization over 256 bins, PIL-style cumulative remap.
template <class S>
MatX<S> equalize(const MatX<S>& g) {
  std::array<long, 256> hist{};
  for (long i = 0; i < g.size(); ++i) ++hist[quantize8(static_cast<double>(g(i)))];
  long total = g.size(), cum = 0, cum_min = -1;
  std::array<S, 256> lut{};
  for (int v = 0; v < 256; ++v) {
    cum += hist[v];
    if (cum_min < 0 && cum > 0) cum_min = cum;
    lut[v] = total == cum_min ? S(v) / S(255)
                              : S(cum - cum_min) / S(total - cum_min);
  }
  MatX<S> out(g.rows(), g.cols());
  for (long i = 0; i < g.size(); ++i) out(i) = lut[quantize8(static_cast<double>(g(i)))];
  return out;
}

// Smoothly interpolated lattice noise in [0,1]; `cell` is the lattice pitch.
template <class S>
MatX<S> value_noise(long h, long w, long cell, Rng& rng) {
  cell = std::max(cell, 1L);
  long gh = h / cell + 2, gw = w / cell + 2;
  MatX<S> lattice(gh, gw);
  for (long y = 0; y < gh; ++y)
    for (long x = 0; x < gw; ++x) lattice(y, x) = S(rng.uniform());
  auto smooth = [](S t) { return t * t * (S(3) - S(2) * t); };
  MatX<S> out(h, w);
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      long gy = y / cell, gx = x / cell;
      S fy = smooth(S(y - gy * cell) / S(cell));
      S fx = smooth(S(x - gx * cell) / S(cell));
      out(y, x) = lattice(gy, gx) * (S(1) - fy) * (S(1) - fx) +
                  lattice(gy, gx + 1) * (S(1) - fy) * fx +
                  lattice(gy + 1, gx) * fy * (S(1) - fx) +
                  lattice(gy + 1, gx + 1) * fy * fx;
    }
  return out;
}

}  // namespace imgops
}  // namespace ccrseq
