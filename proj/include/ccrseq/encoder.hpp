#pragma once

// 4-block conv feature extractor: 32x100 grayscale -> 25 columns of d=256.
// Forward optionally fills a cache with everything backward needs; im2col
// patch matrices are recomputed on the way back to keep the cache small.

#include <stdexcept>
#include <vector>

#include "ccrseq/image.hpp"
#include "ccrseq/net.hpp"
#include "ccrseq/params.hpp"

namespace ccrseq {

template <class S>
struct EncoderCache {
  MatX<S> x0;                        // 1 × H·W input row
  MatX<S> r1, p1, r2, p2, r3, p3, r4;  // post-ReLU and pooled maps
  std::vector<int> am1, am2, am3, am4;
};

namespace detail {

inline constexpr net::PoolShape kPool1{32, 100, 2, 2};
inline constexpr net::PoolShape kPool2{16, 50, 2, 2};
inline constexpr net::PoolShape kPool3{8, 25, 2, 1};
inline constexpr net::PoolShape kPool4{4, 25, 4, 1};

}  // namespace detail

template <class S>
MatX<S> encode(const ModelParams<S>& p, const MatX<S>& img, EncoderCache<S>* cache = nullptr) {
  if (img.rows() != kImageH || img.cols() != kImageW)
    throw std::invalid_argument("encode: input must be 32x100");
  MatX<S> x0(1, kImageH * kImageW);
  for (int y = 0; y < kImageH; ++y)
    for (int x = 0; x < kImageW; ++x) x0(0, y * kImageW + x) = img(y, x);

  using namespace detail;
  MatX<S> r1 = net::relu<S>(net::conv3x3(x0, p.conv1_w, p.conv1_b, kPool1.h_in, kPool1.w_in));
  std::vector<int> am1;
  MatX<S> p1 = net::maxpool(r1, kPool1, cache ? &am1 : nullptr);
  MatX<S> r2 = net::relu<S>(net::conv3x3(p1, p.conv2_w, p.conv2_b, kPool2.h_in, kPool2.w_in));
  std::vector<int> am2;
  MatX<S> p2 = net::maxpool(r2, kPool2, cache ? &am2 : nullptr);
  MatX<S> r3 = net::relu<S>(net::conv3x3(p2, p.conv3_w, p.conv3_b, kPool3.h_in, kPool3.w_in));
  std::vector<int> am3;
  MatX<S> p3 = net::maxpool(r3, kPool3, cache ? &am3 : nullptr);
  MatX<S> r4 = net::relu<S>(net::conv3x3(p3, p.conv4_w, p.conv4_b, kPool4.h_in, kPool4.w_in));
  std::vector<int> am4;
  MatX<S> f = net::maxpool(r4, kPool4, cache ? &am4 : nullptr);  // 256 × 25

  if (cache) {
    cache->x0 = std::move(x0);
    cache->r1 = std::move(r1);
    cache->p1 = std::move(p1);
    cache->r2 = std::move(r2);
    cache->p2 = std::move(p2);
    cache->r3 = std::move(r3);
    cache->p3 = std::move(p3);
    cache->r4 = std::move(r4);
    cache->am1 = std::move(am1);
    cache->am2 = std::move(am2);
    cache->am3 = std::move(am3);
    cache->am4 = std::move(am4);
  }
  return f;
}

// Accumulates parameter gradients for one sample into `g`.
template <class S>
void encode_backward(const ModelParams<S>& p, const EncoderCache<S>& c, const MatX<S>& df,
                     ModelParams<S>& g) {
  using namespace detail;
  auto conv_back = [](const MatX<S>& din, const MatX<S>& src, const net::PoolShape& ps,
                      const MatX<S>& w, MatX<S>& gw, MatX<S>& gb) {
    MatX<S> k = net::im2col3x3(src, ps.h_in, ps.w_in);
    gw += din * k.transpose();
    gb.col(0) += din.rowwise().sum();
    return net::col2im3x3<S>(w.transpose() * din, static_cast<int>(src.rows()), ps.h_in, ps.w_in);
  };

  MatX<S> d4 = net::relu_backward(net::maxpool_backward(df, kPool4, c.am4), c.r4);
  MatX<S> dp3 = conv_back(d4, c.p3, kPool4, p.conv4_w, g.conv4_w, g.conv4_b);
  MatX<S> d3 = net::relu_backward(net::maxpool_backward(dp3, kPool3, c.am3), c.r3);
  MatX<S> dp2 = conv_back(d3, c.p2, kPool3, p.conv3_w, g.conv3_w, g.conv3_b);
  MatX<S> d2 = net::relu_backward(net::maxpool_backward(dp2, kPool2, c.am2), c.r2);
  MatX<S> dp1 = conv_back(d2, c.p1, kPool2, p.conv2_w, g.conv2_w, g.conv2_b);
  MatX<S> d1 = net::relu_backward(net::maxpool_backward(dp1, kPool1, c.am1), c.r1);
  conv_back(d1, c.x0, kPool1, p.conv1_w, g.conv1_w, g.conv1_b);
}

}  // namespace ccrseq
