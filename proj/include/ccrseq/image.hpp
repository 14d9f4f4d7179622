#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccrseq/common.hpp"

namespace ccrseq {

inline constexpr int kImageH = 32;
inline constexpr int kImageW = 100;

enum class Domain { kClean, kPerturbed };

inline const char* domain_name(Domain d) {
  return d == Domain::kClean ? "CLEAN" : "PERTURBED";
}

inline Domain domain_from_name(const std::string& s) {
  if (s == "CLEAN") return Domain::kClean;
  if (s == "PERTURBED") return Domain::kPerturbed;
  throw std::invalid_argument("unknown domain tag: " + s);
}

// One grayscale sample: H x W grid in [0,1], optional label, domain tag.
struct ImageSample {
  MatXd pixels;  // kImageH x kImageW
  std::optional<std::string> label;
  Domain domain = Domain::kClean;
};

inline std::uint8_t quantize8(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

// Row-major byte layout, the same order PNG scanlines use.
inline std::vector<std::uint8_t> grid_to_bytes(const MatXd& grid) {
  std::vector<std::uint8_t> out(static_cast<size_t>(grid.rows()) * grid.cols());
  for (Eigen::Index r = 0; r < grid.rows(); ++r)
    for (Eigen::Index c = 0; c < grid.cols(); ++c)
      out[static_cast<size_t>(r) * grid.cols() + c] = quantize8(grid(r, c));
  return out;
}

template <class S>
MatX<S> bytes_to_grid(const std::vector<std::uint8_t>& bytes, int h, int w) {
  if (static_cast<int>(bytes.size()) != h * w)
    throw std::invalid_argument("pixel buffer size does not match dimensions");
  MatX<S> grid(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      grid(r, c) = static_cast<S>(bytes[static_cast<size_t>(r) * w + c]) / S(255);
  return grid;
}

}  // namespace ccrseq
