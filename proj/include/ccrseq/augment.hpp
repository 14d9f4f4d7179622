#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccrseq/image.hpp"

namespace ccrseq {
namespace augment {

// Maximum excursions for the color-jitter pair; draws are uniform in ±range.
struct WeakParams {
  double brightness = 0.2;
  double contrast = 0.2;
};

// RandAugment-style policy: `n` ops drawn from the fixed pool, shared
// integer magnitude 0..10 mapped linearly onto each op's physical range.
struct StrongParams {
  int n = 2;
  int magnitude = 7;
};

enum class Kind { kNone, kWeak, kStrong };

struct Policy {
  Kind kind = Kind::kNone;
  WeakParams weak;
  StrongParams strong;
};

// Op names in pool order; deliberately contains no region-erasing op.
const std::vector<std::string>& strong_op_pool();

// Deterministic cores, exposed so tests can force exact parameter values.
MatXd weak_apply(const MatXd& g, double brightness_delta, double contrast_factor);
MatXd strong_apply_op(const MatXd& g, int op, int magnitude, bool flip_sign);

// Seeded wrappers; label and domain pass through untouched.
ImageSample weak_augment(const ImageSample& img, uint64_t seed, const WeakParams& p = {});
ImageSample strong_augment(const ImageSample& img, uint64_t seed, const StrongParams& p = {});
ImageSample apply_policy(const ImageSample& img, uint64_t seed, const Policy& p);

}  // namespace augment
}  // namespace ccrseq
