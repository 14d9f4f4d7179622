#include "ccrseq/augment.hpp"

#include <cmath>
#include <stdexcept>

#include "ccrseq/imgops.hpp"

namespace ccrseq {
namespace augment {
namespace {

constexpr uint64_t kWeakStream = 0x7765616bULL;      // "weak"
constexpr uint64_t kStrongStream = 0x7374726f6eULL;  // "stron"

}  // namespace

const std::vector<std::string>& strong_op_pool() {
  static const std::vector<std::string> pool = {
      "rotate",     "shear-x",    "shear-y",  "translate-x", "translate-y", "contrast",
      "brightness", "sharpness",  "posterize", "solarize",   "autocontrast", "equalize"};
  return pool;
}

MatXd weak_apply(const MatXd& g, double brightness_delta, double contrast_factor) {
  return imgops::adjust_contrast(imgops::adjust_brightness(g, brightness_delta), contrast_factor);
}

MatXd strong_apply_op(const MatXd& g, int op, int magnitude, bool flip_sign) {
  const double t = std::min(std::max(magnitude, 0), 10) / 10.0;
  const double s = flip_sign ? -1.0 : 1.0;
  switch (op) {
    case 0:
      return imgops::rotate_deg(g, s * 15.0 * t);
    case 1:
      return imgops::shear_x(g, s * 0.3 * t);
    case 2:
      return imgops::shear_y(g, s * 0.3 * t);
    case 3:
      return imgops::translate(g, s * 0.2 * g.cols() * t, 0.0);
    case 4:
      return imgops::translate(g, 0.0, s * 0.2 * g.rows() * t);
    case 5:
      return imgops::adjust_contrast(g, 1.0 + s * 0.8 * t);
    case 6:
      return imgops::adjust_brightness(g, s * 0.3 * t);
    case 7:
      return imgops::sharpness(g, 1.0 + s * 0.9 * t);
    case 8:
      return imgops::posterize(g, 8 - static_cast<int>(std::lround(4 * t)));
    case 9:
      return imgops::solarize(g, 1.0 - 0.9 * t);
    case 10:
      return imgops::autocontrast(g);
    case 11:
      return imgops::equalize(g);
    default:
      throw std::out_of_range("strong_apply_op: op index out of range");
  }
}

ImageSample weak_augment(const ImageSample& img, uint64_t seed, const WeakParams& p) {
  Rng rng(mix_seed(seed, kWeakStream));
  double b = rng.uniform(-p.brightness, p.brightness);
  double c = 1.0 + rng.uniform(-p.contrast, p.contrast);
  return ImageSample{weak_apply(img.pixels, b, c), img.label, img.domain};
}

ImageSample strong_augment(const ImageSample& img, uint64_t seed, const StrongParams& p) {
  Rng rng(mix_seed(seed, kStrongStream));
  MatXd g = img.pixels;
  for (int i = 0; i < p.n; ++i) {
    int op = rng.uniform_int(0, static_cast<int>(strong_op_pool().size()) - 1);
    bool flip = rng.coin();  // drawn for every op to keep the stream aligned
    g = strong_apply_op(g, op, p.magnitude, flip);
  }
  return ImageSample{std::move(g), img.label, img.domain};
}

ImageSample apply_policy(const ImageSample& img, uint64_t seed, const Policy& p) {
  switch (p.kind) {
    case Kind::kNone:
      return img;
    case Kind::kWeak:
      return weak_augment(img, seed, p.weak);
    case Kind::kStrong:
      return strong_augment(img, seed, p.strong);
  }
  throw std::logic_error("apply_policy: bad kind");
}

}  // namespace augment
}  // namespace ccrseq
