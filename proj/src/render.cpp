#include "ccrseq/render.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <vector>

#include "ccrseq/charset.hpp"
#include "ccrseq/fonts.hpp"
#include "ccrseq/imgops.hpp"

namespace ccrseq {
namespace {

constexpr uint64_t kCleanStream = 0x636c65616eULL;    // "clean"
constexpr uint64_t kPerturbStream = 0x70657274ULL;    // "pert"
constexpr int kMargin = 2;

void validate_text(const std::string& text) {
  if (text.empty() || text.size() > 12)
    throw std::invalid_argument("render: text must be 1..12 characters");
  char bad;
  if (!charset::valid_text(text, &bad))
    throw std::invalid_argument(std::string("render: character not in charset: '") + bad + "'");
}

MatXd paint_clean(const std::string& text, uint64_t seed) {
  Rng rng(mix_seed(seed, kCleanStream));
  const int n = static_cast<int>(text.size());
  const int style = static_cast<int>(rng.uniform_int(0, fonts::kStyleCount - 1));
  const int gw = fonts::glyph_width(style);

  // Largest integer scale whose natural kerning (= scale) still fits.
  int scale = 1;
  for (int k = 3; k >= 1; --k) {
    if (n * gw * k + (n - 1) * k <= kImageW - 2 * kMargin) {
      scale = k;
      break;
    }
  }
  std::vector<int> kern(std::max(n - 1, 0), scale);
  int total = n * gw * scale;
  for (int& k : kern) {
    k += static_cast<int>(rng.uniform_int(0, 1));  // mild jitter, +0/+1 px
    total += k;
  }
  if (total > kImageW - 2 * kMargin) {
    // Jitter overflowed the canvas; fall back to natural kerning.
    total = n * gw * scale + (n - 1) * scale;
    std::fill(kern.begin(), kern.end(), scale);
  }

  const int gh = fonts::kGlyphH * scale;
  const int x0 = kMargin + static_cast<int>(rng.uniform_int(0, kImageW - 2 * kMargin - total));
  const int y0 = kMargin + static_cast<int>(rng.uniform_int(0, kImageH - 2 * kMargin - gh));
  const double bg = rng.uniform(0.85, 1.0);
  const double fg = rng.uniform(0.0, 0.2);

  MatXd img = MatXd::Constant(kImageH, kImageW, bg);
  int x = x0;
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < fonts::kGlyphH; ++r)
      for (int c = 0; c < gw; ++c) {
        if (!fonts::glyph_pixel(style, text[i], r, c)) continue;
        for (int dy = 0; dy < scale; ++dy)
          for (int dx = 0; dx < scale; ++dx) img(y0 + r * scale + dy, x + c * scale + dx) = fg;
      }
    x += gw * scale + (i + 1 < n ? kern[i] : 0);
  }
  return img;
}

}  // namespace

PerturbConfig perturb_preset(const std::string& name) {
  if (name == "off") return PerturbConfig::off();
  if (name == "default") return PerturbConfig::defaults();
  if (name == "strong") return PerturbConfig::strong();
  throw std::invalid_argument("unknown perturb strength: " + name);
}

ImageSample render_clean(const std::string& text, uint64_t seed) {
  validate_text(text);
  return ImageSample{paint_clean(text, seed), text, Domain::kClean};
}

ImageSample render_perturbed(const std::string& text, uint64_t seed, const PerturbConfig& cfg) {
  validate_text(text);
  MatXd img = paint_clean(text, seed);
  Rng rng(mix_seed(seed, kPerturbStream));

  // Magnitudes drawn up front in a fixed order; per-pixel draws follow in
  // stage order, so a stage skipped at zero magnitude still leaves every
  // earlier draw untouched.
  std::array<std::array<double, 2>, 4> disp;
  for (auto& d : disp) {
    d[0] = rng.uniform(-cfg.warp, cfg.warp) * kImageW;
    d[1] = rng.uniform(-cfg.warp, cfg.warp) * kImageH;
  }
  const double blur = rng.uniform(0.0, cfg.blur_sigma);
  const double noise = rng.uniform(0.0, cfg.noise_sigma);
  const double opacity = rng.uniform(0.0, cfg.texture_opacity);
  const long cell = rng.uniform_int(6, 12);
  const double contrast = 1.0 + rng.uniform(-cfg.shift, cfg.shift);
  const double brightness = rng.uniform(-cfg.shift, cfg.shift);

  if (cfg.warp > 0) {
    const double w = kImageW - 1, h = kImageH - 1;
    std::array<std::array<double, 2>, 4> src{{{0, 0}, {w, 0}, {w, h}, {0, h}}};
    std::array<std::array<double, 2>, 4> dst = src;
    for (int i = 0; i < 4; ++i) {
      dst[i][0] += disp[i][0];
      dst[i][1] += disp[i][1];
    }
    img = imgops::warp_perspective(img, imgops::homography_dst_to_src(dst, src));
  }
  if (blur > 0) img = imgops::gaussian_blur(img, blur);
  if (noise > 0) {
    for (long i = 0; i < img.size(); ++i) img(i) += noise * rng.normal();
    img = imgops::clamp01(std::move(img));
  }
  if (opacity > 0) {
    MatXd tex = imgops::value_noise<double>(kImageH, kImageW, cell, rng);
    img = (1.0 - opacity) * img + opacity * tex;
  }
  if (cfg.shift > 0) {
    img = ((img.array() - 0.5) * contrast + 0.5 + brightness).matrix();
    img = imgops::clamp01(std::move(img));
  }
  return ImageSample{std::move(img), text, Domain::kPerturbed};
}

}  // namespace ccrseq
