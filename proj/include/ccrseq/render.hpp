#pragma once

#include <cstdint>
#include <string>

#include "ccrseq/image.hpp"

namespace ccrseq {

// Upper bounds for the per-image perturbation draws; zeros disable a stage
// outright so an all-zero config reproduces the clean render bit-exactly.
struct PerturbConfig {
  double warp = 0.0;             // max corner displacement, fraction of each dimension
  double blur_sigma = 0.0;       // max Gaussian sigma, px
  double noise_sigma = 0.0;      // max additive-noise sigma
  double texture_opacity = 0.0;  // max background-texture blend weight
  double shift = 0.0;            // max contrast/brightness excursion

  static PerturbConfig off() { return {}; }
  static PerturbConfig defaults() { return {0.10, 1.0, 0.05, 0.25, 0.18}; }
  static PerturbConfig strong() { return {0.15, 1.5, 0.08, 0.35, 0.25}; }
};

// Accepts "off", "default", "strong".
PerturbConfig perturb_preset(const std::string& name);

// Deterministic in (text, seed): light background, dark glyphs in one of the
// built-in font styles, seeded scale/kerning/placement jitter.
ImageSample render_clean(const std::string& text, uint64_t seed);

// Clean render for the same (text, seed) plus a seeded perturbation stack:
// perspective warp, blur, additive noise, texture blend, contrast/brightness.
ImageSample render_perturbed(const std::string& text, uint64_t seed,
                             const PerturbConfig& cfg = PerturbConfig::defaults());

}  // namespace ccrseq
