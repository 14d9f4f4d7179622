#pragma once

// In-memory dataset: manifest records resolved to quantized pixel rows.
// Images stay as bytes until a consumer converts them to a scalar grid,
// so augmentation and training see identical inputs on every run.

#include <filesystem>
#include <string>
#include <vector>

#include "ccrseq/image.hpp"
#include "ccrseq/manifest.hpp"

namespace ccrseq {

struct LoadedSample {
  std::vector<std::uint8_t> pixels;  // kImageH*kImageW, row-major
  std::string label;                 // empty when unlabeled
  bool has_label = false;
  Domain domain = Domain::kClean;
};

struct LoadedSplit {
  std::vector<LoadedSample> samples;
  std::uint64_t manifest_seed = 0;

  bool empty() const { return samples.empty(); }
  long size() const { return static_cast<long>(samples.size()); }
};

// Loads every image of a manifest; paths resolve relative to the manifest
// file. With a non-empty answers path, labels merge in before loading.
LoadedSplit load_split(const std::string& manifest_file, const std::string& answers_file = "");

// [0,1] grid view of one sample.
inline ImageSample to_image(const LoadedSample& s) {
  return ImageSample{bytes_to_grid<double>(s.pixels, kImageH, kImageW),
                     s.has_label ? std::optional<std::string>(s.label) : std::nullopt, s.domain};
}

}  // namespace ccrseq
