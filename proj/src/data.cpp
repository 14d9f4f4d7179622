#include "ccrseq/data.hpp"

#include <stdexcept>

#include "ccrseq/png_io.hpp"

namespace ccrseq {

LoadedSplit load_split(const std::string& manifest_file, const std::string& answers_file) {
  Manifest m = read_manifest(manifest_file);
  if (!answers_file.empty()) apply_answers(m, read_manifest(answers_file));
  const std::filesystem::path base = std::filesystem::path(manifest_file).parent_path();

  LoadedSplit split;
  split.manifest_seed = m.seed;
  split.samples.reserve(m.records.size());
  for (const auto& r : m.records) {
    Gray8Image img = read_png_gray8(base / r.path);
    if (img.width != kImageW || img.height != kImageH)
      throw std::runtime_error("unexpected image size in " + r.path);
    LoadedSample s;
    s.pixels = std::move(img.pixels);
    s.has_label = r.label.has_value();
    if (r.label) s.label = *r.label;
    s.domain = r.domain;
    split.samples.push_back(std::move(s));
  }
  return split;
}

}  // namespace ccrseq
