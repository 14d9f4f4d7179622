#pragma once

// Word-accuracy evaluation: greedy inference decoding, exact case-insensitive
// alphanumeric match, per-split accuracies plus an Avg over the union of all
// evaluated samples (total correct / total count, not the mean of splits).

#include <cctype>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ccrseq/data.hpp"
#include "ccrseq/decoder.hpp"
#include "ccrseq/encoder.hpp"

namespace ccrseq {

struct SplitMetrics {
  std::string name;
  long correct = 0;
  long total = 0;

  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

struct MetricsRecord {
  std::vector<SplitMetrics> splits;
  long union_correct = 0;
  long union_total = 0;
  // run metadata
  std::string variant;
  std::uint64_t seed = 0;
  std::string config_hash;

  double avg() const {
    return union_total == 0 ? 0.0 : static_cast<double>(union_correct) / union_total;
  }
  const SplitMetrics* find(const std::string& name) const {
    for (const auto& s : splits)
      if (s.name == name) return &s;
    return nullptr;
  }
  double accuracy_of(const std::string& name) const {
    const SplitMetrics* s = find(name);
    if (!s) throw std::invalid_argument("metrics: no split named " + name);
    return s->accuracy();
  }
};

// Lowercased, alphanumerics only; everything else dropped before matching.
inline std::string normalize_label(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s)
    if (std::isalnum(static_cast<unsigned char>(c)))
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

// Greedy decode of one sample with the supervised-branch (no-projection) path.
template <class S>
std::string predict_string(const ModelParams<S>& p, const LoadedSample& sample) {
  MatX<S> img = bytes_to_grid<S>(sample.pixels, kImageH, kImageW);
  MatX<S> f = encode(p, img);
  DecodeOutput<S> out = decode_inference(p, f);
  return charset::decode(out.dists.tokens);
}

template <class S>
SplitMetrics evaluate_split(const ModelParams<S>& p, const std::string& name,
                            const LoadedSplit& split) {
  SplitMetrics m;
  m.name = name;
  for (const auto& sample : split.samples) {
    if (!sample.has_label)
      throw std::invalid_argument("evaluate: unlabeled sample in split " + name +
                                  " (answer manifest missing?)");
    ++m.total;
    if (predict_string(p, sample) == normalize_label(sample.label)) ++m.correct;
  }
  return m;
}

template <class S>
MetricsRecord evaluate(const ModelParams<S>& p,
                       const std::vector<std::pair<std::string, const LoadedSplit*>>& splits) {
  MetricsRecord rec;
  for (const auto& [name, split] : splits) {
    rec.splits.push_back(evaluate_split(p, name, *split));
    rec.union_correct += rec.splits.back().correct;
    rec.union_total += rec.splits.back().total;
  }
  return rec;
}

// Versioned key-value rendering / parsing of a MetricsRecord.
std::string metrics_to_text(const MetricsRecord& rec);
MetricsRecord metrics_from_text(const std::string& text);
MetricsRecord read_metrics_file(const std::string& path);
void write_metrics_file(const std::string& path, const MetricsRecord& rec);

}  // namespace ccrseq
