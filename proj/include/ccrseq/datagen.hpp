#pragma once

#include <cstdint>
#include <string>

#include "ccrseq/image.hpp"
#include "ccrseq/render.hpp"

namespace ccrseq {

struct GenerationConfig {
  std::string out_dir;
  long labeled = 20000;
  long unlabeled = 20000;
  long test_per_domain = 2000;
  int min_len = 1;
  int max_len = 12;
  uint64_t seed = 0;
  PerturbConfig perturb = PerturbConfig::defaults();
  // The standard corpus pairs clean labels with perturbed unlabeled data;
  // flipping labeled_domain builds an in-domain (all-perturbed) corpus.
  Domain labeled_domain = Domain::kClean;
  Domain unlabeled_domain = Domain::kPerturbed;
};

struct CorpusPaths {
  std::string dir;
  std::string train_labeled;
  std::string train_unlabeled;
  std::string test_clean;
  std::string test_perturbed;
  std::string test_perturbed_answers;
};

// Number of distinct strings available for the length range, saturated.
uint64_t string_capacity(int min_len, int max_len);

// Renders all four splits under cfg.out_dir and writes their manifests.
// Strings are globally unique, so train and test never share a string.
CorpusPaths build_corpus(const GenerationConfig& cfg);

// Standard manifest locations inside an existing corpus directory.
CorpusPaths corpus_paths(const std::string& dir);

}  // namespace ccrseq
