#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ccrseq/image.hpp"

namespace ccrseq {

struct ManifestRecord {
  std::string path;  // relative to the manifest's directory
  std::optional<std::string> label;
  Domain domain = Domain::kClean;
};

struct Manifest {
  uint64_t seed = 0;
  std::vector<ManifestRecord> records;
};

// One record per line, `path\tlabel-or-"-"\tCLEAN|PERTURBED`, preceded by
// a `#ccr-seq-manifest v1 seed=<int>` header.
void write_manifest(const std::string& file, const Manifest& m);
Manifest read_manifest(const std::string& file);

// Merges labels from `answers` into label-less records of `m`, matching by
// path; throws if any record stays unlabeled.
void apply_answers(Manifest& m, const Manifest& answers);

}  // namespace ccrseq
