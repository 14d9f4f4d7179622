#pragma once

// Run matrices behind the paper-shaped comparison tables: model units,
// CCR vs SCR, consistency distances, SSL methods, and domain settings.
// Every cell is a full training run, cached on disk by (settings, method,
// corpus), so regenerating a report never re-runs finished training.

#include <cstdint>
#include <string>
#include <vector>

#include "ccrseq/config.hpp"

namespace ccrseq {

enum class Suite { kUnits, kCcrVsScr, kDistances, kSslMethods, kDomainSettings };

const char* suite_name(Suite s);
Suite suite_from_name(const std::string& s);

struct AblationCell {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double clean = 0, pert = 0, avg = 0;  // final-checkpoint metrics
  long collapse_step = -1;
  // after best-before-collapse selection; equal to final when never collapsed
  double sel_clean = 0, sel_pert = 0, sel_avg = 0;
};

struct AblationRowResult {
  std::string label;
  std::vector<AblationCell> cells;
  double mean_sel_avg = 0;
  double range_sel_avg = 0;  // max - min over seeds
  bool any_failed = false;
};

struct AblationReport {
  Suite suite = Suite::kUnits;
  std::vector<AblationRowResult> rows;
  bool any_failed = false;
  std::string table_tsv;  // machine-readable, written next to the summary
  std::string summary;    // human-readable
};

// Executes (or reuses) the suite's run matrix under out_dir/runs and writes
// out_dir/ablation_<suite>.{tsv,txt}. DOMAIN_SETTINGS expects corpus_dir to
// contain cross/ and indomain/ corpora; the other suites use corpus_dir
// directly.
template <class S>
AblationReport run_ablation_suite(Suite suite, const TrainSettings& base,
                                  const std::string& corpus_dir,
                                  const std::vector<std::uint64_t>& seeds,
                                  const std::string& out_dir);

extern template AblationReport run_ablation_suite<float>(Suite, const TrainSettings&,
                                                         const std::string&,
                                                         const std::vector<std::uint64_t>&,
                                                         const std::string&);
extern template AblationReport run_ablation_suite<double>(Suite, const TrainSettings&,
                                                          const std::string&,
                                                          const std::vector<std::uint64_t>&,
                                                          const std::string&);

}  // namespace ccrseq
