#pragma once

// Flat INI-style configuration: `key = value` lines, '#'/';' comments.
// TrainSettings resolves file keys over defaults; variants are presets
// applied before file/CLI overrides.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ccrseq/augment.hpp"
#include "ccrseq/losses.hpp"

namespace ccrseq {

class KeyValueConfig {
 public:
  static KeyValueConfig from_string(const std::string& text);
  static KeyValueConfig from_file(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  // Canonical serialization: sorted `key = value` lines.
  std::string serialize() const;

 private:
  std::map<std::string, std::string> values_;
};

enum class Variant {
  kFull,
  kSupervisedOnly,
  kScr,
  kNoEma,
  kNoWd,
  kNoProj,
  kNoDa,
};

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& s);

struct TrainSettings {
  // trainer
  double alpha = 0.999;
  int batch_labeled = 64;
  int batch_unlabeled = 48;
  long steps = 10000;
  double max_lr = 1e-3;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  long eval_every = 200;
  int probe_size = 64;
  long ema_warmup_steps = 0;  // target copies online until this step
  bool use_projection = true;
  bool scr_mode = false;           // independent decoder feedback in unsup branch
  bool scr_shared_context = false; // forces paired decode back on (SCR -> FULL)

  LossConfig loss;
  augment::WeakParams weak;
  augment::StrongParams strong;

  // baselines
  int ns_iterations = 3;
  long pl_relabel_every = 0;  // 0 = one labeled-epoch worth of steps

  static TrainSettings resolve(const KeyValueConfig& file, Variant variant);
  void apply(const KeyValueConfig& cfg);

  // Canonical flat snapshot of every setting (stored in checkpoints, hashed
  // for run caching).
  KeyValueConfig to_config() const;
  std::string config_hash() const;
};

void apply_variant(TrainSettings& s, Variant v);

}  // namespace ccrseq
