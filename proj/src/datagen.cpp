#include "ccrseq/datagen.hpp"

#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "ccrseq/charset.hpp"
#include "ccrseq/manifest.hpp"
#include "ccrseq/png_io.hpp"

namespace fs = std::filesystem;

namespace ccrseq {
namespace {

constexpr uint64_t kTextStream = 0x74657874ULL;  // "text"

std::vector<std::string> sample_unique_strings(const GenerationConfig& cfg, long count) {
  Rng rng(mix_seed(cfg.seed, kTextStream));
  std::unordered_set<std::string> seen;
  std::vector<std::string> out;
  out.reserve(count);
  long attempts = 0, max_attempts = 200 * count + 1000;
  while (static_cast<long>(out.size()) < count) {
    if (++attempts > max_attempts)
      throw std::runtime_error("string sampling stalled; requested count too close to capacity");
    int len = static_cast<int>(rng.uniform_int(cfg.min_len, cfg.max_len));
    std::string s(len, '\0');
    for (int i = 0; i < len; ++i)
      s[i] = charset::char_at(static_cast<int>(rng.uniform_int(0, charset::kNumChars - 1)));
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

struct SplitSpec {
  const char* name;
  long count;
  Domain domain;
  bool labeled;  // whether the trainer-visible manifest carries labels
};

}  // namespace

uint64_t string_capacity(int min_len, int max_len) {
  constexpr uint64_t kCap = 1ULL << 62;
  uint64_t total = 0;
  for (int len = min_len; len <= max_len; ++len) {
    uint64_t n = 1;
    for (int i = 0; i < len; ++i) {
      if (n > kCap / charset::kNumChars) return kCap;
      n *= charset::kNumChars;
    }
    total += n;
    if (total > kCap) return kCap;
  }
  return total;
}

CorpusPaths corpus_paths(const std::string& dir) {
  CorpusPaths p;
  p.dir = dir;
  p.train_labeled = dir + "/train_labeled.tsv";
  p.train_unlabeled = dir + "/train_unlabeled.tsv";
  p.test_clean = dir + "/test_clean.tsv";
  p.test_perturbed = dir + "/test_perturbed.tsv";
  p.test_perturbed_answers = dir + "/test_perturbed.answers.tsv";
  return p;
}

CorpusPaths build_corpus(const GenerationConfig& cfg) {
  if (cfg.labeled < 0 || cfg.unlabeled < 0 || cfg.test_per_domain < 0)
    throw std::invalid_argument("corpus counts must be nonnegative");
  if (cfg.min_len < 1 || cfg.max_len > 12 || cfg.min_len > cfg.max_len)
    throw std::invalid_argument("string length range must lie within 1..12");
  const long total = cfg.labeled + cfg.unlabeled + 2 * cfg.test_per_domain;
  if (static_cast<uint64_t>(total) > string_capacity(cfg.min_len, cfg.max_len))
    throw std::invalid_argument("requested corpus size exceeds unique-string capacity");

  std::vector<std::string> texts = sample_unique_strings(cfg, total);
  const SplitSpec splits[] = {
      {"train_labeled", cfg.labeled, cfg.labeled_domain, true},
      {"train_unlabeled", cfg.unlabeled, cfg.unlabeled_domain, false},
      {"test_clean", cfg.test_per_domain, Domain::kClean, true},
      {"test_perturbed", cfg.test_per_domain, Domain::kPerturbed, false},
  };

  CorpusPaths paths = corpus_paths(cfg.out_dir);
  fs::create_directories(cfg.out_dir);
  long offset = 0;
  for (const SplitSpec& sp : splits) {
    fs::create_directories(fs::path(cfg.out_dir) / "images" / sp.name);
    Manifest visible, answers;
    visible.seed = answers.seed = cfg.seed;
    const uint64_t split_tag = fnv1a64(sp.name);
    for (long i = 0; i < sp.count; ++i) {
      const std::string& text = texts[offset + i];
      uint64_t rseed = mix_seed(cfg.seed, split_tag, static_cast<uint64_t>(i));
      ImageSample img = sp.domain == Domain::kClean
                            ? render_clean(text, rseed)
                            : render_perturbed(text, rseed, cfg.perturb);
      char name[32];
      std::snprintf(name, sizeof name, "%06ld.png", i);
      std::string rel = std::string("images/") + sp.name + "/" + name;
      write_png_gray8(cfg.out_dir + "/" + rel, grid_to_bytes(img.pixels), kImageW, kImageH);
      visible.records.push_back({rel, sp.labeled ? std::optional<std::string>(text) : std::nullopt,
                                 sp.domain});
      answers.records.push_back({rel, text, sp.domain});
    }
    offset += sp.count;
    write_manifest(cfg.out_dir + "/" + sp.name + ".tsv", visible);
    if (!sp.labeled && std::string(sp.name) == "test_perturbed")
      write_manifest(paths.test_perturbed_answers, answers);
  }
  return paths;
}

}  // namespace ccrseq
