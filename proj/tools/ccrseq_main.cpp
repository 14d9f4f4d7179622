// Command-line front end: datagen, train, baseline, eval, ablate, plot.

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ccrseq/ablation.hpp"
#include "ccrseq/baselines.hpp"
#include "ccrseq/datagen.hpp"
#include "ccrseq/plot.hpp"
#include "ccrseq/trainer.hpp"

namespace fs = std::filesystem;
using namespace ccrseq;

namespace {

TrainSettings settings_from(const std::string& config_file, const std::string& variant,
                            std::int64_t seed_override) {
  KeyValueConfig file;
  if (!config_file.empty()) file = KeyValueConfig::from_file(config_file);
  TrainSettings s = TrainSettings::resolve(file, variant_from_name(variant));
  if (seed_override >= 0) s.seed = static_cast<std::uint64_t>(seed_override);
  return s;
}

// Loads a manifest for evaluation, merging `<stem>.answers.tsv` when the
// manifest itself is label-sealed.
LoadedSplit load_eval_split(const std::string& manifest) {
  Manifest m = read_manifest(manifest);
  bool sealed = false;
  for (const auto& r : m.records) sealed = sealed || !r.label.has_value();
  if (!sealed) return load_split(manifest);
  std::string answers = manifest;
  const std::string suffix = ".tsv";
  if (answers.size() >= suffix.size() &&
      answers.compare(answers.size() - suffix.size(), suffix.size(), suffix) == 0)
    answers = answers.substr(0, answers.size() - suffix.size()) + ".answers.tsv";
  else
    answers += ".answers.tsv";
  if (!fs::exists(answers))
    throw std::runtime_error("missing answer manifest for " + manifest + " (wanted " + answers +
                             ")");
  return load_split(manifest, answers);
}

std::string plot_label_for(const std::string& trace_path) {
  const fs::path dir = fs::path(trace_path).parent_path();
  std::string label;
  if (fs::exists(dir / "metrics.txt")) {
    MetricsRecord m = read_metrics_file((dir / "metrics.txt").string());
    label = m.variant + " s" + std::to_string(m.seed);
  } else {
    label = dir.filename().string();
    if (label.empty()) label = fs::path(trace_path).stem().string();
  }
  for (char& c : label) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (c == '_') c = '-';
  }
  return label;
}

template <class S>
int run_train(const TrainSettings& s, const std::string& corpus, const std::string& variant,
              const std::string& out) {
  TrainData data = load_train_data(corpus);
  RunResult<S> r = run_training<S>(s, data, variant, out);
  std::cout << metrics_to_text(r.final_metrics);
  if (r.collapse_first_step >= 0)
    std::cout << "collapse_first_step = " << r.collapse_first_step << "\n";
  return 0;
}

template <class S>
int run_baseline(const TrainSettings& s, const std::string& method, const std::string& corpus,
                 const std::string& out) {
  TrainData data = load_train_data(corpus);
  MetricsRecord metrics;
  if (method == "pl") {
    metrics = run_pseudo_label<S>(s, data, out).final_metrics;
  } else if (method == "ns") {
    NsResult<S> r = run_noisy_student<S>(s, data, out);
    metrics = r.final_run.final_metrics;
    std::cout << "pseudo-labels accepted per iteration:";
    for (long n : r.accepted) std::cout << " " << n;
    std::cout << "\n";
  } else if (method == "scr") {
    metrics = run_scr<S>(s, data, out).final_metrics;
  } else {
    throw std::invalid_argument("unknown baseline method: " + method + " (expected pl|ns|scr)");
  }
  std::cout << metrics_to_text(metrics);
  return 0;
}

template <class S>
int run_eval(const std::string& ckpt_path, const std::vector<std::string>& manifests,
             const std::string& out_file) {
  Checkpoint<S> ck = load_checkpoint<S>(ckpt_path);
  std::vector<LoadedSplit> splits;
  splits.reserve(manifests.size());
  std::vector<std::pair<std::string, const LoadedSplit*>> named;
  for (const std::string& m : manifests) splits.push_back(load_eval_split(m));
  for (size_t i = 0; i < manifests.size(); ++i)
    named.emplace_back(fs::path(manifests[i]).stem().string(), &splits[i]);
  MetricsRecord rec = evaluate(ck.online, named);
  TrainSettings s;
  s.apply(KeyValueConfig::from_string(ck.config_text));
  rec.variant = "-";
  rec.seed = s.seed;
  rec.config_hash = s.config_hash();
  std::cout << metrics_to_text(rec);
  if (!out_file.empty()) write_metrics_file(out_file, rec);
  return 0;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::string cur;
  for (char c : text + ",") {
    if (c == ',') {
      if (!cur.empty()) seeds.push_back(std::stoull(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (seeds.empty()) throw std::invalid_argument("--seeds: expected a comma-separated list");
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"character-consistency semi-supervised sequence recognition toolkit"};
  app.require_subcommand(1);

  // datagen
  auto* gen = app.add_subcommand("datagen", "generate a rendered text corpus");
  GenerationConfig gen_cfg;
  std::string perturb = "default", labeled_domain = "CLEAN";
  long gen_seed = 0;
  gen->add_option("--out", gen_cfg.out_dir, "output corpus directory")->required();
  gen->add_option("--labeled", gen_cfg.labeled, "labeled training images");
  gen->add_option("--unlabeled", gen_cfg.unlabeled, "unlabeled training images");
  gen->add_option("--test", gen_cfg.test_per_domain, "images per test split");
  gen->add_option("--seed", gen_seed, "generation seed");
  gen->add_option("--perturb-strength", perturb, "off|default|strong");
  gen->add_option("--labeled-domain", labeled_domain,
                  "CLEAN (cross-domain) or PERTURBED (in-domain labeled data)");

  // train
  auto* tr = app.add_subcommand("train", "run the semi-supervised trainer");
  std::string tr_config, tr_corpus, tr_variant = "FULL", tr_out = "run", tr_scalar = "double";
  std::int64_t tr_seed = -1;
  tr->add_option("--config", tr_config, "flat key=value config file");
  tr->add_option("--corpus", tr_corpus, "corpus directory")->required();
  tr->add_option("--variant", tr_variant,
                 "FULL|SUPERVISED_ONLY|SCR|NO_EMA|NO_WD|NO_PROJ|NO_DA");
  tr->add_option("--out", tr_out, "output run directory")->required();
  tr->add_option("--seed", tr_seed, "seed override");
  tr->add_option("--scalar", tr_scalar, "double|float");

  // baseline
  auto* bl = app.add_subcommand("baseline", "run a reference SSL method");
  std::string bl_method, bl_config, bl_corpus, bl_out = "baseline_run", bl_scalar = "double";
  std::int64_t bl_seed = -1;
  bl->add_option("--method", bl_method, "pl|ns|scr")->required();
  bl->add_option("--config", bl_config, "flat key=value config file");
  bl->add_option("--corpus", bl_corpus, "corpus directory")->required();
  bl->add_option("--out", bl_out, "output run directory")->required();
  bl->add_option("--seed", bl_seed, "seed override");
  bl->add_option("--scalar", bl_scalar, "double|float");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on manifests");
  std::string ev_ckpt, ev_out;
  std::vector<std::string> ev_manifests;
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
  ev->add_option("--manifests", ev_manifests, "manifest files")->required()->expected(-1);
  ev->add_option("--out", ev_out, "also write the metrics file here");

  // ablate
  auto* ab = app.add_subcommand("ablate", "run a comparison-table suite");
  std::string ab_suite, ab_config, ab_corpus, ab_out = "ablation", ab_seeds = "1",
              ab_scalar = "double";
  ab->add_option("--suite", ab_suite, "UNITS|CCR_VS_SCR|DISTANCES|SSL_METHODS|DOMAIN_SETTINGS")
      ->required();
  ab->add_option("--config", ab_config, "flat key=value config file");
  ab->add_option("--corpus", ab_corpus, "corpus directory")->required();
  ab->add_option("--seeds", ab_seeds, "comma-separated seed list");
  ab->add_option("--out", ab_out, "report/run cache directory");
  ab->add_option("--scalar", ab_scalar, "double|float");

  // plot
  auto* pl = app.add_subcommand("plot", "render trace figures");
  std::vector<std::string> pl_traces, pl_labels;
  std::string pl_out = "plot_";
  pl->add_option("--traces", pl_traces, "trace files")->required()->expected(-1);
  pl->add_option("--labels", pl_labels, "one legend label per trace");
  pl->add_option("--out", pl_out, "output path prefix");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      gen_cfg.seed = static_cast<std::uint64_t>(gen_seed);
      gen_cfg.perturb = perturb_preset(perturb);
      if (labeled_domain == "PERTURBED")
        gen_cfg.labeled_domain = Domain::kPerturbed;
      else if (labeled_domain != "CLEAN")
        throw std::invalid_argument("--labeled-domain must be CLEAN or PERTURBED");
      CorpusPaths paths = build_corpus(gen_cfg);
      std::cout << "corpus written to " << paths.dir << "\n";
      return 0;
    }
    if (tr->parsed()) {
      TrainSettings s = settings_from(tr_config, tr_variant, tr_seed);
      return tr_scalar == "float" ? run_train<float>(s, tr_corpus, tr_variant, tr_out)
                                  : run_train<double>(s, tr_corpus, tr_variant, tr_out);
    }
    if (bl->parsed()) {
      TrainSettings s = settings_from(bl_config, "FULL", bl_seed);
      return bl_scalar == "float" ? run_baseline<float>(s, bl_method, bl_corpus, bl_out)
                                  : run_baseline<double>(s, bl_method, bl_corpus, bl_out);
    }
    if (ev->parsed()) {
      return checkpoint_dtype(ev_ckpt) == 4 ? run_eval<float>(ev_ckpt, ev_manifests, ev_out)
                                            : run_eval<double>(ev_ckpt, ev_manifests, ev_out);
    }
    if (ab->parsed()) {
      TrainSettings base = settings_from(ab_config, "FULL", -1);
      Suite suite = suite_from_name(ab_suite);
      std::vector<std::uint64_t> seeds = parse_seed_list(ab_seeds);
      AblationReport rep =
          ab_scalar == "float"
              ? run_ablation_suite<float>(suite, base, ab_corpus, seeds, ab_out)
              : run_ablation_suite<double>(suite, base, ab_corpus, seeds, ab_out);
      std::cout << rep.summary;
      return rep.any_failed ? 1 : 0;
    }
    if (pl->parsed()) {
      if (pl_labels.empty())
        for (const std::string& t : pl_traces) pl_labels.push_back(plot_label_for(t));
      plot_traces(pl_traces, pl_labels, pl_out);
      std::cout << "figures written with prefix " << pl_out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
