#pragma once

// Reference SSL strategies on the shared corpus/trace plumbing: pseudo
// labeling with per-epoch relabeling, iterative noisy-student re-training,
// and standard (independently decoded) consistency regularization.

#include "ccrseq/trainer.hpp"

namespace ccrseq {

struct PseudoLabel {
  long index = 0;  // position in the unlabeled split
  std::string label;
  double score = 0;
};

// Plain-inference predictions over the unlabeled split; keeps decodes whose
// confidence clears beta_u strictly and whose length fits the decoder.
template <class S>
std::vector<PseudoLabel> pseudo_label_pool(const ModelParams<S>& p, const LoadedSplit& unlabeled,
                                           const LossConfig& loss, AugUsage* audit = nullptr) {
  std::vector<PseudoLabel> out;
  for (long i = 0; i < unlabeled.size(); ++i) {
    MatX<S> img = bytes_to_grid<S>(unlabeled.samples[i].pixels, kImageH, kImageW);
    DecodeOutput<S> dec = decode_inference(p, encode(p, img));
    if (audit) ++audit->plain_inference;
    const double score = static_cast<double>(
        loss.length_norm_confidence ? confidence_score(dec.dists, true) : dec.confidence);
    if (!(score > loss.beta_u)) continue;
    std::string text = charset::decode(dec.dists.tokens);
    if (text.empty() || static_cast<int>(text.size()) + 1 > kTMax) continue;
    out.push_back(PseudoLabel{i, std::move(text), score});
  }
  return out;
}

// Supervised training over labeled ∪ accepted pseudo-labels, the pseudo set
// regenerated every `pl_relabel_every` steps (default: one labeled epoch).
template <class S>
RunResult<S> run_pseudo_label(const TrainSettings& cfg, const TrainData& data,
                              const std::string& out_dir, AugUsage* audit = nullptr) {
  TrainSettings sup = cfg;
  sup.loss.lambda_cons = 0;
  sup.loss.lambda_da = 0;
  sup.loss.validate();
  if (data.labeled.empty()) throw std::invalid_argument("run_pseudo_label: no labeled data");
  std::filesystem::create_directories(out_dir);

  TrainState<S> st = TrainState<S>::init(sup);
  OneCycleSchedule sched;
  sched.max_lr = sup.max_lr;
  sched.total_steps = std::max(1L, sup.steps);
  TraceWriter trace(out_dir + "/trace.jsonl");

  std::vector<const LoadedSample*> probe = detail::probe_samples(data.unlabeled, sup.probe_size);
  const bool probe_ok = probe.size() >= 50;
  const std::vector<std::pair<std::string, const LoadedSplit*>> eval_splits = {
      {"test_clean", &data.test_clean}, {"test_perturbed", &data.test_perturbed}};

  const long relabel_every =
      sup.pl_relabel_every > 0
          ? sup.pl_relabel_every
          : std::max<long>(1, (data.labeled.size() + sup.batch_labeled - 1) / sup.batch_labeled);

  std::vector<LoadedSample> pseudo_store;
  std::vector<const LoadedSample*> pool;
  double accepted_fraction = 0;
  auto rebuild_pool = [&]() {
    std::vector<PseudoLabel> pl = pseudo_label_pool(st.online, data.unlabeled, sup.loss, audit);
    pseudo_store.clear();
    pseudo_store.reserve(pl.size());
    for (const PseudoLabel& q : pl) {
      LoadedSample ns = data.unlabeled.samples[q.index];
      ns.label = q.label;
      ns.has_label = true;
      pseudo_store.push_back(std::move(ns));
    }
    pool.clear();
    pool.reserve(data.labeled.size() + pseudo_store.size());
    for (const auto& s : data.labeled.samples) pool.push_back(&s);
    for (const auto& s : pseudo_store) pool.push_back(&s);
    accepted_fraction =
        data.unlabeled.empty() ? 0.0 : static_cast<double>(pl.size()) / data.unlabeled.size();
  };

  RunResult<S> result;
  MetricsRecord metrics;
  bool evaluated = false;
  for (long k = 0; k < sup.steps; ++k) {
    if (k % relabel_every == 0) rebuild_pool();
    Rng rng(mix_seed(sup.seed, batch_labeled_tag(), k));
    std::vector<const LoadedSample*> batch(sup.batch_labeled);
    const int last = static_cast<int>(pool.size()) - 1;
    for (auto& b : batch) b = pool[rng.uniform_int(0, last)];
    StepStats stats = train_step(st, sup, batch, {}, sched.lr_at(k), audit);

    const long done = k + 1;
    if ((sup.eval_every > 0 && done % sup.eval_every == 0) || done == sup.steps) {
      metrics = evaluate(st.online, eval_splits);
      evaluated = true;
      double uniq = 1.0;
      if (probe_ok) {
        CollapseReport rep = detect_collapse(st.online, probe, audit);
        uniq = rep.unique_fraction;
        if (rep.collapsed() && result.collapse_first_step < 0) result.collapse_first_step = done;
      }
      TraceRecord rec;
      rec.step = done;
      rec.l_reg = stats.l_reg;
      rec.l_total = stats.l_total;
      rec.filtered_fraction = 1.0 - accepted_fraction;
      rec.test_clean_acc = metrics.accuracy_of("test_clean");
      rec.test_perturbed_acc = metrics.accuracy_of("test_perturbed");
      rec.unique_fraction = uniq;
      trace.append(rec);
      result.trace.push_back(rec);
    }
  }
  if (!evaluated) metrics = evaluate(st.online, eval_splits);

  metrics.variant = "PL";
  metrics.seed = sup.seed;
  metrics.config_hash = sup.config_hash();
  result.final_metrics = metrics;
  write_metrics_file(out_dir + "/metrics.txt", metrics);

  result.checkpoint.online = std::move(st.online);
  result.checkpoint.target = std::move(st.target);
  result.checkpoint.config_text = sup.to_config().serialize();
  result.checkpoint.step = static_cast<std::uint64_t>(st.step);
  save_checkpoint(out_dir + "/final.ckpt", result.checkpoint);
  return result;
}

template <class S>
struct NsResult {
  RunResult<S> final_run;
  std::vector<std::string> checkpoints;  // teacher, then one per student iteration
  std::vector<long> accepted;            // pseudo-label count per iteration
};

// Teacher trains supervised-only; each iteration a freshly initialized
// student trains on labeled ∪ teacher-labeled data (plain inputs for
// labeling, strong augmentation during training) and becomes the teacher.
template <class S>
NsResult<S> run_noisy_student(const TrainSettings& cfg, const TrainData& data,
                              const std::string& out_dir, AugUsage* audit = nullptr) {
  if (cfg.ns_iterations < 1)
    throw std::invalid_argument("run_noisy_student: ns_iterations must be >= 1");
  TrainSettings sup = cfg;
  sup.loss.lambda_cons = 0;
  sup.loss.lambda_da = 0;
  std::filesystem::create_directories(out_dir);

  NsResult<S> res;
  RunResult<S> teacher = run_training<S>(sup, data, "NS_TEACHER", out_dir + "/teacher", audit);
  res.checkpoints.push_back(out_dir + "/teacher/final.ckpt");
  ModelParams<S> teacher_params = teacher.checkpoint.online;

  for (int it = 1; it <= cfg.ns_iterations; ++it) {
    std::vector<PseudoLabel> pl = pseudo_label_pool(teacher_params, data.unlabeled, sup.loss, audit);
    res.accepted.push_back(static_cast<long>(pl.size()));

    TrainData uni;
    uni.labeled = data.labeled;
    for (const PseudoLabel& q : pl) {
      LoadedSample ns = data.unlabeled.samples[q.index];
      ns.label = q.label;
      ns.has_label = true;
      uni.labeled.samples.push_back(std::move(ns));
    }
    uni.unlabeled = data.unlabeled;
    uni.test_clean = data.test_clean;
    uni.test_perturbed = data.test_perturbed;

    const std::string dir = out_dir + "/student_" + std::to_string(it);
    RunResult<S> student =
        run_training<S>(sup, uni, "NS_STUDENT_" + std::to_string(it), dir, audit);
    res.checkpoints.push_back(dir + "/final.ckpt");
    teacher_params = student.checkpoint.online;
    res.final_run = std::move(student);
  }

  // surface the last student at the top level for plotting/reporting
  MetricsRecord metrics = res.final_run.final_metrics;
  metrics.variant = "NS";
  write_metrics_file(out_dir + "/metrics.txt", metrics);
  TraceWriter trace(out_dir + "/trace.jsonl");
  for (const TraceRecord& rec : res.final_run.trace) trace.append(rec);
  res.final_run.final_metrics = metrics;
  return res;
}

// Standard consistency regularization: the unsupervised decoders feed on
// their own outputs; everything else matches the full trainer.
template <class S>
RunResult<S> run_scr(const TrainSettings& cfg, const TrainData& data, const std::string& out_dir,
                     AugUsage* audit = nullptr) {
  TrainSettings s = cfg;
  s.scr_mode = true;
  return run_training<S>(s, data, s.scr_shared_context ? "SCR_SHARED" : "SCR", out_dir, audit);
}

}  // namespace ccrseq
