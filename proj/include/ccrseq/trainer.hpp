#pragma once

// Joint semi-supervised training loop: a supervised branch (strong-augmented
// labeled data, teacher forcing) and an unsupervised branch (weak view into
// the EMA target, strong view into the online model + projection), tied
// together by the gated consistency loss and the covariance-matching domain
// adaptation loss. The target model only ever changes through ema_update.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccrseq/augment.hpp"
#include "ccrseq/config.hpp"
#include "ccrseq/data.hpp"
#include "ccrseq/datagen.hpp"
#include "ccrseq/decoder.hpp"
#include "ccrseq/editdist.hpp"
#include "ccrseq/encoder.hpp"
#include "ccrseq/evalharness.hpp"
#include "ccrseq/losses.hpp"
#include "ccrseq/optimizer.hpp"
#include "ccrseq/trace.hpp"

namespace ccrseq {

// Seed-stream tags; every random draw hangs off (seed, tag, step[, slot]).
inline std::uint64_t batch_labeled_tag() { return fnv1a64("batch-l"); }
inline std::uint64_t batch_unlabeled_tag() { return fnv1a64("batch-u"); }
inline std::uint64_t aug_supervised_tag() { return fnv1a64("aug-sup"); }
inline std::uint64_t aug_weak_tag() { return fnv1a64("aug-weak"); }
inline std::uint64_t aug_unsup_tag() { return fnv1a64("aug-unsup"); }

// Counters for auditing which augmentation feeds which consumer.
struct AugUsage {
  long strong_on_labeled = 0;
  long weak_on_target = 0;
  long strong_on_unsup_online = 0;
  long plain_inference = 0;
};

template <class S>
struct TrainState {
  ModelParams<S> online;  // carries the projection head when enabled
  ModelParams<S> target;  // core only, EMA of the online core
  AdamState<S> opt;
  long step = 0;

  static TrainState init(const TrainSettings& cfg) {
    TrainState st;
    st.online = ModelParams<S>::init(cfg.seed, cfg.use_projection);
    st.target = st.online.core_copy();
    st.opt = AdamState<S>::shaped_like(st.online);
    return st;
  }
};

struct StepStats {
  double l_reg = 0;
  double l_cons = 0;
  double l_da = 0;
  double l_total = 0;
  double filtered_fraction = 0;
};

struct CollapseReport {
  long step = -1;
  double unique_fraction = 1.0;
  double mean_pairwise_distance = 1.0;

  bool collapsed() const { return unique_fraction < 0.10; }
};

// theta_t := alpha * theta_t + (1 - alpha) * theta_o over the shared-role
// core; the projection head has no target counterpart. alpha = 1 and 0 take
// exact paths (freeze / copy).
template <class S>
void ema_update(ModelParams<S>& target, const ModelParams<S>& online, double alpha) {
  if (alpha < 0 || alpha > 1) throw std::invalid_argument("ema_update: alpha must be in [0,1]");
  if (target.has_projection)
    throw std::invalid_argument("ema_update: target must not carry a projection head");
  auto tt = target.named_tensors();
  auto ot = online.named_tensors();
  if (ot.size() < tt.size()) throw std::invalid_argument("ema_update: parameter set mismatch");
  for (size_t i = 0; i < tt.size(); ++i) {
    if (tt[i].first != ot[i].first || tt[i].second->rows() != ot[i].second->rows() ||
        tt[i].second->cols() != ot[i].second->cols())
      throw std::invalid_argument("ema_update: shape mismatch at " + tt[i].first);
  }
  if (alpha == 1) return;
  for (size_t i = 0; i < tt.size(); ++i) {
    if (alpha == 0)
      *tt[i].second = *ot[i].second;
    else
      *tt[i].second = S(alpha) * *tt[i].second + S(1 - alpha) * *ot[i].second;
  }
}

namespace detail {

// One forward pass of the unsupervised branch for a single image pair.
template <class S>
struct UnsupForward {
  DecodeOutput<S> out_t, out_o;
  EncoderCache<S> enc_cache;
  DecodeCache<S> dec_cache;
  S score = S(0);
  int loss_len = 0;  // steps entering the consistency loss
};

template <class S>
UnsupForward<S> unsup_forward(const ModelParams<S>& online, const ModelParams<S>& target,
                              const MatXd& weak_img, const MatXd& strong_img,
                              const TrainSettings& cfg) {
  UnsupForward<S> uf;
  MatX<S> xw = weak_img.template cast<S>();
  MatX<S> xs = strong_img.template cast<S>();
  MatX<S> f_weak = encode(target, xw);
  MatX<S> f_strong = encode(online, xs, &uf.enc_cache);
  const bool paired = !cfg.scr_mode || cfg.scr_shared_context;
  if (paired) {
    auto [ot, oo] = decode_ccr_paired(target, online, f_weak, f_strong, &uf.dec_cache);
    uf.out_t = std::move(ot);
    uf.out_o = std::move(oo);
    uf.loss_len = uf.out_t.dists.length();
  } else {
    uf.out_t = decode_greedy(target, f_weak, false);
    uf.out_o = decode_greedy(online, f_strong, cfg.use_projection, &uf.dec_cache);
    uf.loss_len = std::min(uf.out_t.dists.length(), uf.out_o.dists.length());
  }
  uf.score = cfg.loss.length_norm_confidence
                 ? confidence_score(uf.out_t.dists, true)
                 : uf.out_t.confidence;
  return uf;
}

template <class S>
StepDistributions<S> truncate_dists(const StepDistributions<S>& d, int n) {
  if (d.length() <= n) return d;
  StepDistributions<S> out;
  out.probs.assign(d.probs.begin(), d.probs.begin() + n);
  out.logits.assign(d.logits.begin(), d.logits.begin() + n);
  out.tokens.assign(d.tokens.begin(), d.tokens.begin() + n);
  return out;
}

}  // namespace detail

// Fixed, fully-augmented views of one step's batches. Sampling and
// augmentation are seed-driven and happen here; the objective below is then a
// pure function of the parameters, which keeps it differentiable.
struct PreparedBatch {
  std::vector<MatXd> labeled_imgs;
  std::vector<std::vector<int>> contexts;  // [BOS] + label tokens
  std::vector<std::vector<int>> gts;       // label tokens + [EOS]
  std::vector<MatXd> weak_imgs, strong_imgs;
};

inline PreparedBatch prepare_batch(const TrainSettings& cfg, long step,
                                   const std::vector<const LoadedSample*>& labeled,
                                   const std::vector<const LoadedSample*>& unlabeled,
                                   AugUsage* audit = nullptr) {
  if (labeled.empty()) throw std::invalid_argument("train_step: labeled batch is empty");
  PreparedBatch pb;
  for (size_t i = 0; i < labeled.size(); ++i) {
    if (!labeled[i]->has_label)
      throw std::invalid_argument("train_step: unlabeled sample in labeled batch");
    ImageSample img = to_image(*labeled[i]);
    ImageSample aug =
        augment::strong_augment(img, mix_seed(cfg.seed, aug_supervised_tag(), step, i), cfg.strong);
    if (audit) ++audit->strong_on_labeled;
    pb.labeled_imgs.push_back(std::move(aug.pixels));
    std::vector<int> tokens = charset::encode(labeled[i]->label);
    std::vector<int> context;
    context.reserve(tokens.size() + 1);
    context.push_back(charset::kBos);
    context.insert(context.end(), tokens.begin(), tokens.end());
    pb.contexts.push_back(std::move(context));
    tokens.push_back(charset::kEos);
    pb.gts.push_back(std::move(tokens));
  }
  // skip the unsupervised branch entirely when no loss consumes it
  const bool want_unsup =
      !unlabeled.empty() && (cfg.loss.lambda_cons > 0 || cfg.loss.lambda_da > 0);
  if (want_unsup) {
    for (size_t j = 0; j < unlabeled.size(); ++j) {
      ImageSample img = to_image(*unlabeled[j]);
      ImageSample weak =
          augment::weak_augment(img, mix_seed(cfg.seed, aug_weak_tag(), step, j), cfg.weak);
      ImageSample strong =
          augment::strong_augment(img, mix_seed(cfg.seed, aug_unsup_tag(), step, j), cfg.strong);
      if (audit) {
        ++audit->weak_on_target;
        ++audit->strong_on_unsup_online;
      }
      pb.weak_imgs.push_back(std::move(weak.pixels));
      pb.strong_imgs.push_back(std::move(strong.pixels));
    }
  }
  return pb;
}

// The full step objective and its analytic gradient w.r.t. the online
// parameters (accumulated into `g`). The target only shapes the loss — its
// pseudo labels, gate score, and sequence lengths — and never receives
// gradient. Phase order: forward both branches, pool character features for
// the domain loss, then backprop per sample.
template <class S>
StepStats step_gradients(const ModelParams<S>& online, const ModelParams<S>& target,
                         const TrainSettings& cfg, const PreparedBatch& pb, ModelParams<S>& g) {
  const int B = static_cast<int>(pb.labeled_imgs.size());
  if (B == 0) throw std::invalid_argument("step_gradients: labeled batch is empty");
  const int U = static_cast<int>(pb.weak_imgs.size());

  StepStats stats;

  // supervised branch forward
  std::vector<EncoderCache<S>> enc_l(B);
  std::vector<DecodeCache<S>> dec_l(B);
  std::vector<DecodeOutput<S>> out_l(B);
  for (int i = 0; i < B; ++i) {
    MatX<S> x = pb.labeled_imgs[i].template cast<S>();
    MatX<S> f = encode(online, x, &enc_l[i]);
    out_l[i] = decode_training(online, f, pb.contexts[i], false, &dec_l[i]);
    stats.l_reg += supervised_loss(out_l[i].dists, pb.gts[i]) / S(B);
  }

  // unsupervised branch forward
  std::vector<detail::UnsupForward<S>> unsup;
  unsup.reserve(U);
  int filtered = 0;
  for (int j = 0; j < U; ++j) {
    unsup.push_back(
        detail::unsup_forward(online, target, pb.weak_imgs[j], pb.strong_imgs[j], cfg));
    const auto& uf = unsup.back();
    if (!(uf.score > S(cfg.loss.beta_u))) ++filtered;
    StepDistributions<S> tgt =
        sharpen_dists(detail::truncate_dists(uf.out_t.dists, uf.loss_len), S(cfg.loss.tau));
    StepDistributions<S> onl = detail::truncate_dists(uf.out_o.dists, uf.loss_len);
    stats.l_cons += consistency_loss(tgt, onl, uf.score, cfg.loss) / S(U);
  }
  stats.filtered_fraction = U == 0 ? 0.0 : static_cast<double>(filtered) / U;

  // domain adaptation on pooled character features from both online paths
  MatX<S> h_l, h_u;
  std::pair<MatX<S>, MatX<S>> da_grads;
  bool da_active = false;
  if (cfg.loss.lambda_da > 0 && U > 0) {
    long nl = 0, nu = 0;
    for (const auto& o : out_l) nl += o.char_features.size();
    for (const auto& u : unsup) nu += u.out_o.char_features.size();
    if (nl >= 2 && nu >= 2) {
      h_l.resize(nl, kFeatDim);
      h_u.resize(nu, kFeatDim);
      long r = 0;
      for (const auto& o : out_l)
        for (const auto& h : o.char_features) h_l.row(r++) = h.transpose();
      r = 0;
      for (const auto& u : unsup)
        for (const auto& h : u.out_o.char_features) h_u.row(r++) = h.transpose();
      stats.l_da = domain_adaptation_loss(h_l, h_u);
      da_grads = domain_adaptation_grad(h_l, h_u);
      da_active = true;
    }
  }

  stats.l_total = overall_loss(stats.l_reg, stats.l_cons, stats.l_da, cfg.loss);

  // backward
  const S lam_c = S(cfg.loss.lambda_cons), lam_d = S(cfg.loss.lambda_da);
  long row_l = 0;
  for (int i = 0; i < B; ++i) {
    std::vector<VecX<S>> dlogits = supervised_loss_grad(out_l[i].dists, pb.gts[i]);
    for (auto& d : dlogits) d /= S(B);
    std::vector<VecX<S>> dchar;
    const int T = out_l[i].dists.length();
    if (da_active) {
      dchar.reserve(T);
      for (int t = 0; t < T; ++t) dchar.push_back(lam_d * da_grads.first.row(row_l++).transpose());
    }
    MatX<S> df = decode_backward(online, dec_l[i], dlogits, dchar, g);
    encode_backward(online, enc_l[i], df, g);
  }
  long row_u = 0;
  for (int j = 0; j < U; ++j) {
    const auto& uf = unsup[j];
    const int T = uf.out_o.dists.length();
    const bool gated = !(uf.score > S(cfg.loss.beta_u));
    std::vector<VecX<S>> dlogits(T, VecX<S>::Zero(charset::kOutVocab));
    if (lam_c > 0 && !gated) {
      StepDistributions<S> tgt =
          sharpen_dists(detail::truncate_dists(uf.out_t.dists, uf.loss_len), S(cfg.loss.tau));
      StepDistributions<S> onl = detail::truncate_dists(uf.out_o.dists, uf.loss_len);
      std::vector<VecX<S>> dcons = consistency_loss_grad(tgt, onl, uf.score, cfg.loss);
      for (int t = 0; t < uf.loss_len; ++t) dlogits[t] = (lam_c / S(U)) * dcons[t];
    }
    std::vector<VecX<S>> dchar;
    if (da_active) {
      dchar.reserve(T);
      for (int t = 0; t < T; ++t) dchar.push_back(lam_d * da_grads.second.row(row_u++).transpose());
    }
    if ((lam_c > 0 && !gated) || da_active) {
      MatX<S> df = decode_backward(online, uf.dec_cache, dlogits, dchar, g);
      encode_backward(online, uf.enc_cache, df, g);
    }
  }
  return stats;
}

// One optimizer step: prepare batches, compute the objective gradient, AdamW
// on the online parameters, then the EMA sub-step — the only place `target`
// changes.
template <class S>
StepStats train_step(TrainState<S>& st, const TrainSettings& cfg,
                     const std::vector<const LoadedSample*>& labeled,
                     const std::vector<const LoadedSample*>& unlabeled, double lr,
                     AugUsage* audit = nullptr) {
  const long k = st.step;
  PreparedBatch pb = prepare_batch(cfg, k, labeled, unlabeled, audit);
  ModelParams<S> g = st.online.zero_clone();
  StepStats stats = step_gradients(st.online, st.target, cfg, pb, g);
  if (!std::isfinite(stats.l_total)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "train: non-finite loss at step %ld (batch seed %016llx)", k,
                  static_cast<unsigned long long>(mix_seed(cfg.seed, batch_labeled_tag(), k)));
    throw std::runtime_error(buf);
  }

  // optimizer on online parameters only; decoupled decay lives in the step
  AdamConfig ac;
  ac.weight_decay = cfg.weight_decay;
  adamw_step(st.online, g, st.opt, ac, lr);

  // EMA sub-step: the single place the target may change
  if (st.step < cfg.ema_warmup_steps)
    st.target = st.online.core_copy();
  else
    ema_update(st.target, st.online, cfg.alpha);

  ++st.step;
  return stats;
}

// Greedy-decodes a probe set and reports output diversity; the collapse flag
// is unique fraction < 0.10.
template <class S>
CollapseReport detect_collapse(const ModelParams<S>& p,
                               const std::vector<const LoadedSample*>& probe,
                               AugUsage* audit = nullptr) {
  if (probe.size() < 50)
    throw std::invalid_argument("detect_collapse: probe needs at least 50 images");
  std::vector<std::string> preds;
  preds.reserve(probe.size());
  for (const LoadedSample* s : probe) {
    preds.push_back(predict_string(p, *s));
    if (audit) ++audit->plain_inference;
  }
  CollapseReport rep;
  std::set<std::string> uniq(preds.begin(), preds.end());
  rep.unique_fraction = static_cast<double>(uniq.size()) / preds.size();
  double acc = 0;
  long pairs = 0;
  for (size_t a = 0; a < preds.size(); ++a)
    for (size_t b = a + 1; b < preds.size(); ++b) {
      acc += normalized_levenshtein(preds[a], preds[b]);
      ++pairs;
    }
  rep.mean_pairwise_distance = pairs == 0 ? 0.0 : acc / pairs;
  return rep;
}

// Corpus splits resolved to pixels once; shared across runs.
struct TrainData {
  LoadedSplit labeled, unlabeled, test_clean, test_perturbed;
};

inline TrainData load_train_data(const CorpusPaths& cp) {
  TrainData d;
  d.labeled = load_split(cp.train_labeled);
  d.unlabeled = load_split(cp.train_unlabeled);
  d.test_clean = load_split(cp.test_clean);
  d.test_perturbed = load_split(cp.test_perturbed, cp.test_perturbed_answers);
  return d;
}

inline TrainData load_train_data(const std::string& corpus_dir) {
  return load_train_data(corpus_paths(corpus_dir));
}

template <class S>
struct RunResult {
  Checkpoint<S> checkpoint;
  MetricsRecord final_metrics;
  std::vector<TraceRecord> trace;
  long collapse_first_step = -1;
};

namespace detail {

inline std::vector<const LoadedSample*> draw_batch(const LoadedSplit& split, std::uint64_t seed,
                                                  int n) {
  Rng rng(seed);
  std::vector<const LoadedSample*> out;
  out.reserve(n);
  const int last = static_cast<int>(split.size()) - 1;
  for (int i = 0; i < n; ++i) out.push_back(&split.samples[rng.uniform_int(0, last)]);
  return out;
}

inline std::vector<const LoadedSample*> probe_samples(const LoadedSplit& unlabeled,
                                                     int probe_size) {
  const long n = std::min<long>(probe_size, unlabeled.size());
  std::vector<const LoadedSample*> out;
  out.reserve(n);
  for (long i = 0; i < n; ++i) out.push_back(&unlabeled.samples[i]);
  return out;
}

}  // namespace detail

// Full training run: cadenced evaluation + collapse probes into the trace,
// final checkpoint + metrics on disk. Inference (evaluation) always uses the
// supervised-branch online model without the projection.
template <class S>
RunResult<S> run_training(const TrainSettings& cfg, const TrainData& data,
                          const std::string& variant_label, const std::string& out_dir,
                          AugUsage* audit = nullptr) {
  cfg.loss.validate();
  if (data.labeled.empty()) throw std::invalid_argument("run_training: no labeled data");
  std::filesystem::create_directories(out_dir);

  TrainState<S> st = TrainState<S>::init(cfg);
  OneCycleSchedule sched;
  sched.max_lr = cfg.max_lr;
  sched.total_steps = std::max(1L, cfg.steps);
  TraceWriter trace(out_dir + "/trace.jsonl");

  const bool want_unsup =
      !data.unlabeled.empty() && (cfg.loss.lambda_cons > 0 || cfg.loss.lambda_da > 0);
  std::vector<const LoadedSample*> probe = detail::probe_samples(data.unlabeled, cfg.probe_size);
  const bool probe_ok = probe.size() >= 50;
  const std::vector<std::pair<std::string, const LoadedSplit*>> eval_splits = {
      {"test_clean", &data.test_clean}, {"test_perturbed", &data.test_perturbed}};

  RunResult<S> result;
  MetricsRecord metrics;
  bool evaluated = false;
  for (long k = 0; k < cfg.steps; ++k) {
    auto lb = detail::draw_batch(data.labeled, mix_seed(cfg.seed, batch_labeled_tag(), k),
                                 cfg.batch_labeled);
    std::vector<const LoadedSample*> ub;
    if (want_unsup)
      ub = detail::draw_batch(data.unlabeled, mix_seed(cfg.seed, batch_unlabeled_tag(), k),
                              cfg.batch_unlabeled);
    StepStats stats = train_step(st, cfg, lb, ub, sched.lr_at(k), audit);

    const long done = k + 1;
    if ((cfg.eval_every > 0 && done % cfg.eval_every == 0) || done == cfg.steps) {
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
      rec.l_cons = stats.l_cons;
      rec.l_da = stats.l_da;
      rec.l_total = stats.l_total;
      rec.filtered_fraction = stats.filtered_fraction;
      rec.test_clean_acc = metrics.accuracy_of("test_clean");
      rec.test_perturbed_acc = metrics.accuracy_of("test_perturbed");
      rec.unique_fraction = uniq;
      trace.append(rec);
      result.trace.push_back(rec);
    }
  }
  if (!evaluated) metrics = evaluate(st.online, eval_splits);

  metrics.variant = variant_label;
  metrics.seed = cfg.seed;
  metrics.config_hash = cfg.config_hash();
  result.final_metrics = metrics;
  write_metrics_file(out_dir + "/metrics.txt", metrics);

  result.checkpoint.online = std::move(st.online);
  result.checkpoint.target = std::move(st.target);
  result.checkpoint.config_text = cfg.to_config().serialize();
  result.checkpoint.step = static_cast<std::uint64_t>(st.step);
  save_checkpoint(out_dir + "/final.ckpt", result.checkpoint);
  return result;
}

}  // namespace ccrseq
