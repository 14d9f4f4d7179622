#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "ccrseq/baselines.hpp"
#include "ccrseq/datagen.hpp"
#include "ccrseq/plot.hpp"
#include "ccrseq/trainer.hpp"

using namespace ccrseq;
namespace fs = std::filesystem;

namespace {

fs::path scratch_root() {
  fs::path p = fs::temp_directory_path() / "ccrseq-trainer-tests";
  fs::create_directories(p);
  return p;
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = scratch_root() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// One tiny corpus shared by every run-level test in this file.
const TrainData& tiny_data() {
  static const TrainData data = [] {
    GenerationConfig gc;
    gc.out_dir = (scratch_root() / "corpus").string();
    gc.labeled = 60;
    gc.unlabeled = 60;
    gc.test_per_domain = 20;
    gc.max_len = 5;
    gc.seed = 33;
    fs::remove_all(gc.out_dir);
    return load_train_data(build_corpus(gc));
  }();
  return data;
}

TrainSettings tiny_settings(std::uint64_t seed) {
  TrainSettings cfg;
  cfg.seed = seed;
  cfg.batch_labeled = 4;
  cfg.batch_unlabeled = 4;
  cfg.steps = 4;
  cfg.eval_every = 0;  // evaluate at the final step only
  cfg.max_lr = 1e-3;
  return cfg;
}

template <class S>
bool params_equal(const ModelParams<S>& a, const ModelParams<S>& b) {
  if (a.has_projection != b.has_projection) return false;
  auto ta = const_cast<ModelParams<S>&>(a).named_tensors();
  auto tb = const_cast<ModelParams<S>&>(b).named_tensors();
  if (ta.size() != tb.size()) return false;
  for (size_t i = 0; i < ta.size(); ++i) {
    if (ta[i].first != tb[i].first) return false;
    if (ta[i].second->rows() != tb[i].second->rows() ||
        ta[i].second->cols() != tb[i].second->cols())
      return false;
    if (!(ta[i].second->array() == tb[i].second->array()).all()) return false;
  }
  return true;
}

template <class S>
void fill_all(ModelParams<S>& p, S v) {
  for (auto& [name, t] : p.named_tensors()) t->setConstant(v);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// All-zero model whose classifier is biased toward EOS: every decode stops
// immediately and predicts the empty string.
ModelParams<double> constant_eos_model() {
  auto p = ModelParams<double>::shaped(false);
  p.cls_b(charset::kEos) = 8.0;
  return p;
}

}  // namespace

TEST_CASE("ema update: freeze, copy, and the exact blend") {
  auto online = ModelParams<double>::init(11, false);
  auto target = ModelParams<double>::init(12, false);

  auto frozen = target;
  ema_update(frozen, online, 1.0);
  CHECK(params_equal(frozen, target));

  auto copied = target;
  ema_update(copied, online, 0.0);
  CHECK(params_equal(copied, online));

  // alpha*1 + (1-alpha)*0 must land on alpha exactly, not approximately
  auto ones = ModelParams<double>::shaped(false);
  auto zeros = ModelParams<double>::shaped(false);
  fill_all(ones, 1.0);
  ema_update(ones, zeros, 0.999);
  for (auto& [name, t] : ones.named_tensors())
    for (long i = 0; i < t->size(); ++i) REQUIRE((*t)(i) == 0.999);
}

TEST_CASE("ema update: rejects bad alpha, projected targets, shape drift") {
  auto online = ModelParams<double>::init(3, true);
  auto target = online.core_copy();
  CHECK_THROWS_AS(ema_update(target, online, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(ema_update(target, online, 1.0001), std::invalid_argument);

  auto projected = ModelParams<double>::init(3, true);
  CHECK_THROWS_AS(ema_update(projected, online, 0.5), std::invalid_argument);

  auto bent = online.core_copy();
  bent.cls_w.resize(charset::kOutVocab, kFeatDim / 2);
  CHECK_THROWS_AS(ema_update(bent, online, 0.5), std::invalid_argument);
}

TEST_CASE("train_step: stats identity, step count, target only moves by EMA") {
  const TrainData& data = tiny_data();
  TrainSettings cfg = tiny_settings(5);
  auto st = TrainState<double>::init(cfg);

  auto lb = detail::draw_batch(data.labeled, mix_seed(cfg.seed, batch_labeled_tag(), 0),
                               cfg.batch_labeled);
  auto ub = detail::draw_batch(data.unlabeled, mix_seed(cfg.seed, batch_unlabeled_tag(), 0),
                               cfg.batch_unlabeled);

  auto target_before = st.target;
  StepStats stats = train_step(st, cfg, lb, ub, 1e-3);
  CHECK(st.step == 1);
  CHECK(stats.l_total ==
        doctest::Approx(stats.l_reg + cfg.loss.lambda_cons * stats.l_cons +
                        cfg.loss.lambda_da * stats.l_da)
            .epsilon(1e-12));
  CHECK(stats.filtered_fraction >= 0.0);
  CHECK(stats.filtered_fraction <= 1.0);

  // stop-gradient: the target is exactly the EMA of its snapshot and the
  // post-update online core, nothing else touched it
  auto expected = target_before;
  ema_update(expected, st.online, cfg.alpha);
  CHECK(params_equal(expected, st.target));
}

TEST_CASE("train_step: warmup copies the online core verbatim") {
  const TrainData& data = tiny_data();
  TrainSettings cfg = tiny_settings(6);
  cfg.ema_warmup_steps = 2;
  auto st = TrainState<double>::init(cfg);

  auto lb = detail::draw_batch(data.labeled, mix_seed(cfg.seed, batch_labeled_tag(), 0),
                               cfg.batch_labeled);
  train_step(st, cfg, lb, {}, 1e-3);
  CHECK(params_equal(st.target, st.online.core_copy()));
}

TEST_CASE("train_step: empty unlabeled batch degrades to supervised") {
  const TrainData& data = tiny_data();
  TrainSettings cfg = tiny_settings(7);
  auto st = TrainState<double>::init(cfg);
  auto lb = detail::draw_batch(data.labeled, mix_seed(cfg.seed, batch_labeled_tag(), 0),
                               cfg.batch_labeled);
  StepStats stats = train_step(st, cfg, lb, {}, 1e-3);
  CHECK(stats.l_cons == 0.0);
  CHECK(stats.l_da == 0.0);
  CHECK(stats.filtered_fraction == 0.0);
  CHECK(stats.l_total == doctest::Approx(stats.l_reg).epsilon(1e-12));
}

TEST_CASE("prepare_batch: skips the unsupervised branch when both lambdas are zero") {
  const TrainData& data = tiny_data();
  TrainSettings cfg = tiny_settings(8);
  cfg.loss.lambda_cons = 0;
  cfg.loss.lambda_da = 0;
  auto lb = detail::draw_batch(data.labeled, 1, 3);
  auto ub = detail::draw_batch(data.unlabeled, 2, 3);

  AugUsage audit;
  PreparedBatch pb = prepare_batch(cfg, 0, lb, ub, &audit);
  CHECK(pb.labeled_imgs.size() == 3);
  CHECK(pb.weak_imgs.empty());
  CHECK(pb.strong_imgs.empty());
  CHECK(audit.strong_on_labeled == 3);
  CHECK(audit.weak_on_target == 0);
  CHECK(audit.strong_on_unsup_online == 0);

  cfg.loss.lambda_cons = 1.0;
  AugUsage audit2;
  PreparedBatch pb2 = prepare_batch(cfg, 0, lb, ub, &audit2);
  CHECK(pb2.weak_imgs.size() == 3);
  CHECK(pb2.strong_imgs.size() == 3);
  CHECK(audit2.weak_on_target == 3);
  CHECK(audit2.strong_on_unsup_online == 3);
}

TEST_CASE("prepare_batch: context and ground-truth token layout") {
  const TrainData& data = tiny_data();
  TrainSettings cfg = tiny_settings(9);
  auto lb = detail::draw_batch(data.labeled, 4, 2);
  PreparedBatch pb = prepare_batch(cfg, 0, lb, {});
  for (size_t i = 0; i < lb.size(); ++i) {
    std::vector<int> toks = charset::encode(lb[i]->label);
    REQUIRE(pb.contexts[i].size() == toks.size() + 1);
    REQUIRE(pb.gts[i].size() == toks.size() + 1);
    CHECK(pb.contexts[i][0] == charset::kBos);
    CHECK(pb.gts[i].back() == charset::kEos);
    for (size_t t = 0; t < toks.size(); ++t) {
      CHECK(pb.contexts[i][t + 1] == toks[t]);
      CHECK(pb.gts[i][t] == toks[t]);
    }
  }

  LoadedSample bare = *lb[0];
  bare.has_label = false;
  std::vector<const LoadedSample*> bad = {&bare};
  CHECK_THROWS_AS(prepare_batch(cfg, 0, bad, {}), std::invalid_argument);
}

TEST_CASE("detect_collapse: constant predictions flag, probe floor enforced") {
  const TrainData& data = tiny_data();
  std::vector<const LoadedSample*> probe = detail::probe_samples(data.unlabeled, 64);
  REQUIRE(probe.size() >= 50);

  auto flat = constant_eos_model();
  CollapseReport rep = detect_collapse(flat, probe);
  CHECK(rep.unique_fraction == doctest::Approx(1.0 / probe.size()));
  CHECK(rep.mean_pairwise_distance == 0.0);
  CHECK(rep.collapsed());

  auto live = ModelParams<double>::init(21, false);
  CollapseReport rep2 = detect_collapse(live, probe);
  CHECK(rep2.unique_fraction > 0.0);
  CHECK(rep2.unique_fraction <= 1.0);
  CHECK(rep2.mean_pairwise_distance >= 0.0);

  std::vector<const LoadedSample*> small(probe.begin(), probe.begin() + 49);
  CHECK_THROWS_AS(detect_collapse(flat, small), std::invalid_argument);
}

TEST_CASE("run_training: zero steps still produces artifacts") {
  const TrainData& data = tiny_data();
  TrainSettings cfg = tiny_settings(10);
  cfg.steps = 0;
  fs::path out = fresh_dir("run-zero");
  RunResult<float> res = run_training<float>(cfg, data, "FULL", out.string());
  CHECK(res.trace.empty());
  CHECK(res.collapse_first_step == -1);
  CHECK(res.checkpoint.step == 0);
  CHECK(res.final_metrics.variant == "FULL");
  CHECK(res.final_metrics.seed == cfg.seed);
  CHECK(fs::exists(out / "metrics.txt"));
  CHECK(fs::exists(out / "final.ckpt"));
  CHECK(fs::exists(out / "trace.jsonl"));
  CHECK(read_trace((out / "trace.jsonl").string()).empty());
}

TEST_CASE("run_training: identical runs leave byte-identical traces") {
  const TrainData& data = tiny_data();
  TrainSettings cfg = tiny_settings(11);
  cfg.eval_every = 2;
  fs::path a = fresh_dir("run-det-a");
  fs::path b = fresh_dir("run-det-b");
  RunResult<float> ra = run_training<float>(cfg, data, "FULL", a.string());
  RunResult<float> rb = run_training<float>(cfg, data, "FULL", b.string());
  CHECK(ra.trace.size() == 2);
  CHECK(slurp(a / "trace.jsonl") == slurp(b / "trace.jsonl"));
  CHECK(slurp(a / "metrics.txt") == slurp(b / "metrics.txt"));
  CHECK(params_equal(ra.checkpoint.online, rb.checkpoint.online));
  CHECK(params_equal(ra.checkpoint.target, rb.checkpoint.target));
}

TEST_CASE("pseudo_label_pool: strict threshold, sane entries, audit count") {
  const TrainData& data = tiny_data();
  auto p = ModelParams<double>::init(31, false);

  LossConfig loose;
  loose.beta_u = 0.0;
  AugUsage audit;
  std::vector<PseudoLabel> pool = pseudo_label_pool(p, data.unlabeled, loose, &audit);
  CHECK(audit.plain_inference == data.unlabeled.size());
  for (const PseudoLabel& q : pool) {
    CHECK(q.score > loose.beta_u);
    CHECK(!q.label.empty());
    CHECK(static_cast<int>(q.label.size()) + 1 <= kTMax);
    CHECK(q.index >= 0);
    CHECK(q.index < data.unlabeled.size());
  }

  LossConfig mid = loose;
  mid.beta_u = 1e-30;
  LossConfig shut = loose;
  shut.beta_u = 1.0;
  CHECK(pseudo_label_pool(p, data.unlabeled, mid).size() <= pool.size());
  CHECK(pseudo_label_pool(p, data.unlabeled, shut).empty());
}

TEST_CASE("run_pseudo_label: empty pool reduces to the supervised trainer bit for bit") {
  const TrainData& data = tiny_data();
  TrainSettings ref = tiny_settings(12);
  ref.loss.lambda_cons = 0;
  ref.loss.lambda_da = 0;
  fs::path ref_dir = fresh_dir("pl-ref");
  RunResult<float> sup = run_training<float>(ref, data, "SUPERVISED_ONLY", ref_dir.string());

  TrainSettings cfg = tiny_settings(12);  // lambdas forced to zero internally
  cfg.loss.beta_u = 1.0;                  // nothing clears a strict > 1.0 gate
  cfg.pl_relabel_every = 2;
  fs::path pl_dir = fresh_dir("pl-run");
  RunResult<float> pl = run_pseudo_label<float>(cfg, data, pl_dir.string());

  CHECK(params_equal(pl.checkpoint.online, sup.checkpoint.online));
  CHECK(params_equal(pl.checkpoint.target, sup.checkpoint.target));
  CHECK(pl.final_metrics.variant == "PL");
  REQUIRE(!pl.trace.empty());
  CHECK(pl.trace.back().filtered_fraction == 1.0);  // zero accepted pseudo-labels
}

TEST_CASE("run_noisy_student: iteration layout and the no-pseudo fixed point") {
  const TrainData& data = tiny_data();
  TrainSettings cfg = tiny_settings(13);
  cfg.steps = 3;
  cfg.loss.beta_u = 1.0;
  cfg.ns_iterations = 2;
  fs::path out = fresh_dir("ns-run");
  AugUsage audit;
  NsResult<float> res = run_noisy_student<float>(cfg, data, out.string(), &audit);

  REQUIRE(res.checkpoints.size() == 3);  // teacher + two students
  CHECK(res.accepted == std::vector<long>{0, 0});
  for (const std::string& ck : res.checkpoints) CHECK(fs::exists(ck));
  CHECK(fs::exists(out / "metrics.txt"));
  CHECK(fs::exists(out / "trace.jsonl"));
  CHECK(res.final_run.final_metrics.variant == "NS");

  // with zero accepted labels every student sees the same data and seed as
  // the teacher, so each retrain lands on identical parameters
  auto teacher = load_checkpoint<float>(res.checkpoints[0]);
  auto student1 = load_checkpoint<float>(res.checkpoints[1]);
  auto student2 = load_checkpoint<float>(res.checkpoints[2]);
  CHECK(params_equal(teacher.online, student1.online));
  CHECK(params_equal(student1.online, student2.online));

  // labeling passes decode plain inputs; training uses strong augmentation
  CHECK(audit.strong_on_labeled == 3 * cfg.steps * cfg.batch_labeled);
  CHECK(audit.plain_inference >= 2 * data.unlabeled.size());
  CHECK(audit.weak_on_target == 0);

  TrainSettings bad = cfg;
  bad.ns_iterations = 0;
  CHECK_THROWS_AS(run_noisy_student<float>(bad, data, fresh_dir("ns-bad").string()),
                  std::invalid_argument);
}

TEST_CASE("scr decoding: independent feedback diverges, shared context pairs up") {
  const TrainData& data = tiny_data();
  TrainSettings scr = tiny_settings(14);
  scr.scr_mode = true;

  int diverged = 0;
  for (int trial = 0; trial < 8; ++trial) {
    auto online = ModelParams<double>::init(100 + trial, true);
    auto target = ModelParams<double>::init(200 + trial, false);
    MatXd weak = bytes_to_grid<double>(data.unlabeled.samples[trial].pixels, kImageH, kImageW);
    MatXd strong =
        bytes_to_grid<double>(data.unlabeled.samples[trial + 8].pixels, kImageH, kImageW);
    auto uf = detail::unsup_forward(online, target, weak, strong, scr);
    CHECK(uf.loss_len ==
          std::min<int>(static_cast<int>(uf.out_t.dists.tokens.size()),
                        static_cast<int>(uf.out_o.dists.tokens.size())));
    if (uf.out_t.dists.tokens != uf.out_o.dists.tokens) ++diverged;
  }
  CHECK(diverged >= 1);

  // identical cores on identical inputs stay in lockstep even when decoding
  // independently
  auto online = ModelParams<double>::init(300, false);
  auto target = online.core_copy();
  MatXd img = bytes_to_grid<double>(data.unlabeled.samples[0].pixels, kImageH, kImageW);
  TrainSettings bare = scr;
  bare.use_projection = false;
  auto same = detail::unsup_forward(online, target, img, img, bare);
  CHECK(same.out_t.dists.tokens == same.out_o.dists.tokens);

  // scr_shared_context forces the paired decode: one fed sequence, equal T
  TrainSettings shared = scr;
  shared.scr_shared_context = true;
  auto o2 = ModelParams<double>::init(301, true);
  auto t2 = ModelParams<double>::init(302, false);
  auto uf2 = detail::unsup_forward(o2, t2, img, img, shared);
  CHECK(uf2.out_t.dists.tokens.size() == uf2.out_o.dists.tokens.size());
  CHECK(uf2.loss_len == static_cast<int>(uf2.out_t.dists.tokens.size()));
}

TEST_CASE("evaluate: union average, normalization, labeled-only splits") {
  CHECK(normalize_label("A-b c1!") == "abc1");
  CHECK(normalize_label("") == "");

  MetricsRecord rec;
  rec.splits.push_back(SplitMetrics{"a", 270, 300});
  rec.splits.push_back(SplitMetrics{"b", 75, 150});
  rec.union_correct = 345;
  rec.union_total = 450;
  CHECK(rec.avg() == doctest::Approx(345.0 / 450.0).epsilon(1e-12));
  CHECK(rec.avg() != doctest::Approx(0.5 * (0.9 + 0.5)).epsilon(1e-3));
  CHECK(rec.accuracy_of("a") == doctest::Approx(0.9));
  CHECK_THROWS_AS(rec.accuracy_of("missing"), std::invalid_argument);

  const TrainData& data = tiny_data();
  auto flat = constant_eos_model();
  MetricsRecord ev = evaluate(flat, {{"test_clean", &data.test_clean}});
  CHECK(ev.union_total == data.test_clean.size());
  CHECK(ev.union_correct == 0);  // empty prediction never matches a label

  LoadedSplit bare;
  bare.samples.push_back(data.test_clean.samples[0]);
  bare.samples[0].has_label = false;
  CHECK_THROWS_AS(evaluate(flat, {{"x", &bare}}), std::invalid_argument);
}

TEST_CASE("metrics files round-trip and reject garbage") {
  MetricsRecord rec;
  rec.splits.push_back(SplitMetrics{"test_clean", 17, 20});
  rec.splits.push_back(SplitMetrics{"test_perturbed", 9, 20});
  rec.union_correct = 26;
  rec.union_total = 40;
  rec.variant = "FULL";
  rec.seed = 7;
  rec.config_hash = "deadbeef";

  fs::path dir = fresh_dir("metrics-io");
  write_metrics_file((dir / "m.txt").string(), rec);
  MetricsRecord back = read_metrics_file((dir / "m.txt").string());
  REQUIRE(back.splits.size() == 2);
  CHECK(back.splits[0].name == "test_clean");
  CHECK(back.splits[0].correct == 17);
  CHECK(back.splits[0].total == 20);
  CHECK(back.union_correct == 26);
  CHECK(back.union_total == 40);
  CHECK(back.variant == "FULL");
  CHECK(back.seed == 7);
  CHECK(back.config_hash == "deadbeef");
  CHECK(back.avg() == doctest::Approx(rec.avg()).epsilon(1e-12));

  std::ofstream bad(dir / "bad.txt", std::ios::binary);
  bad << "not a metrics file\n";
  bad.close();
  CHECK_THROWS(read_metrics_file((dir / "bad.txt").string()));
  CHECK_THROWS(read_metrics_file((dir / "absent.txt").string()));
}

TEST_CASE("trace files round-trip and skip malformed lines") {
  fs::path dir = fresh_dir("trace-io");
  fs::path f = dir / "trace.jsonl";
  {
    TraceWriter w(f.string());
    for (int k = 1; k <= 3; ++k) {
      TraceRecord r;
      r.step = 10 * k;
      r.l_reg = 0.5 * k;
      r.l_cons = 0.25 * k;
      r.l_da = 0.125 * k;
      r.l_total = r.l_reg + r.l_cons + 0.01 * r.l_da;
      r.filtered_fraction = 0.1 * k;
      r.test_clean_acc = 0.2 * k;
      r.test_perturbed_acc = 0.15 * k;
      r.unique_fraction = 1.0 - 0.1 * k;
      w.append(r);
    }
  }
  std::vector<TraceRecord> back = read_trace(f.string());
  REQUIRE(back.size() == 3);
  CHECK(back[1].step == 20);
  CHECK(back[1].l_reg == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(back[2].unique_fraction == doctest::Approx(0.7).epsilon(1e-12));

  {
    std::ofstream app(f, std::ios::binary | std::ios::app);
    app << "{broken json\n";
    TraceRecord r;
    r.step = 40;
    app << trace_to_json(r).dump() << "\n";
  }
  std::vector<TraceRecord> tolerant = read_trace(f.string(), false);
  REQUIRE(tolerant.size() == 4);
  CHECK(tolerant[3].step == 40);

  CHECK_THROWS(read_trace((dir / "absent.jsonl").string()));
}

TEST_CASE("plot_traces: figures plus parseable sidecars, empty traces allowed") {
  fs::path dir = fresh_dir("plot-io");
  fs::path f = dir / "trace.jsonl";
  {
    TraceWriter w(f.string());
    for (int k = 1; k <= 4; ++k) {
      TraceRecord r;
      r.step = 100 * k;
      r.test_clean_acc = 0.1 * k;
      r.test_perturbed_acc = 0.05 * k;
      r.unique_fraction = 0.9;
      w.append(r);
    }
  }
  std::string prefix = (dir / "fig_").string();
  plot_traces({f.string()}, {"full"}, prefix);
  for (const char* stem : {"accuracy", "unique_fraction"}) {
    fs::path png = prefix + std::string(stem) + ".png";
    fs::path txt = prefix + std::string(stem) + ".txt";
    REQUIRE(fs::exists(png));
    REQUIRE(fs::exists(txt));
    CHECK(fs::file_size(png) > 100);
    CHECK(!slurp(txt).empty());
  }
  std::string side = slurp(prefix + std::string("accuracy.txt"));
  CHECK(side.find("full clean") != std::string::npos);
  CHECK(side.find("0.4") != std::string::npos);  // final clean accuracy value

  fs::path empty = dir / "empty.jsonl";
  std::ofstream(empty, std::ios::binary).close();
  plot_traces({empty.string()}, {"none"}, (dir / "empty_").string());
  CHECK(fs::exists(dir / "empty_accuracy.png"));

  CHECK_THROWS(plot_traces({}, {}, prefix));
  CHECK_THROWS(plot_traces({f.string()}, {"a", "b"}, prefix));
}
