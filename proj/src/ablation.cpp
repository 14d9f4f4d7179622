#include "ccrseq/ablation.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "ccrseq/baselines.hpp"

namespace ccrseq {

const char* suite_name(Suite s) {
  switch (s) {
    case Suite::kUnits: return "UNITS";
    case Suite::kCcrVsScr: return "CCR_VS_SCR";
    case Suite::kDistances: return "DISTANCES";
    case Suite::kSslMethods: return "SSL_METHODS";
    case Suite::kDomainSettings: return "DOMAIN_SETTINGS";
  }
  throw std::logic_error("suite_name: bad enum");
}

Suite suite_from_name(const std::string& s) {
  for (Suite v : {Suite::kUnits, Suite::kCcrVsScr, Suite::kDistances, Suite::kSslMethods,
                  Suite::kDomainSettings})
    if (s == suite_name(v)) return v;
  throw std::invalid_argument(
      "unknown suite: " + s +
      " (expected UNITS, CCR_VS_SCR, DISTANCES, SSL_METHODS, or DOMAIN_SETTINGS)");
}

namespace {

struct RowSpec {
  std::string label;
  std::string method;  // "train" | "pl" | "ns"
  std::string corpus;  // "" = suite corpus; else subdirectory name
  std::function<void(TrainSettings&)> tweak;
};

void stress_scr(TrainSettings& s) {
  s.scr_mode = true;
  s.use_projection = false;
  s.alpha = 0;
  s.weight_decay = 0;
  s.loss.lambda_da = 0;
}

std::vector<RowSpec> suite_rows(Suite suite) {
  auto none = [](TrainSettings&) {};
  switch (suite) {
    case Suite::kUnits:
      // cumulative toggles from the bare character-consistency core up to
      // the full configuration
      return {
          {"ccr_core", "train", "",
           [](TrainSettings& s) {
             s.loss.lambda_da = 0;
             s.use_projection = false;
             s.alpha = 0;
             s.weight_decay = 0;
           }},
          {"+domain_adaptation", "train", "",
           [](TrainSettings& s) {
             s.use_projection = false;
             s.alpha = 0;
             s.weight_decay = 0;
           }},
          {"+projection", "train", "",
           [](TrainSettings& s) {
             s.alpha = 0;
             s.weight_decay = 0;
           }},
          {"+ema", "train", "", [](TrainSettings& s) { s.weight_decay = 0; }},
          {"+weight_decay", "train", "", none},
      };
    case Suite::kCcrVsScr:
      return {
          {"ccr", "train", "", none},
          {"scr", "train", "", [](TrainSettings& s) { s.scr_mode = true; }},
      };
    case Suite::kDistances:
      return {
          {"mse", "train", "", [](TrainSettings& s) { s.loss.dist = Distance::kMse; }},
          {"ce", "train", "", [](TrainSettings& s) { s.loss.dist = Distance::kCe; }},
          {"kl", "train", "", [](TrainSettings& s) { s.loss.dist = Distance::kKl; }},
      };
    case Suite::kSslMethods:
      return {
          {"supervised_only", "train", "",
           [](TrainSettings& s) { apply_variant(s, Variant::kSupervisedOnly); }},
          {"pseudo_label", "pl", "", none},
          {"noisy_student", "ns", "", none},
          {"ccr", "train", "", none},
      };
    case Suite::kDomainSettings:
      return {
          {"cross_supervised", "train", "cross",
           [](TrainSettings& s) { apply_variant(s, Variant::kSupervisedOnly); }},
          {"cross_scr_stress", "train", "cross", stress_scr},
          {"cross_ccr", "train", "cross", none},
          {"indomain_supervised", "train", "indomain",
           [](TrainSettings& s) { apply_variant(s, Variant::kSupervisedOnly); }},
          {"indomain_scr", "train", "indomain", [](TrainSettings& s) { s.scr_mode = true; }},
          {"indomain_ccr", "train", "indomain", none},
      };
  }
  throw std::logic_error("suite_rows: bad enum");
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

long first_collapse_step(const std::vector<TraceRecord>& trace) {
  for (const TraceRecord& r : trace)
    if (r.unique_fraction < 0.10) return r.step;
  return -1;
}

}  // namespace

template <class S>
AblationReport run_ablation_suite(Suite suite, const TrainSettings& base,
                                  const std::string& corpus_dir,
                                  const std::vector<std::uint64_t>& seeds,
                                  const std::string& out_dir) {
  if (seeds.empty()) throw std::invalid_argument("ablation: need at least one seed");
  const std::vector<RowSpec> rows = suite_rows(suite);
  std::filesystem::create_directories(out_dir + "/runs");

  std::map<std::string, TrainData> data_cache;
  auto data_for = [&](const std::string& sub) -> TrainData& {
    std::string dir = sub.empty() ? corpus_dir : corpus_dir + "/" + sub;
    auto it = data_cache.find(dir);
    if (it != data_cache.end()) return it->second;
    if (!std::filesystem::exists(corpus_paths(dir).train_labeled))
      throw std::runtime_error(
          suite == Suite::kDomainSettings
              ? "DOMAIN_SETTINGS expects corpus subdirectories cross/ and indomain/ under " +
                    corpus_dir
              : "no corpus manifests under " + dir);
    return data_cache.emplace(dir, load_train_data(dir)).first->second;
  };

  AblationReport report;
  report.suite = suite;
  for (const RowSpec& spec : rows) {
    AblationRowResult row;
    row.label = spec.label;
    for (std::uint64_t seed : seeds) {
      AblationCell cell;
      cell.seed = seed;
      try {
        TrainSettings s = base;
        s.seed = seed;
        spec.tweak(s);
        const TrainData& data = data_for(spec.corpus);
        const std::string dir =
            spec.corpus.empty() ? corpus_dir : corpus_dir + "/" + spec.corpus;
        char tag[32];
        std::snprintf(tag, sizeof tag, "%08llx",
                      static_cast<unsigned long long>(
                          fnv1a64(s.to_config().serialize() + "|" + spec.method + "|" +
                                  std::filesystem::absolute(dir).string()) &
                          0xffffffffULL));
        const std::string run_dir =
            out_dir + "/runs/" + spec.label + "-s" + std::to_string(seed) + "-" + tag;

        MetricsRecord metrics;
        std::vector<TraceRecord> trace;
        if (std::filesystem::exists(run_dir + "/metrics.txt") &&
            std::filesystem::exists(run_dir + "/trace.jsonl")) {
          metrics = read_metrics_file(run_dir + "/metrics.txt");
          trace = read_trace(run_dir + "/trace.jsonl", false);
        } else if (spec.method == "pl") {
          RunResult<S> r = run_pseudo_label<S>(s, data, run_dir);
          metrics = r.final_metrics;
          trace = r.trace;
        } else if (spec.method == "ns") {
          NsResult<S> r = run_noisy_student<S>(s, data, run_dir);
          metrics = r.final_run.final_metrics;
          trace = r.final_run.trace;
        } else {
          RunResult<S> r = run_training<S>(s, data, spec.label, run_dir);
          metrics = r.final_metrics;
          trace = r.trace;
        }

        cell.clean = metrics.accuracy_of("test_clean");
        cell.pert = metrics.accuracy_of("test_perturbed");
        cell.avg = metrics.avg();
        cell.collapse_step = first_collapse_step(trace);
        cell.sel_clean = cell.clean;
        cell.sel_pert = cell.pert;
        cell.sel_avg = cell.avg;
        if (cell.collapse_step >= 0) {
          // checkpoint-selection convention for collapsing runs: best
          // real-domain accuracy strictly before the flag first raises
          cell.sel_clean = cell.sel_pert = cell.sel_avg = 0;
          const double nc = static_cast<double>(data.test_clean.size());
          const double np = static_cast<double>(data.test_perturbed.size());
          for (const TraceRecord& r : trace) {
            if (r.step >= cell.collapse_step) break;
            if (r.test_perturbed_acc >= cell.sel_pert) {
              cell.sel_pert = r.test_perturbed_acc;
              cell.sel_clean = r.test_clean_acc;
              cell.sel_avg = nc + np > 0
                                 ? (nc * r.test_clean_acc + np * r.test_perturbed_acc) / (nc + np)
                                 : 0;
            }
          }
        }
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
        row.any_failed = true;
        report.any_failed = true;
      }
      row.cells.push_back(std::move(cell));
    }
    double lo = 1e300, hi = -1e300, sum = 0;
    long n = 0;
    for (const AblationCell& c : row.cells) {
      if (c.failed) continue;
      lo = std::min(lo, c.sel_avg);
      hi = std::max(hi, c.sel_avg);
      sum += c.sel_avg;
      ++n;
    }
    row.mean_sel_avg = n > 0 ? sum / n : 0;
    row.range_sel_avg = n > 0 ? hi - lo : 0;
    report.rows.push_back(std::move(row));
  }

  // machine-readable table
  std::ostringstream tsv;
  tsv << "#ccr-seq-table v1\n";
  tsv << "suite\trow\tseed\tstatus\ttest_clean\ttest_perturbed\tavg\tcollapse_step"
         "\tsel_clean\tsel_perturbed\tsel_avg\n";
  for (const AblationRowResult& row : report.rows)
    for (const AblationCell& c : row.cells) {
      tsv << suite_name(suite) << "\t" << row.label << "\t" << c.seed << "\t";
      if (c.failed) {
        tsv << "FAILED: " << c.error << "\t-\t-\t-\t-\t-\t-\t-\n";
      } else {
        tsv << "ok\t" << fmt4(c.clean) << "\t" << fmt4(c.pert) << "\t" << fmt4(c.avg) << "\t"
            << c.collapse_step << "\t" << fmt4(c.sel_clean) << "\t" << fmt4(c.sel_pert) << "\t"
            << fmt4(c.sel_avg) << "\n";
      }
    }
  tsv << "#aggregate\n";
  tsv << "suite\trow\tn_seeds\tn_failed\tmean_sel_avg" << (seeds.size() > 1 ? "\trange_sel_avg" : "")
      << "\n";
  for (const AblationRowResult& row : report.rows) {
    long failed = 0;
    for (const AblationCell& c : row.cells) failed += c.failed ? 1 : 0;
    tsv << suite_name(suite) << "\t" << row.label << "\t" << row.cells.size() << "\t" << failed
        << "\t" << fmt4(row.mean_sel_avg);
    if (seeds.size() > 1) tsv << "\t" << fmt4(row.range_sel_avg);
    tsv << "\n";
  }
  report.table_tsv = tsv.str();

  // human-readable summary
  std::ostringstream txt;
  txt << "Suite " << suite_name(suite) << " (" << seeds.size()
      << (seeds.size() == 1 ? " seed)\n" : " seeds)\n");
  for (const AblationRowResult& row : report.rows) {
    long failed = 0, collapsed = 0;
    for (const AblationCell& c : row.cells) {
      failed += c.failed ? 1 : 0;
      collapsed += (!c.failed && c.collapse_step >= 0) ? 1 : 0;
    }
    char line[160];
    if (seeds.size() > 1)
      std::snprintf(line, sizeof line, "  %-22s avg %s  \xc2\xb1%s", row.label.c_str(),
                    fmt4(row.mean_sel_avg).c_str(), fmt4(row.range_sel_avg / 2).c_str());
    else
      std::snprintf(line, sizeof line, "  %-22s avg %s", row.label.c_str(),
                    fmt4(row.mean_sel_avg).c_str());
    txt << line;
    if (collapsed > 0) txt << "  [collapsed " << collapsed << "/" << row.cells.size() << "]";
    if (failed > 0) txt << "  [FAILED " << failed << "/" << row.cells.size() << "]";
    txt << "\n";
  }
  report.summary = txt.str();

  std::string stem = suite_name(suite);
  std::transform(stem.begin(), stem.end(), stem.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  std::ofstream tsv_out(out_dir + "/ablation_" + stem + ".tsv", std::ios::binary);
  tsv_out << report.table_tsv;
  std::ofstream txt_out(out_dir + "/ablation_" + stem + ".txt", std::ios::binary);
  txt_out << report.summary;
  if (!tsv_out || !txt_out) throw std::runtime_error("ablation: report write failed");
  return report;
}

template AblationReport run_ablation_suite<float>(Suite, const TrainSettings&, const std::string&,
                                                  const std::vector<std::uint64_t>&,
                                                  const std::string&);
template AblationReport run_ablation_suite<double>(Suite, const TrainSettings&, const std::string&,
                                                   const std::vector<std::uint64_t>&,
                                                   const std::string&);

}  // namespace ccrseq
