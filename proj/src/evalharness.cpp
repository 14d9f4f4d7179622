#include "ccrseq/evalharness.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ccrseq {

namespace {
constexpr const char* kMetricsHeader = "#ccr-seq-metrics v1";

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

std::string metrics_to_text(const MetricsRecord& rec) {
  std::ostringstream out;
  out << kMetricsHeader << "\n";
  out << "variant = " << rec.variant << "\n";
  out << "seed = " << rec.seed << "\n";
  out << "config_hash = " << rec.config_hash << "\n";
  for (const auto& s : rec.splits) {
    out << "split." << s.name << ".correct = " << s.correct << "\n";
    out << "split." << s.name << ".total = " << s.total << "\n";
    out << "split." << s.name << ".accuracy = " << fmt_double(s.accuracy()) << "\n";
  }
  out << "union.correct = " << rec.union_correct << "\n";
  out << "union.total = " << rec.union_total << "\n";
  out << "avg = " << fmt_double(rec.avg()) << "\n";
  return out.str();
}

MetricsRecord metrics_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader)
    throw std::runtime_error("metrics: bad or missing header");
  MetricsRecord rec;
  auto split_of = [&](const std::string& name) -> SplitMetrics& {
    for (auto& s : rec.splits)
      if (s.name == name) return s;
    rec.splits.push_back(SplitMetrics{name, 0, 0});
    return rec.splits.back();
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    size_t eq = line.find(" = ");
    if (eq == std::string::npos) throw std::runtime_error("metrics: bad line: " + line);
    std::string key = line.substr(0, eq), val = line.substr(eq + 3);
    if (key == "variant") {
      rec.variant = val;
    } else if (key == "seed") {
      rec.seed = std::stoull(val);
    } else if (key == "config_hash") {
      rec.config_hash = val;
    } else if (key == "union.correct") {
      rec.union_correct = std::stol(val);
    } else if (key == "union.total") {
      rec.union_total = std::stol(val);
    } else if (key == "avg") {
      // derived; ignored on read
    } else if (key.rfind("split.", 0) == 0) {
      size_t dot = key.rfind('.');
      std::string name = key.substr(6, dot - 6), field = key.substr(dot + 1);
      if (field == "correct")
        split_of(name).correct = std::stol(val);
      else if (field == "total")
        split_of(name).total = std::stol(val);
      else if (field != "accuracy")
        throw std::runtime_error("metrics: unknown split field: " + key);
    } else {
      throw std::runtime_error("metrics: unknown key: " + key);
    }
  }
  return rec;
}

MetricsRecord read_metrics_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open metrics file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return metrics_from_text(buf.str());
}

void write_metrics_file(const std::string& path, const MetricsRecord& rec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open metrics file for writing: " + path);
  out << metrics_to_text(rec);
  if (!out) throw std::runtime_error("metrics write failed: " + path);
}

}  // namespace ccrseq
