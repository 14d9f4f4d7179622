#pragma once

// Line-delimited JSON training trace. One record per evaluation point with
// a fixed field order, so identical runs produce byte-identical files.

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace ccrseq {

struct TraceRecord {
  long step = 0;
  double l_reg = 0;
  double l_cons = 0;
  double l_da = 0;
  double l_total = 0;
  double filtered_fraction = 0;
  double test_clean_acc = 0;
  double test_perturbed_acc = 0;
  double unique_fraction = 0;
};

inline nlohmann::ordered_json trace_to_json(const TraceRecord& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["l_reg"] = r.l_reg;
  j["l_cons"] = r.l_cons;
  j["l_da"] = r.l_da;
  j["l_total"] = r.l_total;
  j["filtered_fraction"] = r.filtered_fraction;
  j["test_clean_acc"] = r.test_clean_acc;
  j["test_perturbed_acc"] = r.test_perturbed_acc;
  j["unique_fraction"] = r.unique_fraction;
  return j;
}

inline TraceRecord trace_from_json(const nlohmann::json& j) {
  TraceRecord r;
  r.step = j.at("step").get<long>();
  r.l_reg = j.at("l_reg").get<double>();
  r.l_cons = j.at("l_cons").get<double>();
  r.l_da = j.at("l_da").get<double>();
  r.l_total = j.at("l_total").get<double>();
  r.filtered_fraction = j.at("filtered_fraction").get<double>();
  r.test_clean_acc = j.at("test_clean_acc").get<double>();
  r.test_perturbed_acc = j.at("test_perturbed_acc").get<double>();
  r.unique_fraction = j.at("unique_fraction").get<double>();
  return r;
}

class TraceWriter {
 public:
  explicit TraceWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open trace for writing: " + path);
  }

  void append(const TraceRecord& r) {
    out_ << trace_to_json(r).dump() << "\n";
    out_.flush();
    if (!out_) throw std::runtime_error("trace write failed");
  }

 private:
  std::ofstream out_;
};

// Skips malformed lines with a warning on stderr (per the plot contract).
std::vector<TraceRecord> read_trace(const std::string& path, bool warn_on_bad_lines = true);

}  // namespace ccrseq
