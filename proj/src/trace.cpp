#include "ccrseq/trace.hpp"

#include <iostream>

namespace ccrseq {

std::vector<TraceRecord> read_trace(const std::string& path, bool warn_on_bad_lines) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace: " + path);
  std::vector<TraceRecord> out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(trace_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      if (warn_on_bad_lines)
        std::cerr << "warning: " << path << ":" << lineno << ": skipping bad trace line ("
                  << e.what() << ")\n";
    }
  }
  return out;
}

}  // namespace ccrseq
