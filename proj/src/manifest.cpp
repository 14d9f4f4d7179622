#include "ccrseq/manifest.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace ccrseq {
namespace {

constexpr const char* kHeaderPrefix = "#ccr-seq-manifest v1 seed=";

}  // namespace

void write_manifest(const std::string& file, const Manifest& m) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open manifest for writing: " + file);
  out << kHeaderPrefix << m.seed << "\n";
  for (const auto& r : m.records)
    out << r.path << '\t' << (r.label ? *r.label : "-") << '\t' << domain_name(r.domain) << "\n";
  if (!out) throw std::runtime_error("manifest write failed: " + file);
}

Manifest read_manifest(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open manifest: " + file);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty manifest: " + file);
  if (line.rfind(kHeaderPrefix, 0) != 0)
    throw std::runtime_error("bad manifest header in " + file + ": " + line);
  Manifest m;
  m.seed = std::stoull(line.substr(std::string(kHeaderPrefix).size()));
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    size_t t1 = line.find('\t');
    size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos)
      throw std::runtime_error(file + ":" + std::to_string(lineno) + ": expected 3 tab-separated fields");
    ManifestRecord r;
    r.path = line.substr(0, t1);
    std::string label = line.substr(t1 + 1, t2 - t1 - 1);
    if (label != "-") r.label = label;
    r.domain = domain_from_name(line.substr(t2 + 1));
    if (r.path.empty())
      throw std::runtime_error(file + ":" + std::to_string(lineno) + ": empty path");
    m.records.push_back(std::move(r));
  }
  return m;
}

void apply_answers(Manifest& m, const Manifest& answers) {
  std::unordered_map<std::string, const std::string*> by_path;
  for (const auto& r : answers.records)
    if (r.label) by_path[r.path] = &*r.label;
  for (auto& r : m.records) {
    if (r.label) continue;
    auto it = by_path.find(r.path);
    if (it == by_path.end())
      throw std::runtime_error("no answer for unlabeled record: " + r.path);
    r.label = *it->second;
  }
}

}  // namespace ccrseq
