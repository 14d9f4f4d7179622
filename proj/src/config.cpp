#include "ccrseq/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ccrseq/common.hpp"

namespace ccrseq {
namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

const std::set<std::string> kKnownKeys = {
    "train.alpha", "train.batch_labeled", "train.batch_unlabeled", "train.steps",
    "train.max_lr", "train.weight_decay", "train.seed", "train.eval_every",
    "train.probe_size", "train.ema_warmup_steps", "train.use_projection",
    "scr.enabled", "scr.shared_context",
    "loss.tau", "loss.beta_u", "loss.dist", "loss.lambda_cons", "loss.lambda_da",
    "loss.length_norm_confidence",
    "augment.strong.n", "augment.strong.magnitude",
    "augment.weak.brightness", "augment.weak.contrast",
    "baseline.ns_iterations", "baseline.pl_relabel_every",
};

}  // namespace

KeyValueConfig KeyValueConfig::from_string(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t[0] == '[')
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": sections are not supported, use flat keys");
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    cfg.values_[key] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": not a number: " + it->second);
  }
}

long KeyValueConfig::get_long(const std::string& key, long fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    size_t pos = 0;
    long v = std::stol(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": not an integer: " + it->second);
  }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config key " + key + ": not a boolean: " + v);
}

std::string KeyValueConfig::serialize() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
  return out.str();
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kFull: return "FULL";
    case Variant::kSupervisedOnly: return "SUPERVISED_ONLY";
    case Variant::kScr: return "SCR";
    case Variant::kNoEma: return "NO_EMA";
    case Variant::kNoWd: return "NO_WD";
    case Variant::kNoProj: return "NO_PROJ";
    case Variant::kNoDa: return "NO_DA";
  }
  throw std::logic_error("variant_name: bad enum");
}

Variant variant_from_name(const std::string& s) {
  for (Variant v : {Variant::kFull, Variant::kSupervisedOnly, Variant::kScr, Variant::kNoEma,
                    Variant::kNoWd, Variant::kNoProj, Variant::kNoDa})
    if (s == variant_name(v)) return v;
  throw std::invalid_argument("unknown variant: " + s);
}

void apply_variant(TrainSettings& s, Variant v) {
  switch (v) {
    case Variant::kFull:
      break;
    case Variant::kSupervisedOnly:
      s.loss.lambda_cons = 0;
      s.loss.lambda_da = 0;
      break;
    case Variant::kScr:
      s.scr_mode = true;
      break;
    case Variant::kNoEma:
      s.alpha = 0;  // target follows online exactly
      break;
    case Variant::kNoWd:
      s.weight_decay = 0;
      break;
    case Variant::kNoProj:
      s.use_projection = false;
      break;
    case Variant::kNoDa:
      s.loss.lambda_da = 0;
      break;
  }
}

void TrainSettings::apply(const KeyValueConfig& cfg) {
  for (const auto& [k, v] : cfg.values()) {
    (void)v;
    if (kKnownKeys.count(k) == 0) throw std::invalid_argument("unknown config key: " + k);
  }
  alpha = cfg.get_double("train.alpha", alpha);
  batch_labeled = static_cast<int>(cfg.get_long("train.batch_labeled", batch_labeled));
  batch_unlabeled = static_cast<int>(cfg.get_long("train.batch_unlabeled", batch_unlabeled));
  steps = cfg.get_long("train.steps", steps);
  max_lr = cfg.get_double("train.max_lr", max_lr);
  weight_decay = cfg.get_double("train.weight_decay", weight_decay);
  seed = static_cast<std::uint64_t>(cfg.get_long("train.seed", static_cast<long>(seed)));
  eval_every = cfg.get_long("train.eval_every", eval_every);
  probe_size = static_cast<int>(cfg.get_long("train.probe_size", probe_size));
  ema_warmup_steps = cfg.get_long("train.ema_warmup_steps", ema_warmup_steps);
  use_projection = cfg.get_bool("train.use_projection", use_projection);
  scr_mode = cfg.get_bool("scr.enabled", scr_mode);
  scr_shared_context = cfg.get_bool("scr.shared_context", scr_shared_context);

  loss.tau = cfg.get_double("loss.tau", loss.tau);
  loss.beta_u = cfg.get_double("loss.beta_u", loss.beta_u);
  loss.dist = distance_from_name(cfg.get_string("loss.dist", distance_name(loss.dist)));
  loss.lambda_cons = cfg.get_double("loss.lambda_cons", loss.lambda_cons);
  loss.lambda_da = cfg.get_double("loss.lambda_da", loss.lambda_da);
  loss.length_norm_confidence =
      cfg.get_bool("loss.length_norm_confidence", loss.length_norm_confidence);
  loss.validate();

  strong.n = static_cast<int>(cfg.get_long("augment.strong.n", strong.n));
  strong.magnitude = static_cast<int>(cfg.get_long("augment.strong.magnitude", strong.magnitude));
  weak.brightness = cfg.get_double("augment.weak.brightness", weak.brightness);
  weak.contrast = cfg.get_double("augment.weak.contrast", weak.contrast);

  ns_iterations = static_cast<int>(cfg.get_long("baseline.ns_iterations", ns_iterations));
  pl_relabel_every = cfg.get_long("baseline.pl_relabel_every", pl_relabel_every);

  if (alpha < 0 || alpha > 1) throw std::invalid_argument("train.alpha must be in [0,1]");
  if (batch_labeled < 1) throw std::invalid_argument("train.batch_labeled must be >= 1");
  if (batch_unlabeled < 0) throw std::invalid_argument("train.batch_unlabeled must be >= 0");
  if (steps < 0) throw std::invalid_argument("train.steps must be >= 0");
  if (ns_iterations < 1) throw std::invalid_argument("baseline.ns_iterations must be >= 1");
}

TrainSettings TrainSettings::resolve(const KeyValueConfig& file, Variant variant) {
  TrainSettings s;
  apply_variant(s, variant);
  s.apply(file);
  return s;
}

KeyValueConfig TrainSettings::to_config() const {
  KeyValueConfig c;
  auto put_d = [&](const char* k, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    c.set(k, buf);
  };
  put_d("train.alpha", alpha);
  c.set("train.batch_labeled", std::to_string(batch_labeled));
  c.set("train.batch_unlabeled", std::to_string(batch_unlabeled));
  c.set("train.steps", std::to_string(steps));
  put_d("train.max_lr", max_lr);
  put_d("train.weight_decay", weight_decay);
  c.set("train.seed", std::to_string(seed));
  c.set("train.eval_every", std::to_string(eval_every));
  c.set("train.probe_size", std::to_string(probe_size));
  c.set("train.ema_warmup_steps", std::to_string(ema_warmup_steps));
  c.set("train.use_projection", use_projection ? "true" : "false");
  c.set("scr.enabled", scr_mode ? "true" : "false");
  c.set("scr.shared_context", scr_shared_context ? "true" : "false");
  put_d("loss.tau", loss.tau);
  put_d("loss.beta_u", loss.beta_u);
  c.set("loss.dist", distance_name(loss.dist));
  put_d("loss.lambda_cons", loss.lambda_cons);
  put_d("loss.lambda_da", loss.lambda_da);
  c.set("loss.length_norm_confidence", loss.length_norm_confidence ? "true" : "false");
  c.set("augment.strong.n", std::to_string(strong.n));
  c.set("augment.strong.magnitude", std::to_string(strong.magnitude));
  put_d("augment.weak.brightness", weak.brightness);
  put_d("augment.weak.contrast", weak.contrast);
  c.set("baseline.ns_iterations", std::to_string(ns_iterations));
  c.set("baseline.pl_relabel_every", std::to_string(pl_relabel_every));
  return c;
}

std::string TrainSettings::config_hash() const {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_config().serialize())));
  return buf;
}

}  // namespace ccrseq
