#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ccrseq/charset.hpp"
#include "ccrseq/common.hpp"

namespace ccrseq {

// Architecture geometry shared by encoder/decoder.
inline constexpr int kFeatDim = 256;  // d: feature/hidden width
inline constexpr int kFeatLen = 25;   // L_f: encoder output sequence length
inline constexpr int kEmbedDim = 64;
inline constexpr int kTMax = 13;  // 12 characters + EOS
inline constexpr int kConvCh[4] = {32, 64, 128, 256};

// All tensors of one recognizer: 4-block conv encoder, additive-attention
// GRU decoder, linear classifier, and (online models only) the 2-layer
// projection head. Doubles as a gradient container via zero_clone().
template <class S>
struct ModelParams {
  bool has_projection = false;

  MatX<S> conv1_w, conv1_b, conv2_w, conv2_b, conv3_w, conv3_b, conv4_w, conv4_b;
  MatX<S> attn_f, attn_h, attn_b, attn_v;
  MatX<S> embed;
  MatX<S> gru_wz, gru_wr, gru_wn, gru_uz, gru_ur, gru_un, gru_bz, gru_br, gru_bn;
  MatX<S> cls_w, cls_b;
  MatX<S> proj_w1, proj_b1, proj_w2, proj_b2;

  template <class Self, class F>
  static void visit(Self& s, F&& f) {
    f("conv1.w", s.conv1_w); f("conv1.b", s.conv1_b);
    f("conv2.w", s.conv2_w); f("conv2.b", s.conv2_b);
    f("conv3.w", s.conv3_w); f("conv3.b", s.conv3_b);
    f("conv4.w", s.conv4_w); f("conv4.b", s.conv4_b);
    f("attn.f", s.attn_f); f("attn.h", s.attn_h);
    f("attn.b", s.attn_b); f("attn.v", s.attn_v);
    f("embed", s.embed);
    f("gru.wz", s.gru_wz); f("gru.wr", s.gru_wr); f("gru.wn", s.gru_wn);
    f("gru.uz", s.gru_uz); f("gru.ur", s.gru_ur); f("gru.un", s.gru_un);
    f("gru.bz", s.gru_bz); f("gru.br", s.gru_br); f("gru.bn", s.gru_bn);
    f("cls.w", s.cls_w); f("cls.b", s.cls_b);
    if (s.has_projection) {
      f("proj.w1", s.proj_w1); f("proj.b1", s.proj_b1);
      f("proj.w2", s.proj_w2); f("proj.b2", s.proj_b2);
    }
  }

  template <class F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <class F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

  std::vector<std::pair<std::string, MatX<S>*>> named_tensors() {
    std::vector<std::pair<std::string, MatX<S>*>> out;
    for_each([&](const char* n, MatX<S>& t) { out.emplace_back(n, &t); });
    return out;
  }
  std::vector<std::pair<std::string, const MatX<S>*>> named_tensors() const {
    std::vector<std::pair<std::string, const MatX<S>*>> out;
    for_each([&](const char* n, const MatX<S>& t) { out.emplace_back(n, &t); });
    return out;
  }

  long total_size() const {
    long n = 0;
    for_each([&](const char*, const MatX<S>& t) { n += t.size(); });
    return n;
  }

  // Correctly-shaped, zero-filled (gradient container / load target).
  static ModelParams shaped(bool with_projection) {
    ModelParams p;
    p.has_projection = with_projection;
    const int d = kFeatDim, e = kEmbedDim, xdim = kEmbedDim + kFeatDim;
    p.conv1_w = MatX<S>::Zero(kConvCh[0], 9);
    p.conv2_w = MatX<S>::Zero(kConvCh[1], kConvCh[0] * 9);
    p.conv3_w = MatX<S>::Zero(kConvCh[2], kConvCh[1] * 9);
    p.conv4_w = MatX<S>::Zero(kConvCh[3], kConvCh[2] * 9);
    p.conv1_b = MatX<S>::Zero(kConvCh[0], 1);
    p.conv2_b = MatX<S>::Zero(kConvCh[1], 1);
    p.conv3_b = MatX<S>::Zero(kConvCh[2], 1);
    p.conv4_b = MatX<S>::Zero(kConvCh[3], 1);
    p.attn_f = MatX<S>::Zero(d, d);
    p.attn_h = MatX<S>::Zero(d, d);
    p.attn_b = MatX<S>::Zero(d, 1);
    p.attn_v = MatX<S>::Zero(d, 1);
    p.embed = MatX<S>::Zero(e, charset::kInVocab);
    p.gru_wz = MatX<S>::Zero(d, xdim);
    p.gru_wr = MatX<S>::Zero(d, xdim);
    p.gru_wn = MatX<S>::Zero(d, xdim);
    p.gru_uz = MatX<S>::Zero(d, d);
    p.gru_ur = MatX<S>::Zero(d, d);
    p.gru_un = MatX<S>::Zero(d, d);
    p.gru_bz = MatX<S>::Zero(d, 1);
    p.gru_br = MatX<S>::Zero(d, 1);
    p.gru_bn = MatX<S>::Zero(d, 1);
    p.cls_w = MatX<S>::Zero(charset::kOutVocab, d);
    p.cls_b = MatX<S>::Zero(charset::kOutVocab, 1);
    if (with_projection) {
      p.proj_w1 = MatX<S>::Zero(d, d);
      p.proj_b1 = MatX<S>::Zero(d, 1);
      p.proj_w2 = MatX<S>::Zero(d, d);
      p.proj_b2 = MatX<S>::Zero(d, 1);
    }
    return p;
  }

  ModelParams zero_clone() const { return shaped(has_projection); }

  // Drops the projection head (online -> target shape).
  ModelParams core_copy() const {
    ModelParams p = *this;
    p.has_projection = false;
    p.proj_w1.resize(0, 0);
    p.proj_b1.resize(0, 0);
    p.proj_w2.resize(0, 0);
    p.proj_b2.resize(0, 0);
    return p;
  }

  static ModelParams init(std::uint64_t seed, bool with_projection, double proj_eps = 0.003);

  bool same_shapes(const ModelParams& o) const {
    if (has_projection != o.has_projection) return false;
    bool ok = true;
    auto a = named_tensors();
    auto b = o.named_tensors();
    for (size_t i = 0; i < a.size(); ++i)
      ok = ok && a[i].second->rows() == b[i].second->rows() &&
           a[i].second->cols() == b[i].second->cols();
    return ok;
  }
};

namespace detail {

template <class S>
void fill_normal(MatX<S>& m, double stddev, Rng& rng) {
  for (long i = 0; i < m.size(); ++i) m(i) = static_cast<S>(stddev * rng.normal());
}

}  // namespace detail

template <class S>
ModelParams<S> ModelParams<S>::init(std::uint64_t seed, bool with_projection, double proj_eps) {
  ModelParams<S> p = shaped(with_projection);
  Rng rng(mix_seed(seed, fnv1a64("param-init")));
  auto he = [](const MatX<S>& m) { return std::sqrt(2.0 / static_cast<double>(m.cols())); };
  auto xav = [](const MatX<S>& m) { return std::sqrt(1.0 / static_cast<double>(m.cols())); };
  detail::fill_normal(p.conv1_w, he(p.conv1_w), rng);
  detail::fill_normal(p.conv2_w, he(p.conv2_w), rng);
  detail::fill_normal(p.conv3_w, he(p.conv3_w), rng);
  detail::fill_normal(p.conv4_w, he(p.conv4_w), rng);
  detail::fill_normal(p.attn_f, xav(p.attn_f), rng);
  detail::fill_normal(p.attn_h, xav(p.attn_h), rng);
  detail::fill_normal(p.attn_v, std::sqrt(1.0 / kFeatDim), rng);
  detail::fill_normal(p.embed, 0.1, rng);
  detail::fill_normal(p.gru_wz, xav(p.gru_wz), rng);
  detail::fill_normal(p.gru_wr, xav(p.gru_wr), rng);
  detail::fill_normal(p.gru_wn, xav(p.gru_wn), rng);
  detail::fill_normal(p.gru_uz, xav(p.gru_uz), rng);
  detail::fill_normal(p.gru_ur, xav(p.gru_ur), rng);
  detail::fill_normal(p.gru_un, xav(p.gru_un), rng);
  detail::fill_normal(p.cls_w, xav(p.cls_w), rng);
  if (with_projection) {
    // Near-identity through the ReLU: both layers negate around a positive
    // offset c, so inputs in (-1,1) pass the ReLU un-clipped and the head
    // composes to x + O(eps) (exactly x at eps=0, up to rounding).
    const S c = S(2);
    MatX<S> n1(kFeatDim, kFeatDim), n2(kFeatDim, kFeatDim);
    detail::fill_normal(n1, 1.0, rng);
    detail::fill_normal(n2, 1.0, rng);
    p.proj_w1 = -(MatX<S>::Identity(kFeatDim, kFeatDim) + S(proj_eps) * n1);
    p.proj_b1 = MatX<S>::Constant(kFeatDim, 1, c);
    p.proj_w2 = -(MatX<S>::Identity(kFeatDim, kFeatDim) + S(proj_eps) * n2);
    p.proj_b2 = MatX<S>::Constant(kFeatDim, 1, c);
  }
  return p;
}

// ---- checkpoint io ---------------------------------------------------------

template <class S>
struct Checkpoint {
  ModelParams<S> online;
  ModelParams<S> target;
  std::string config_text;
  std::uint64_t step = 0;
};

namespace detail {

inline void put_bytes(std::ostream& out, const void* p, size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
inline void get_bytes(std::istream& in, void* p, size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
}
template <class T>
void put_pod(std::ostream& out, T v) {
  put_bytes(out, &v, sizeof v);
}
template <class T>
T get_pod(std::istream& in) {
  T v;
  get_bytes(in, &v, sizeof v);
  return v;
}

constexpr char kCkptMagic[8] = {'C', 'C', 'R', 'S', 'E', 'Q', 'C', 'K'};
constexpr std::uint32_t kCkptVersion = 1;

template <class S>
void put_named_params(std::ostream& out, const std::string& prefix, const ModelParams<S>& p) {
  p.for_each([&](const char* name, const MatX<S>& t) {
    std::string full = prefix + name;
    put_pod<std::uint16_t>(out, static_cast<std::uint16_t>(full.size()));
    put_bytes(out, full.data(), full.size());
    put_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.rows()));
    put_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.cols()));
    put_bytes(out, t.data(), sizeof(S) * static_cast<size_t>(t.size()));
  });
}

template <class S>
void get_named_params(std::istream& in, const std::string& prefix, ModelParams<S>& p) {
  p.for_each([&](const char* name, MatX<S>& t) {
    auto len = get_pod<std::uint16_t>(in);
    std::string full(len, '\0');
    get_bytes(in, full.data(), len);
    if (full != prefix + name)
      throw std::runtime_error("checkpoint: unexpected tensor " + full + ", wanted " + prefix + name);
    auto rows = static_cast<long>(get_pod<std::uint32_t>(in));
    auto cols = static_cast<long>(get_pod<std::uint32_t>(in));
    if (rows != t.rows() || cols != t.cols())
      throw std::runtime_error("checkpoint: shape mismatch for " + full);
    get_bytes(in, t.data(), sizeof(S) * static_cast<size_t>(t.size()));
  });
}

}  // namespace detail

template <class S>
void save_checkpoint(const std::string& path, const Checkpoint<S>& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  detail::put_bytes(out, detail::kCkptMagic, 8);
  detail::put_pod<std::uint32_t>(out, detail::kCkptVersion);
  detail::put_pod<std::uint8_t>(out, sizeof(S));
  detail::put_pod<std::uint8_t>(out, ck.online.has_projection ? 1 : 0);
  detail::put_pod<std::uint64_t>(out, ck.step);
  detail::put_pod<std::uint64_t>(out, ck.config_text.size());
  detail::put_bytes(out, ck.config_text.data(), ck.config_text.size());
  detail::put_named_params(out, "online/", ck.online);
  detail::put_named_params(out, "target/", ck.target);
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

// Scalar width recorded in the file (4 or 8), for dtype dispatch.
inline int checkpoint_dtype(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  detail::get_bytes(in, magic, 8);
  if (std::memcmp(magic, detail::kCkptMagic, 8) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  auto version = detail::get_pod<std::uint32_t>(in);
  if (version != detail::kCkptVersion)
    throw std::runtime_error("unsupported checkpoint version in " + path);
  return detail::get_pod<std::uint8_t>(in);
}

template <class S>
Checkpoint<S> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  detail::get_bytes(in, magic, 8);
  if (std::memcmp(magic, detail::kCkptMagic, 8) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  if (detail::get_pod<std::uint32_t>(in) != detail::kCkptVersion)
    throw std::runtime_error("unsupported checkpoint version in " + path);
  if (detail::get_pod<std::uint8_t>(in) != sizeof(S))
    throw std::runtime_error("checkpoint scalar width mismatch in " + path);
  bool has_proj = detail::get_pod<std::uint8_t>(in) != 0;
  Checkpoint<S> ck;
  ck.step = detail::get_pod<std::uint64_t>(in);
  auto cfg_len = detail::get_pod<std::uint64_t>(in);
  ck.config_text.resize(cfg_len);
  detail::get_bytes(in, ck.config_text.data(), cfg_len);
  ck.online = ModelParams<S>::shaped(has_proj);
  ck.target = ModelParams<S>::shaped(false);
  detail::get_named_params(in, "online/", ck.online);
  detail::get_named_params(in, "target/", ck.target);
  return ck;
}

}  // namespace ccrseq
