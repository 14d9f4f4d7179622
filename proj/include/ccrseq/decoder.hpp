#pragma once

// Attention decoder: single GRU cell (d=256) with additive attention over
// the 25-column encoder feature sequence, linear classifier to 37 classes,
// and an optional 2-layer ReLU projection between GRU output and classifier
// (the asymmetric head used by the online unsupervised path).
//
// Three decode procedures share one step primitive:
//   decode_training   — caller-supplied context (teacher forcing)
//   decode_inference  — greedy argmax feedback, stops at EOS / T_max
//   decode_ccr_paired — target's per-step argmax feeds BOTH decoders
// decode_backward runs BPTT over a cached forward pass.

#include <stdexcept>
#include <utility>
#include <vector>

#include "ccrseq/charset.hpp"
#include "ccrseq/net.hpp"
#include "ccrseq/params.hpp"

namespace ccrseq {

template <class S>
struct StepDistributions {
  std::vector<VecX<S>> probs;   // per step, length kOutVocab, sums to 1
  std::vector<VecX<S>> logits;  // matching pre-softmax activations
  std::vector<int> tokens;      // per-step argmax of probs
  int length() const { return static_cast<int>(probs.size()); }
};

template <class S>
struct DecodeOutput {
  StepDistributions<S> dists;
  std::vector<VecX<S>> char_features;  // GRU output h_t, before projection
  std::vector<int> fed_tokens;         // context token consumed at each step
  S confidence = S(1);                 // running product of per-step max prob
};

template <class S>
struct DecoderStepCache {
  int fed = 0;
  VecX<S> h_prev;
  MatX<S> tanh_u;  // d × L_f, tanh of attention pre-activations
  VecX<S> attn;    // L_f attention weights
  VecX<S> x;       // [embedding; context], d+e
  VecX<S> z, r, n, unh;
  VecX<S> proj_q, proj_rq;  // first-layer pre/post ReLU, when projection used
};

template <class S>
struct DecodeCache {
  MatX<S> f;    // encoder features, d × L_f
  MatX<S> wff;  // attn_f * f, precomputed
  bool used_projection = false;
  std::vector<DecoderStepCache<S>> steps;
};

namespace detail {

template <class S>
void check_features(const MatX<S>& f) {
  if (f.rows() != kFeatDim || f.cols() != kFeatLen)
    throw std::invalid_argument("decode: features must be d × L_f");
}

// One decoder time step. Returns h_new and logits; fills `sc` if non-null.
template <class S>
void decode_step(const ModelParams<S>& p, const MatX<S>& f, const MatX<S>& wff, int token,
                 const VecX<S>& h_prev, bool use_projection, VecX<S>& h_new, VecX<S>& logits,
                 DecoderStepCache<S>* sc) {
  if (token < 0 || token >= charset::kInVocab)
    throw std::invalid_argument("decode: context token outside vocabulary");
  if (use_projection && !p.has_projection)
    throw std::invalid_argument("decode: projection requested but parameters have none");

  // additive attention over feature columns
  VecX<S> hterm = p.attn_h * h_prev + p.attn_b.col(0);
  MatX<S> u = (wff.colwise() + hterm).array().tanh().matrix();  // d × L_f
  VecX<S> scores = u.transpose() * p.attn_v.col(0);             // L_f
  VecX<S> a = net::softmax(scores);
  VecX<S> ctx = f * a;

  VecX<S> x(kEmbedDim + kFeatDim);
  x.head(kEmbedDim) = p.embed.col(token);
  x.tail(kFeatDim) = ctx;

  VecX<S> z = net::sigmoid<S>(p.gru_wz * x + p.gru_uz * h_prev + p.gru_bz.col(0));
  VecX<S> r = net::sigmoid<S>(p.gru_wr * x + p.gru_ur * h_prev + p.gru_br.col(0));
  VecX<S> unh = p.gru_un * h_prev;
  VecX<S> n = (p.gru_wn * x + r.cwiseProduct(unh) + p.gru_bn.col(0)).array().tanh().matrix();
  h_new = (VecX<S>::Ones(kFeatDim) - z).cwiseProduct(n) + z.cwiseProduct(h_prev);

  VecX<S> feat;
  VecX<S> q, rq;
  if (use_projection) {
    q = p.proj_w1 * h_new + p.proj_b1.col(0);
    rq = q.cwiseMax(S(0));
    feat = p.proj_w2 * rq + p.proj_b2.col(0);
  } else {
    feat = h_new;
  }
  logits = p.cls_w * feat + p.cls_b.col(0);

  if (sc) {
    sc->fed = token;
    sc->h_prev = h_prev;
    sc->tanh_u = std::move(u);
    sc->attn = std::move(a);
    sc->x = std::move(x);
    sc->z = std::move(z);
    sc->r = std::move(r);
    sc->n = std::move(n);
    sc->unh = std::move(unh);
    if (use_projection) {
      sc->proj_q = std::move(q);
      sc->proj_rq = std::move(rq);
    }
  }
}

template <class S>
void push_step(DecodeOutput<S>& out, int fed, const VecX<S>& h, VecX<S>&& logits) {
  VecX<S> probs = net::softmax(logits);
  int tok = net::argmax(probs);
  out.confidence *= probs(tok);
  out.dists.logits.push_back(std::move(logits));
  out.dists.probs.push_back(std::move(probs));
  out.dists.tokens.push_back(tok);
  out.char_features.push_back(h);
  out.fed_tokens.push_back(fed);
}

}  // namespace detail

// Teacher forcing: step t consumes context[t]; emits |context| distributions.
template <class S>
DecodeOutput<S> decode_training(const ModelParams<S>& p, const MatX<S>& f,
                                const std::vector<int>& context, bool use_projection,
                                DecodeCache<S>* cache = nullptr) {
  detail::check_features(f);
  if (context.empty() || context[0] != charset::kBos)
    throw std::invalid_argument("decode_training: context must start with BOS");
  if (static_cast<int>(context.size()) > kTMax)
    throw std::invalid_argument("decode_training: context longer than T_max");

  MatX<S> wff = p.attn_f * f;
  if (cache) {
    cache->f = f;
    cache->wff = wff;
    cache->used_projection = use_projection;
    cache->steps.clear();
  }
  DecodeOutput<S> out;
  VecX<S> h = VecX<S>::Zero(kFeatDim);
  for (int tok : context) {
    VecX<S> h_new, logits;
    DecoderStepCache<S> sc;
    detail::decode_step(p, f, wff, tok, h, use_projection, h_new, logits, cache ? &sc : nullptr);
    if (cache) cache->steps.push_back(std::move(sc));
    detail::push_step(out, tok, h_new, std::move(logits));
    h = std::move(h_new);
  }
  return out;
}

// Greedy self-feedback from BOS; stops after emitting EOS or at T_max steps.
// The projection toggle serves the independently-decoding unsupervised path.
template <class S>
DecodeOutput<S> decode_greedy(const ModelParams<S>& p, const MatX<S>& f, bool use_projection,
                              DecodeCache<S>* cache = nullptr) {
  detail::check_features(f);
  MatX<S> wff = p.attn_f * f;
  if (cache) {
    cache->f = f;
    cache->wff = wff;
    cache->used_projection = use_projection;
    cache->steps.clear();
  }
  DecodeOutput<S> out;
  VecX<S> h = VecX<S>::Zero(kFeatDim);
  int tok = charset::kBos;
  for (int t = 0; t < kTMax; ++t) {
    VecX<S> h_new, logits;
    DecoderStepCache<S> sc;
    detail::decode_step(p, f, wff, tok, h, use_projection, h_new, logits, cache ? &sc : nullptr);
    if (cache) cache->steps.push_back(std::move(sc));
    detail::push_step(out, tok, h_new, std::move(logits));
    h = std::move(h_new);
    tok = out.dists.tokens.back();
    if (tok == charset::kEos) break;
  }
  return out;
}

// Inference contract: plain greedy decoding, never through the projection.
template <class S>
DecodeOutput<S> decode_inference(const ModelParams<S>& p, const MatX<S>& f,
                                 DecodeCache<S>* cache = nullptr) {
  return decode_greedy(p, f, false, cache);
}

// Fig.-3 paired decode: the target's per-step argmax is the next context
// token for BOTH decoders; length is set by the target's EOS (or T_max).
// Only the online side can carry gradients (pass a cache for it).
template <class S>
std::pair<DecodeOutput<S>, DecodeOutput<S>> decode_ccr_paired(
    const ModelParams<S>& target_p, const ModelParams<S>& online_p, const MatX<S>& f_weak,
    const MatX<S>& f_strong, DecodeCache<S>* online_cache = nullptr) {
  detail::check_features(f_weak);
  detail::check_features(f_strong);
  if (!target_p.core_copy().same_shapes(online_p.core_copy()))
    throw std::invalid_argument("decode_ccr_paired: parameter shape mismatch");
  const bool proj = online_p.has_projection;

  MatX<S> wff_t = target_p.attn_f * f_weak;
  MatX<S> wff_o = online_p.attn_f * f_strong;
  if (online_cache) {
    online_cache->f = f_strong;
    online_cache->wff = wff_o;
    online_cache->used_projection = proj;
    online_cache->steps.clear();
  }
  DecodeOutput<S> out_t, out_o;
  VecX<S> h_t = VecX<S>::Zero(kFeatDim), h_o = VecX<S>::Zero(kFeatDim);
  int tok = charset::kBos;
  for (int t = 0; t < kTMax; ++t) {
    VecX<S> ht_new, lt, ho_new, lo;
    detail::decode_step<S>(target_p, f_weak, wff_t, tok, h_t, false, ht_new, lt, nullptr);
    DecoderStepCache<S> sc;
    detail::decode_step(online_p, f_strong, wff_o, tok, h_o, proj, ho_new, lo,
                        online_cache ? &sc : nullptr);
    if (online_cache) online_cache->steps.push_back(std::move(sc));
    detail::push_step(out_t, tok, ht_new, std::move(lt));
    detail::push_step(out_o, tok, ho_new, std::move(lo));
    h_t = std::move(ht_new);
    h_o = std::move(ho_new);
    tok = out_t.dists.tokens.back();  // pseudo label from the target
    if (tok == charset::kEos) break;
  }
  return {std::move(out_t), std::move(out_o)};
}

// BPTT over a cached decode. dlogits gives per-step classifier gradients;
// dchar (optional, may be empty) adds gradients on char_features (DA loss).
// Parameter gradients accumulate into `g`; returns dL/d(features).
template <class S>
MatX<S> decode_backward(const ModelParams<S>& p, const DecodeCache<S>& c,
                        const std::vector<VecX<S>>& dlogits, const std::vector<VecX<S>>& dchar,
                        ModelParams<S>& g) {
  const int T = static_cast<int>(c.steps.size());
  if (static_cast<int>(dlogits.size()) != T)
    throw std::invalid_argument("decode_backward: dlogits length mismatch");
  if (!dchar.empty() && static_cast<int>(dchar.size()) != T)
    throw std::invalid_argument("decode_backward: dchar length mismatch");

  MatX<S> df = MatX<S>::Zero(kFeatDim, kFeatLen);
  MatX<S> dwff = MatX<S>::Zero(kFeatDim, kFeatLen);
  VecX<S> dh = VecX<S>::Zero(kFeatDim);
  const VecX<S> ones = VecX<S>::Ones(kFeatDim);

  for (int t = T - 1; t >= 0; --t) {
    const DecoderStepCache<S>& sc = c.steps[t];
    // reconstruct h_new = (1-z) n + z h_prev
    VecX<S> h_new = (ones - sc.z).cwiseProduct(sc.n) + sc.z.cwiseProduct(sc.h_prev);

    // classifier (+ projection) back to h_new
    g.cls_b.col(0) += dlogits[t];
    VecX<S> dfeat = p.cls_w.transpose() * dlogits[t];
    if (c.used_projection) {
      g.cls_w += dlogits[t] * (p.proj_w2 * sc.proj_rq + p.proj_b2.col(0)).transpose();
      g.proj_w2 += dfeat * sc.proj_rq.transpose();
      g.proj_b2.col(0) += dfeat;
      VecX<S> drq = p.proj_w2.transpose() * dfeat;
      VecX<S> dq = (sc.proj_q.array() > S(0)).template cast<S>().matrix().cwiseProduct(drq);
      g.proj_w1 += dq * h_new.transpose();
      g.proj_b1.col(0) += dq;
      dh += p.proj_w1.transpose() * dq;
    } else {
      g.cls_w += dlogits[t] * h_new.transpose();
      dh += dfeat;
    }
    if (!dchar.empty()) dh += dchar[t];

    // GRU cell
    VecX<S> dz = dh.cwiseProduct(sc.h_prev - sc.n);
    VecX<S> dn = dh.cwiseProduct(ones - sc.z);
    VecX<S> dh_prev = dh.cwiseProduct(sc.z);

    VecX<S> dan = dn.cwiseProduct(ones - sc.n.cwiseProduct(sc.n));
    g.gru_wn += dan * sc.x.transpose();
    g.gru_bn.col(0) += dan;
    VecX<S> dx = p.gru_wn.transpose() * dan;
    VecX<S> dr = dan.cwiseProduct(sc.unh);
    VecX<S> dunh = dan.cwiseProduct(sc.r);
    g.gru_un += dunh * sc.h_prev.transpose();
    dh_prev += p.gru_un.transpose() * dunh;

    VecX<S> daz = dz.cwiseProduct(sc.z.cwiseProduct(ones - sc.z));
    g.gru_wz += daz * sc.x.transpose();
    g.gru_bz.col(0) += daz;
    dx += p.gru_wz.transpose() * daz;
    g.gru_uz += daz * sc.h_prev.transpose();
    dh_prev += p.gru_uz.transpose() * daz;

    VecX<S> dar = dr.cwiseProduct(sc.r.cwiseProduct(ones - sc.r));
    g.gru_wr += dar * sc.x.transpose();
    g.gru_br.col(0) += dar;
    dx += p.gru_wr.transpose() * dar;
    g.gru_ur += dar * sc.h_prev.transpose();
    dh_prev += p.gru_ur.transpose() * dar;

    // split x = [embedding; context]
    g.embed.col(sc.fed) += dx.head(kEmbedDim);
    VecX<S> dctx = dx.tail(kFeatDim);

    // attention: ctx = f a, a = softmax(s), s_i = v' tanh(wff_i + W_h h + b)
    df += dctx * sc.attn.transpose();
    VecX<S> da = c.f.transpose() * dctx;
    VecX<S> ds = sc.attn.cwiseProduct(da - VecX<S>::Constant(kFeatLen, sc.attn.dot(da)));
    g.attn_v.col(0) += sc.tanh_u * ds;
    MatX<S> du = (p.attn_v.col(0) * ds.transpose())
                     .cwiseProduct(MatX<S>::Ones(kFeatDim, kFeatLen) -
                                   sc.tanh_u.cwiseProduct(sc.tanh_u));
    dwff += du;
    VecX<S> du_sum = du.rowwise().sum();
    g.attn_h += du_sum * sc.h_prev.transpose();
    g.attn_b.col(0) += du_sum;
    dh_prev += p.attn_h.transpose() * du_sum;

    dh = std::move(dh_prev);
  }
  // wff = attn_f f contributes to both attn_f and features
  g.attn_f += dwff * c.f.transpose();
  df += p.attn_f.transpose() * dwff;
  return df;
}

}  // namespace ccrseq
