#pragma once

// Scalar objectives and their analytic gradients: per-step NLL, sharpening,
// cumulative confidence, gated consistency with pluggable distance,
// covariance-matching domain adaptation, and the weighted combination.

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ccrseq/charset.hpp"
#include "ccrseq/decoder.hpp"

namespace ccrseq {

enum class Distance { kKl, kCe, kMse };

inline const char* distance_name(Distance d) {
  switch (d) {
    case Distance::kKl: return "kl";
    case Distance::kCe: return "ce";
    case Distance::kMse: return "mse";
  }
  return "?";
}

inline Distance distance_from_name(const std::string& s) {
  if (s == "kl") return Distance::kKl;
  if (s == "ce") return Distance::kCe;
  if (s == "mse") return Distance::kMse;
  throw std::invalid_argument("unknown consistency distance: " + s);
}

struct LossConfig {
  double tau = 0.4;
  double beta_u = 0.5;
  Distance dist = Distance::kKl;
  double lambda_cons = 1.0;
  double lambda_da = 0.01;
  bool length_norm_confidence = false;  // exploratory variant of the score

  void validate() const {
    if (!(tau > 0)) throw std::invalid_argument("loss: tau must be > 0");
    if (beta_u < 0 || beta_u > 1) throw std::invalid_argument("loss: beta_u must be in [0,1]");
    if (lambda_cons < 0 || lambda_da < 0)
      throw std::invalid_argument("loss: lambdas must be nonnegative");
  }
};

inline constexpr double kLogClamp = 1e-12;

template <class S>
S clamped_log(S v) {
  return std::log(std::max(v, S(kLogClamp)));
}

// Mean per-step negative log-likelihood of the ground-truth tokens.
template <class S>
S supervised_loss(const StepDistributions<S>& dists, const std::vector<int>& gt) {
  const int T = dists.length();
  if (static_cast<int>(gt.size()) != T)
    throw std::invalid_argument("supervised_loss: token/distribution length mismatch");
  if (T == 0) throw std::invalid_argument("supervised_loss: empty sequence");
  S acc = S(0);
  for (int t = 0; t < T; ++t) {
    int y = gt[t];
    if (y < 0 || y >= charset::kOutVocab)
      throw std::invalid_argument("supervised_loss: label token outside output vocabulary");
    acc -= clamped_log(dists.probs[t](y));
  }
  return acc / S(T);
}

// d(supervised_loss)/d(logits_t) = (p_t - onehot(y_t)) / T.
template <class S>
std::vector<VecX<S>> supervised_loss_grad(const StepDistributions<S>& dists,
                                          const std::vector<int>& gt) {
  const int T = dists.length();
  if (static_cast<int>(gt.size()) != T)
    throw std::invalid_argument("supervised_loss_grad: length mismatch");
  std::vector<VecX<S>> dlogits(T);
  for (int t = 0; t < T; ++t) {
    dlogits[t] = dists.probs[t] / S(T);
    dlogits[t](gt[t]) -= S(1) / S(T);
  }
  return dlogits;
}

template <class S>
VecX<S> sharpen(const VecX<S>& logits, S tau) {
  if (!(tau > S(0))) throw std::invalid_argument("sharpen: tau must be > 0");
  return net::softmax<S>((logits / tau).eval());
}

// Sharpened copy of a whole sequence; logits become logits/tau.
template <class S>
StepDistributions<S> sharpen_dists(const StepDistributions<S>& d, S tau) {
  StepDistributions<S> out;
  out.tokens = d.tokens;
  out.logits.reserve(d.logits.size());
  out.probs.reserve(d.logits.size());
  for (const auto& z : d.logits) {
    out.logits.push_back(z / tau);
    out.probs.push_back(net::softmax(out.logits.back()));
  }
  return out;
}

// Eq.-4 style cumulative product of per-step max probabilities.
template <class S>
S confidence_score(const StepDistributions<S>& dists, bool length_normalized = false) {
  const int T = dists.length();
  if (T == 0) throw std::invalid_argument("confidence_score: empty sequence");
  S prod = S(1);
  for (const auto& p : dists.probs) prod *= p.maxCoeff();
  return length_normalized ? std::pow(prod, S(1) / S(T)) : prod;
}

namespace detail {

template <class S>
S step_distance(const VecX<S>& pt, const VecX<S>& q, Distance dist) {
  switch (dist) {
    case Distance::kKl: {
      S acc = S(0);
      for (long c = 0; c < pt.size(); ++c)
        if (pt(c) > S(0)) acc += pt(c) * (clamped_log(pt(c)) - clamped_log(q(c)));
      return acc;
    }
    case Distance::kCe: {
      S acc = S(0);
      for (long c = 0; c < pt.size(); ++c) acc -= pt(c) * clamped_log(q(c));
      return acc;
    }
    case Distance::kMse:
      return (pt - q).squaredNorm() / S(pt.size());
  }
  throw std::logic_error("step_distance: bad enum");
}

}  // namespace detail

// Gated mean per-step distance; `target` must already be sharpened and is
// treated as a constant. Zero whenever score fails the strict > gate.
template <class S>
S consistency_loss(const StepDistributions<S>& target, const StepDistributions<S>& online,
                   S score, const LossConfig& cfg) {
  const int T = target.length();
  if (online.length() != T)
    throw std::invalid_argument("consistency_loss: sequence length mismatch");
  if (T == 0 || !(score > S(cfg.beta_u))) return S(0);
  S acc = S(0);
  for (int t = 0; t < T; ++t)
    acc += detail::step_distance(target.probs[t], online.probs[t], cfg.dist);
  return acc / S(T);
}

// Gradients w.r.t. the online logits. KL and CE share (q - p~)/T; MSE goes
// through the softmax Jacobian.
template <class S>
std::vector<VecX<S>> consistency_loss_grad(const StepDistributions<S>& target,
                                           const StepDistributions<S>& online, S score,
                                           const LossConfig& cfg) {
  const int T = target.length();
  if (online.length() != T)
    throw std::invalid_argument("consistency_loss_grad: sequence length mismatch");
  std::vector<VecX<S>> dlogits(T);
  const bool gated = T == 0 || !(score > S(cfg.beta_u));
  for (int t = 0; t < T; ++t) {
    if (gated) {
      dlogits[t] = VecX<S>::Zero(charset::kOutVocab);
      continue;
    }
    const VecX<S>& pt = target.probs[t];
    const VecX<S>& q = online.probs[t];
    if (cfg.dist == Distance::kMse) {
      VecX<S> dq = (q - pt) * (S(2) / (S(q.size()) * S(T)));
      dlogits[t] = q.cwiseProduct(dq - VecX<S>::Constant(q.size(), q.dot(dq)));
    } else {
      dlogits[t] = (q - pt) / S(T);
    }
  }
  return dlogits;
}

// Sample covariance with 1/(N-1); rows are observations.
template <class S>
MatX<S> sample_covariance(const MatX<S>& h) {
  if (h.rows() < 2) throw std::invalid_argument("sample_covariance: need at least 2 rows");
  MatX<S> centered = h.rowwise() - h.colwise().mean();
  return (centered.transpose() * centered) / S(h.rows() - 1);
}

// (1/(4 d^2)) ||cov(H_l) - cov(H_u)||_F^2; degenerate stacks contribute 0.
template <class S>
S domain_adaptation_loss(const MatX<S>& h_l, const MatX<S>& h_u) {
  if (h_l.rows() < 2 || h_u.rows() < 2) {
    std::fprintf(stderr, "warn: domain adaptation skipped, feature stack too small (%ld/%ld)\n",
                 static_cast<long>(h_l.rows()), static_cast<long>(h_u.rows()));
    return S(0);
  }
  if (h_l.cols() != h_u.cols())
    throw std::invalid_argument("domain_adaptation_loss: feature width mismatch");
  const S d = S(h_l.cols());
  return (sample_covariance(h_l) - sample_covariance(h_u)).squaredNorm() / (S(4) * d * d);
}

// dL/dH for both stacks; the centering projection is a no-op on these
// gradients because centered columns already sum to zero.
template <class S>
std::pair<MatX<S>, MatX<S>> domain_adaptation_grad(const MatX<S>& h_l, const MatX<S>& h_u) {
  if (h_l.rows() < 2 || h_u.rows() < 2)
    return {MatX<S>::Zero(h_l.rows(), h_l.cols()), MatX<S>::Zero(h_u.rows(), h_u.cols())};
  const S d = S(h_l.cols());
  MatX<S> cl = h_l.rowwise() - h_l.colwise().mean();
  MatX<S> cu = h_u.rowwise() - h_u.colwise().mean();
  MatX<S> diff = cl.transpose() * cl / S(h_l.rows() - 1) - cu.transpose() * cu / S(h_u.rows() - 1);
  MatX<S> dl = cl * diff / (d * d * S(h_l.rows() - 1));
  MatX<S> du = -(cu * diff) / (d * d * S(h_u.rows() - 1));
  return {std::move(dl), std::move(du)};
}

template <class S>
S overall_loss(S l_reg, S l_cons, S l_da, const LossConfig& cfg) {
  auto bad = [](S v) { return std::isnan(v) || std::isinf(v); };
  if (bad(l_reg)) throw std::invalid_argument("overall_loss: l_reg is not finite");
  if (bad(l_cons)) throw std::invalid_argument("overall_loss: l_cons is not finite");
  if (bad(l_da)) throw std::invalid_argument("overall_loss: l_da is not finite");
  return l_reg + S(cfg.lambda_cons) * l_cons + S(cfg.lambda_da) * l_da;
}

}  // namespace ccrseq
