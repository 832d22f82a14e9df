// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/methods/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "biasbench/error.hpp"

namespace biasbench::methods {

namespace {

constexpr double kGceEps = 1e-12;

void CheckLabels(const Mat& logits, std::span<const int> y) {
  if (static_cast<std::size_t>(logits.rows()) != y.size()) throw ValidationError("label count does not match logits");
  for (int v : y) {
    if (v < 0 || v >= logits.cols()) throw ValidationError("label out of range");
  }
}

// softmax(z) - onehot(y), per row.
Mat CeGrad(const Mat& probs, std::span<const int> y) {
  Mat g = probs;
  for (std::size_t i = 0; i < y.size(); ++i) g(static_cast<Eigen::Index>(i), y[i]) -= 1.0;
  return g;
}

double Sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

}  // namespace

void CheckFinite(const Mat& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string("non-finite values in ") + what);
}

Mat LogSoftmax(const Mat& z) {
  Mat out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    const double lse = m + std::log((z.row(i).array() - m).exp().sum());
    out.row(i) = z.row(i).array() - lse;
  }
  return out;
}

Mat Softmax(const Mat& z) { return LogSoftmax(z).array().exp(); }

Vec CrossEntropy(const Mat& logits, std::span<const int> y) {
  CheckLabels(logits, y);
  const Mat ls = LogSoftmax(logits);
  Vec out(ls.rows());
  for (Eigen::Index i = 0; i < ls.rows(); ++i) out(i) = -ls(i, y[static_cast<std::size_t>(i)]);
  return out;
}

LossGrad WeightedCrossEntropy(const Mat& logits, std::span<const int> y, std::span<const double> w,
                              double normalizer) {
  CheckFinite(logits, "logits");
  CheckLabels(logits, y);
  if (w.size() != y.size()) throw ValidationError("weight count does not match batch");
  if (!(normalizer > 0.0)) throw NumericError("non-positive loss normalizer");
  const Mat ls = LogSoftmax(logits);
  LossGrad out;
  out.grad = ls.array().exp();
  for (Eigen::Index i = 0; i < ls.rows(); ++i) {
    const auto s = static_cast<std::size_t>(i);
    out.loss += w[s] * -ls(i, y[s]);
    out.grad(i, y[s]) -= 1.0;
    out.grad.row(i) *= w[s] / normalizer;
  }
  out.loss /= normalizer;
  return out;
}

LossGrad LossStdm(const Mat& logits, std::span<const int> y) {
  const std::vector<double> w(y.size(), 1.0);
  return WeightedCrossEntropy(logits, y, w, static_cast<double>(y.size()));
}

LossGrad LossUpwt(const Mat& logits, std::span<const int> y, std::span<const int> group,
                  std::span<const double> group_counts) {
  if (group.size() != y.size()) throw ValidationError("group id count does not match batch");
  std::vector<double> w(y.size());
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (group[i] < 0 || static_cast<std::size_t>(group[i]) >= group_counts.size()) {
      throw ValidationError("unknown group id " + std::to_string(group[i]));
    }
    const double n = group_counts[static_cast<std::size_t>(group[i])];
    if (!(n > 0.0)) throw ValidationError("group " + std::to_string(group[i]) + " has no training samples");
    w[i] = 1.0 / n;
    total += w[i];
  }
  return WeightedCrossEntropy(logits, y, w, total);
}

GdroState GdroState::Uniform(std::size_t num_groups) {
  if (num_groups == 0) throw ValidationError("GDRO needs at least one group");
  return {Vec::Constant(static_cast<Eigen::Index>(num_groups), 1.0 / static_cast<double>(num_groups))};
}

double GdroStep(std::span<const double> losses, std::span<const std::uint8_t> present, GdroState& state,
                double eta) {
  const auto g = static_cast<std::size_t>(state.q.size());
  if (losses.size() != g || present.size() != g) throw ValidationError("GDRO group count mismatch");
  // Update in log space, shifted by the largest exponent.
  Vec logq(state.q.size());
  double max_logq = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g; ++k) {
    const auto e = static_cast<Eigen::Index>(k);
    logq(e) = std::log(state.q(e)) + (present[k] ? eta * losses[k] : 0.0);
    max_logq = std::max(max_logq, logq(e));
  }
  Vec q = (logq.array() - max_logq).exp();
  q /= q.sum();
  // Keep every entry strictly positive so later log() stays finite.
  for (Eigen::Index k = 0; k < q.size(); ++k) q(k) = std::max(q(k), std::numeric_limits<double>::min());
  q /= q.sum();
  state.q = q;
  double loss = 0.0;
  for (std::size_t k = 0; k < g; ++k) {
    if (present[k]) loss += state.q(static_cast<Eigen::Index>(k)) * losses[k];
  }
  return loss;
}

GdroOutput LossGdro(const Mat& logits, std::span<const int> y, std::span<const int> group, GdroState& state,
                    double eta) {
  CheckFinite(logits, "logits");
  if (group.size() != y.size()) throw ValidationError("group id count does not match batch");
  const auto g = static_cast<std::size_t>(state.q.size());
  const Vec ce = CrossEntropy(logits, y);
  std::vector<double> sums(g, 0.0);
  std::vector<double> counts(g, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (group[i] < 0 || static_cast<std::size_t>(group[i]) >= g) throw ValidationError("unknown group id");
    sums[static_cast<std::size_t>(group[i])] += ce(static_cast<Eigen::Index>(i));
    counts[static_cast<std::size_t>(group[i])] += 1.0;
  }
  std::vector<double> losses(g, 0.0);
  std::vector<std::uint8_t> present(g, 0);
  for (std::size_t k = 0; k < g; ++k) {
    if (counts[k] > 0) {
      losses[k] = sums[k] / counts[k];
      present[k] = 1;
    }
  }
  GdroOutput out;
  out.loss = GdroStep(losses, present, state, eta);
  out.group_losses = Eigen::Map<const Vec>(losses.data(), static_cast<Eigen::Index>(g));
  out.grad = CeGrad(Softmax(logits), y);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto k = static_cast<std::size_t>(group[i]);
    out.grad.row(static_cast<Eigen::Index>(i)) *= state.q(static_cast<Eigen::Index>(k)) / counts[k];
  }
  return out;
}

Mat RubiCombine(const Mat& d, const Mat& b) {
  if (d.rows() != b.rows() || d.cols() != b.cols()) throw ValidationError("RUBi branch shapes differ");
  return d.array() * b.unaryExpr([](double v) { return Sigmoid(v); }).array();
}

RubiOutput LossRubi(const Mat& d, const Mat& b, std::span<const int> y) {
  CheckFinite(d, "debiased logits");
  CheckFinite(b, "bias logits");
  const Mat sig = b.unaryExpr([](double v) { return Sigmoid(v); });
  const Mat combined = RubiCombine(d, b);
  const auto main = LossStdm(combined, y);
  const auto bias = LossStdm(b, y);
  RubiOutput out;
  out.loss_main = main.loss;
  out.loss_bias = bias.loss;
  out.loss = main.loss + bias.loss;
  out.grad_debiased = main.grad.array() * sig.array();
  out.grad_bias = main.grad.array() * d.array() * sig.array() * (1.0 - sig.array()) + bias.grad.array();
  return out;
}

Mat NegEntropyGrad(const Mat& z, Vec* neg_entropy) {
  const Mat ls = LogSoftmax(z);
  const Mat p = ls.array().exp();
  Mat g(z.rows(), z.cols());
  if (neg_entropy) neg_entropy->resize(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double h = -(p.row(i).array() * ls.row(i).array()).sum();
    g.row(i) = p.row(i).array() * (ls.row(i).array() + h);
    if (neg_entropy) (*neg_entropy)(i) = -h;
  }
  return g;
}

LnlOutput LossLnl(const Mat& class_logits, std::span<const int> y, std::span<const LnlHead> heads,
                  double lambda_grad, double lambda_ent) {
  if (lambda_ent < 0) throw ValidationError("LNL lambda_ent must be >= 0");
  auto task = LossStdm(class_logits, y);
  LnlOutput out;
  out.task_loss = task.loss;
  out.grad_class = std::move(task.grad);
  const double n = static_cast<double>(y.size());
  for (const auto& head : heads) {
    auto adv = LossStdm(*head.logits, head.target);
    Vec neg_h;
    const Mat ent_grad = NegEntropyGrad(*head.logits, &neg_h);
    const double mean_neg_h = neg_h.mean();
    out.adversary_loss += adv.loss;
    out.neg_entropy += mean_neg_h;
    out.task_loss += lambda_ent * mean_neg_h;
    out.grad_features.push_back(lambda_grad * adv.grad + (lambda_ent / n) * ent_grad);
    out.grad_head.push_back(std::move(adv.grad));
  }
  return out;
}

IrmOutput LossIrm(const Mat& logits, std::span<const int> y, std::span<const int> env, double lambda) {
  CheckFinite(logits, "logits");
  if (env.size() != y.size()) throw ValidationError("environment id count does not match batch");
  if (y.empty()) throw ValidationError("IRMv1 needs at least one environment");
  const auto base = LossStdm(logits, y);
  IrmOutput out;
  out.risk = base.loss;
  out.grad = base.grad;
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < env.size(); ++i) members[env[i]].push_back(i);
  const Mat p = Softmax(logits);
  for (const auto& [e, rows] : members) {
    const double ne = static_cast<double>(rows.size());
    // D_e = mean_i (s_i - onehot_i) . z_i
    double d = 0.0;
    for (auto i : rows) {
      const auto r = static_cast<Eigen::Index>(i);
      d += p.row(r).dot(logits.row(r)) - logits(r, y[i]);
    }
    d /= ne;
    out.dw.push_back(d);
    out.penalty += lambda * d * d;
    for (auto i : rows) {
      const auto r = static_cast<Eigen::Index>(i);
      const double sz = p.row(r).dot(logits.row(r));
      Eigen::RowVectorXd dd = p.row(r).array() * (1.0 + logits.row(r).array() - sz);
      dd(y[i]) -= 1.0;
      out.grad.row(r) += (2.0 * lambda * d / ne) * dd;
    }
  }
  out.loss = out.risk + out.penalty;
  return out;
}

Vec GceFromScores(std::span<const double> s_y, double gamma, bool* clamped) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("GCE gamma must lie in (0, 1]");
  Vec out(static_cast<Eigen::Index>(s_y.size()));
  bool any = false;
  for (std::size_t i = 0; i < s_y.size(); ++i) {
    double s = s_y[i];
    if (!(s >= kGceEps)) {
      s = kGceEps;
      any = true;
    }
    out(static_cast<Eigen::Index>(i)) = (1.0 - std::pow(s, gamma)) / gamma;
  }
  if (clamped) *clamped = any;
  return out;
}

GceOutput Gce(const Mat& logits, std::span<const int> y, double gamma) {
  CheckFinite(logits, "logits");
  CheckLabels(logits, y);
  const Mat p = Softmax(logits);
  std::vector<double> sy(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) sy[i] = p(static_cast<Eigen::Index>(i), y[i]);
  GceOutput out;
  out.loss = GceFromScores(sy, gamma, &out.clamped);
  out.grad = CeGrad(p, y);
  for (std::size_t i = 0; i < y.size(); ++i) {
    out.grad.row(static_cast<Eigen::Index>(i)) *= std::pow(std::max(sy[i], kGceEps), gamma);
  }
  return out;
}

Vec LffWeights(const Vec& lb, const Vec& ld) {
  if (lb.size() != ld.size()) throw ValidationError("LFF branch loss lengths differ");
  Vec w(lb.size());
  for (Eigen::Index i = 0; i < lb.size(); ++i) {
    const double denom = lb(i) + ld(i);
    w(i) = denom > 0.0 ? lb(i) / denom : 0.5;
  }
  return w;
}

LffOutput LossLff(const Mat& d, const Mat& b, std::span<const int> y, double gamma) {
  CheckFinite(d, "debiased logits");
  CheckFinite(b, "biased logits");
  const Vec ld = CrossEntropy(d, y);
  const Vec lb = CrossEntropy(b, y);
  LffOutput out;
  out.weights = LffWeights(lb, ld);
  double total = out.weights.sum();
  std::vector<double> w(out.weights.data(), out.weights.data() + out.weights.size());
  if (!(total > 0.0)) {
    // Every sample is easy for the biased branch; fall back to uniform weights.
    std::fill(w.begin(), w.end(), 1.0);
    total = static_cast<double>(w.size());
  }
  auto main = WeightedCrossEntropy(d, y, w, total);
  out.loss_debiased = main.loss;
  out.grad_debiased = std::move(main.grad);
  auto gce = Gce(b, y, gamma);
  out.clamped = gce.clamped;
  out.loss_biased = gce.loss.mean();
  out.grad_biased = gce.grad / static_cast<double>(y.size());
  return out;
}

LossGrad SdPenalty(const Mat& logits, std::span<const int> y, std::span<const double> lambda,
                   std::span<const double> gamma) {
  CheckFinite(logits, "logits");
  CheckLabels(logits, y);
  if (lambda.empty() || gamma.empty()) throw ValidationError("SD needs lambda and gamma");
  for (double l : lambda) {
    if (l < 0) throw ValidationError("SD lambda must be >= 0");
  }
  auto pick = [&](std::span<const double> v, int cls) {
    if (v.size() == 1) return v[0];
    if (static_cast<std::size_t>(cls) >= v.size()) throw ValidationError("per-class SD parameter missing for class");
    return v[static_cast<std::size_t>(cls)];
  };
  const double n = static_cast<double>(y.size());
  LossGrad out;
  out.grad.resize(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int cls = y[static_cast<std::size_t>(i)];
    const double l = pick(lambda, cls);
    const double g = pick(gamma, cls);
    const Eigen::RowVectorXd diff = logits.row(i).array() - g;
    out.loss += 0.5 * l * diff.squaredNorm();
    out.grad.row(i) = (l / n) * diff;
  }
  out.loss /= n;
  return out;
}

}  // namespace biasbench::methods
