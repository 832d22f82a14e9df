// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

// Per-batch objectives. Logit matrices have one row per sample. Every loss
// returns its value together with the gradient with respect to the logits it
// consumed, so the training loop only has to backpropagate.

#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace biasbench::methods {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

struct LossGrad {
  double loss = 0.0;
  Mat grad;
};

// Throws NumericError naming `what` if any entry is NaN or infinite.
void CheckFinite(const Mat& m, const char* what);

Mat LogSoftmax(const Mat& logits);
Mat Softmax(const Mat& logits);

// Per-sample -log softmax(z)_y.
Vec CrossEntropy(const Mat& logits, std::span<const int> y);

// sum_i w_i CE_i / normalizer, with the gradient treating w as constant.
LossGrad WeightedCrossEntropy(const Mat& logits, std::span<const int> y, std::span<const double> w,
                              double normalizer);

// Mean cross-entropy.
LossGrad LossStdm(const Mat& logits, std::span<const int> y);

// sum_i CE_i / N_g(i) normalized by sum_i 1 / N_g(i). `group` indexes
// `group_counts` (train-split counts).
LossGrad LossUpwt(const Mat& logits, std::span<const int> y, std::span<const int> group,
                  std::span<const double> group_counts);

// Exponentiated-gradient state over groups.
struct GdroState {
  Vec q;
  static GdroState Uniform(std::size_t num_groups);
};

// q_g <- q_g exp(eta L_g) for groups present in the batch, then renormalized.
// Returns sum_g q_g L_g using the updated q; absent groups contribute 0.
double GdroStep(std::span<const double> group_losses, std::span<const std::uint8_t> present,
                GdroState& state, double eta);

struct GdroOutput {
  double loss = 0.0;
  Mat grad;
  Vec group_losses;  // mean CE per group, 0 where absent
};

GdroOutput LossGdro(const Mat& logits, std::span<const int> y, std::span<const int> group,
                    GdroState& state, double eta);

Mat RubiCombine(const Mat& debiased, const Mat& bias);

struct RubiOutput {
  double loss = 0.0;       // main + bias
  double loss_main = 0.0;  // CE(debiased * sigmoid(bias), y)
  double loss_bias = 0.0;  // CE(bias, y)
  Mat grad_debiased;
  Mat grad_bias;
};

RubiOutput LossRubi(const Mat& debiased, const Mat& bias, std::span<const int> y);

// One adversarial head per explicit factor.
struct LnlHead {
  const Mat* logits = nullptr;
  std::span<const int> target;
};

struct LnlOutput {
  double task_loss = 0.0;       // CE(class) + lambda_ent * (-H), mean over batch
  double adversary_loss = 0.0;  // sum over heads of mean CE(bias)
  double neg_entropy = 0.0;     // sum over heads of mean -H(bias softmax)
  Mat grad_class;
  std::vector<Mat> grad_head;      // CE gradient, drives the head parameters
  std::vector<Mat> grad_features;  // lambda_grad * CE gradient + lambda_ent * d(-H)
};

LnlOutput LossLnl(const Mat& class_logits, std::span<const int> y, std::span<const LnlHead> heads,
                  double lambda_grad, double lambda_ent);

// Gradient of -H(softmax(z)) per row: p_k (log p_k + H).
Mat NegEntropyGrad(const Mat& logits, Vec* neg_entropy = nullptr);

struct IrmOutput {
  double risk = 0.0;     // pooled mean CE
  double penalty = 0.0;  // lambda * sum_e D_e^2
  double loss = 0.0;
  Mat grad;
  std::vector<double> dw;  // D_e = d/dw CE_e(w * logits) at w = 1, per environment
};

// `env` ids need not be contiguous; empty environments are skipped.
IrmOutput LossIrm(const Mat& logits, std::span<const int> y, std::span<const int> env, double lambda);

struct GceOutput {
  Vec loss;   // per sample
  Mat grad;   // per-sample gradient (not averaged)
  bool clamped = false;
};

// (1 - s_y^gamma) / gamma with s_y clamped at 1e-12.
Vec GceFromScores(std::span<const double> s_y, double gamma, bool* clamped = nullptr);
GceOutput Gce(const Mat& logits, std::span<const int> y, double gamma);

// L_b / (L_b + L_d), 1/2 where both vanish.
Vec LffWeights(const Vec& loss_biased, const Vec& loss_debiased);

struct LffOutput {
  double loss_debiased = 0.0;  // sum w_i CE_i / sum w_i
  double loss_biased = 0.0;    // mean GCE
  Mat grad_debiased;
  Mat grad_biased;
  Vec weights;
  bool clamped = false;
};

LffOutput LossLff(const Mat& debiased, const Mat& biased, std::span<const int> y, double gamma);

// mean_i lambda_{y_i} / 2 * ||z_i - gamma_{y_i}||^2. Length-1 vectors apply
// to every class.
LossGrad SdPenalty(const Mat& logits, std::span<const int> y, std::span<const double> lambda,
                   std::span<const double> gamma);

}  // namespace biasbench::methods
