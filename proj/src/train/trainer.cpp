// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/train/trainer.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "biasbench/error.hpp"
#include "biasbench/methods/losses.hpp"
#include "biasbench/rng.hpp"
#include "biasbench/train/optimizer.hpp"

namespace biasbench::train {

namespace {

using methods::Mat;
using methods::MethodTag;

constexpr int kEvalChunk = 256;

// Stream tags for DeriveSeed.
constexpr std::uint64_t kMainInit = 1;
constexpr std::uint64_t kAuxInit = 2;
constexpr std::uint64_t kHeadInit = 3;
constexpr std::uint64_t kBatchOrder = 4;

Mat ToRows(const Tensor<float>& logits) { return logits.transpose().cast<double>(); }
Tensor<float> ToCols(const Mat& grad) { return grad.transpose().cast<float>(); }

class Runner {
 public:
  Runner(const data::Dataset& ds, const TrainConfig& cfg);
  TrainResult Run(const TrainHooks& hooks);

 private:
  std::vector<std::vector<std::size_t>> EpochBatches(int epoch) const;
  double Step(std::span<const std::size_t> idx);
  double TrainEvalLoss();
  void FillFactorOneHot(std::span<const std::size_t> idx);

  const data::Dataset& ds_;
  TrainConfig cfg_;
  MethodTag tag_;
  ModelSpec spec_;
  std::vector<std::size_t> explicit_;
  std::vector<std::size_t> eval_;
  metrics::GroupAssignment groups_;
  std::vector<double> group_counts_;
  std::vector<std::vector<std::size_t>> members_;
  Model<float> main_;
  std::unique_ptr<Model<float>> aux_;
  std::vector<std::unique_ptr<Linear<float>>> heads_;
  std::unique_ptr<Optimizer<float>> opt_main_, opt_aux_, opt_heads_;
  methods::GdroState gdro_;
  std::vector<std::size_t> eval_subset_;
  Tensor<float> x_, x_aux_;
  std::vector<Tensor<float>> head_logits_;
};

Runner::Runner(const data::Dataset& ds, const TrainConfig& cfg)
    : ds_(ds),
      cfg_(cfg),
      tag_(cfg.method.tag()),
      spec_(ResolveModelSpec(ds, cfg)),
      explicit_(ResolveFactors(ds, cfg.explicit_factors)),
      eval_(ResolveFactors(ds, cfg.eval_factors.empty() ? cfg.explicit_factors : cfg.eval_factors)),
      main_(spec_, DeriveSeed(cfg.seed, kMainInit)) {
  cfg_.Validate();
  cfg_.method.Validate(ds.num_classes);
  const auto& train = ds.split(data::Split::kTrain);
  if (train.size() == 0) throw ValidationError("training split is empty");
  groups_ = metrics::AssignGroups({train.labels, train.factors, ds.num_factors()}, explicit_);
  members_.resize(groups_.table.size());
  for (std::size_t i = 0; i < train.size(); ++i) members_[static_cast<std::size_t>(groups_.group_of[i])].push_back(i);
  for (const auto& g : groups_.table.groups) group_counts_.push_back(static_cast<double>(g.count));
  gdro_ = methods::GdroState::Uniform(groups_.table.size());

  opt_main_ = std::make_unique<Optimizer<float>>(cfg_.optimizer, main_.Params(), cfg_.lr, cfg_.weight_decay);
  if (tag_ == MethodTag::kRubi) {
    ModelSpec bias;
    bias.arch = Architecture::kMlp;
    int dim = 0;
    for (auto j : explicit_) dim += ds.cardinalities[j];
    bias.input = {dim, 1, 1};
    bias.num_classes = ds.num_classes;
    bias.widths = {cfg_.method.get<methods::RubiParams>().bias_hidden};
    aux_ = std::make_unique<Model<float>>(bias, DeriveSeed(cfg_.seed, kAuxInit));
  } else if (tag_ == MethodTag::kLff) {
    aux_ = std::make_unique<Model<float>>(spec_, DeriveSeed(cfg_.seed, kAuxInit));
  }
  if (aux_) opt_aux_ = std::make_unique<Optimizer<float>>(cfg_.optimizer, aux_->Params(), cfg_.lr, cfg_.weight_decay);
  if (tag_ == MethodTag::kLnl) {
    Rng rng(DeriveSeed(cfg_.seed, kHeadInit));
    std::vector<ParamRef<float>> params;
    for (auto j : explicit_) {
      heads_.push_back(std::make_unique<Linear<float>>(main_.feature_dim(), ds.cardinalities[j], rng,
                                                       "lnl." + ds.factor_names[j], std::sqrt(0.5)));
      heads_.back()->CollectParams(params);
    }
    head_logits_.resize(heads_.size());
    opt_heads_ = std::make_unique<Optimizer<float>>(cfg_.optimizer, params, cfg_.lr, cfg_.weight_decay);
  }
  const std::size_t m = std::min(cfg_.train_eval_size, train.size());
  for (std::size_t k = 0; k < m; ++k) eval_subset_.push_back(k * train.size() / m);
}

std::vector<std::vector<std::size_t>> Runner::EpochBatches(int epoch) const {
  Rng rng(DeriveSeed(cfg_.seed, kBatchOrder, static_cast<std::uint64_t>(epoch)));
  const std::size_t n = ds_.split(data::Split::kTrain).size();
  const auto bs = static_cast<std::size_t>(cfg_.batch_size);
  const std::size_t nb = (n + bs - 1) / bs;
  std::vector<std::vector<std::size_t>> batches(nb);
  const std::size_t num_groups = members_.size();
  const bool gdro_balanced = tag_ == MethodTag::kGdro && cfg_.method.get<methods::GdroParams>().balanced_sampling;
  const int envs = tag_ == MethodTag::kIrm ? cfg_.method.get<methods::IrmParams>().envs_per_batch : 0;
  if (gdro_balanced) {
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t size = std::min(bs, n - b * bs);
      for (std::size_t k = 0; k < size; ++k) {
        const auto& g = members_[rng.Below(num_groups)];
        batches[b].push_back(g[rng.Below(g.size())]);
      }
    }
  } else if (envs > 0 && num_groups > static_cast<std::size_t>(envs)) {
    std::vector<std::size_t> ids(num_groups);
    std::iota(ids.begin(), ids.end(), 0);
    for (std::size_t b = 0; b < nb; ++b) {
      // Partial Fisher-Yates: the first `envs` entries become the batch's environments.
      for (int k = 0; k < envs; ++k) {
        std::swap(ids[static_cast<std::size_t>(k)], ids[static_cast<std::size_t>(k) + rng.Below(num_groups - k)]);
      }
      const std::size_t size = std::min(bs, n - b * bs);
      for (std::size_t k = 0; k < size; ++k) {
        const auto& g = members_[ids[rng.Below(static_cast<std::size_t>(envs))]];
        batches[b].push_back(g[rng.Below(g.size())]);
      }
    }
  } else {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.Shuffle(std::span(perm));
    for (std::size_t b = 0; b < nb; ++b) {
      batches[b].assign(perm.begin() + static_cast<std::ptrdiff_t>(b * bs),
                        perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, (b + 1) * bs)));
    }
  }
  return batches;
}

void Runner::FillFactorOneHot(std::span<const std::size_t> idx) {
  x_aux_.setZero(aux_->spec().input.c, static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    int offset = 0;
    for (auto j : explicit_) {
      x_aux_(offset + ds_.Factor(data::Split::kTrain, idx[k], j), static_cast<Eigen::Index>(k)) = 1.0f;
      offset += ds_.cardinalities[j];
    }
  }
}

double Runner::Step(std::span<const std::size_t> idx) {
  const auto& train = ds_.split(data::Split::kTrain);
  const int batch = static_cast<int>(idx.size());
  std::vector<int> y(idx.size());
  std::vector<int> gid(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    y[k] = train.labels[idx[k]];
    gid[k] = groups_.group_of[idx[k]];
  }
  FillBatch(ds_, data::Split::kTrain, idx, x_);
  main_.ZeroGrad();
  const Mat logits = ToRows(main_.Forward(x_, batch));
  double objective = 0.0;
  switch (tag_) {
    case MethodTag::kStdM: {
      const auto out = methods::LossStdm(logits, y);
      objective = out.loss;
      main_.Backward(ToCols(out.grad));
      break;
    }
    case MethodTag::kUpWt: {
      const auto out = methods::LossUpwt(logits, y, gid, group_counts_);
      objective = out.loss;
      main_.Backward(ToCols(out.grad));
      break;
    }
    case MethodTag::kGdro: {
      const auto out = methods::LossGdro(logits, y, gid, gdro_, cfg_.method.get<methods::GdroParams>().eta);
      objective = out.loss;
      main_.Backward(ToCols(out.grad));
      break;
    }
    case MethodTag::kIrm: {
      const auto out = methods::LossIrm(logits, y, gid, cfg_.method.get<methods::IrmParams>().lambda);
      objective = out.loss;
      main_.Backward(ToCols(out.grad));
      break;
    }
    case MethodTag::kSd: {
      const auto& p = cfg_.method.get<methods::SdParams>();
      const auto ce = methods::LossStdm(logits, y);
      const auto sd = methods::SdPenalty(logits, y, p.lambda, p.gamma);
      objective = ce.loss + sd.loss;
      main_.Backward(ToCols(ce.grad + sd.grad));
      break;
    }
    case MethodTag::kRubi: {
      FillFactorOneHot(idx);
      aux_->ZeroGrad();
      const Mat bias = ToRows(aux_->Forward(x_aux_, batch));
      const auto out = methods::LossRubi(logits, bias, y);
      objective = out.loss;
      main_.Backward(ToCols(out.grad_debiased));
      aux_->Backward(ToCols(out.grad_bias));
      break;
    }
    case MethodTag::kLff: {
      aux_->ZeroGrad();
      const Mat biased = ToRows(aux_->Forward(x_, batch));
      const auto out = methods::LossLff(logits, biased, y, cfg_.method.get<methods::LffParams>().gamma);
      objective = out.loss_debiased + out.loss_biased;
      main_.Backward(ToCols(out.grad_debiased));
      aux_->Backward(ToCols(out.grad_biased));
      break;
    }
    case MethodTag::kLnl: {
      const auto& p = cfg_.method.get<methods::LnlParams>();
      const Tensor<float>& features = main_.features();
      std::vector<Mat> head_rows(heads_.size());
      std::vector<std::vector<int>> targets(heads_.size(), std::vector<int>(idx.size()));
      std::vector<methods::LnlHead> views;
      for (std::size_t h = 0; h < heads_.size(); ++h) {
        heads_[h]->Forward(features, head_logits_[h], batch);
        head_rows[h] = ToRows(head_logits_[h]);
        for (std::size_t k = 0; k < idx.size(); ++k) targets[h][k] = ds_.Factor(data::Split::kTrain, idx[k], explicit_[h]);
      }
      for (std::size_t h = 0; h < heads_.size(); ++h) views.push_back({&head_rows[h], targets[h]});
      const auto out = methods::LossLnl(logits, y, views, p.lambda_grad, p.lambda_ent);
      objective = out.task_loss + out.adversary_loss;
      Tensor<float> dfeat = Tensor<float>::Zero(features.rows(), features.cols());
      std::vector<ParamRef<float>> head_params;
      for (auto& head : heads_) head->CollectParams(head_params);
      for (auto& prm : head_params) prm.grad->setZero();
      for (std::size_t h = 0; h < heads_.size(); ++h) {
        heads_[h]->Backward(features, head_logits_[h], ToCols(out.grad_head[h]), nullptr, batch);
        dfeat.noalias() += heads_[h]->weight().transpose() * ToCols(out.grad_features[h]);
      }
      main_.Backward(ToCols(out.grad_class), &dfeat);
      break;
    }
  }
  if (!std::isfinite(objective)) throw NumericError("non-finite training objective");
  opt_main_->Step();
  if (opt_aux_) opt_aux_->Step();
  if (opt_heads_) opt_heads_->Step();
  return objective;
}

double Runner::TrainEvalLoss() {
  const auto& train = ds_.split(data::Split::kTrain);
  double total = 0.0;
  for (std::size_t start = 0; start < eval_subset_.size(); start += kEvalChunk) {
    const std::size_t end = std::min(eval_subset_.size(), start + kEvalChunk);
    const std::span<const std::size_t> idx(eval_subset_.data() + start, end - start);
    FillBatch(ds_, data::Split::kTrain, idx, x_);
    std::vector<int> y;
    for (auto i : idx) y.push_back(train.labels[i]);
    const Mat logits = ToRows(main_.Forward(x_, static_cast<int>(idx.size())));
    total += methods::CrossEntropy(logits, y).sum();
  }
  return total / static_cast<double>(eval_subset_.size());
}

TrainResult Runner::Run(const TrainHooks& hooks) {
  TrainResult result;
  result.model = spec_;
  metrics::EvalOptions options{cfg_.alphas, cfg_.betas};
  auto log_epoch = [&](int epoch, std::optional<double> train_loss, const metrics::EvalReport& val) {
    EpochLog log{epoch, train_loss, TrainEvalLoss(), val.acc_alpha};
    if (!std::isfinite(log.train_eval_loss)) throw NumericError("non-finite train evaluation loss");
    result.epochs.push_back(log);
    if (hooks.on_epoch) hooks.on_epoch(log);
  };
  try {
    auto val = Evaluate(main_, ds_, data::Split::kVal, eval_, options);
    log_epoch(0, std::nullopt, val);
    double best_score = val.AccAt(cfg_.alpha_select);
    result.best_params = SnapshotParams(main_);
    result.best_val = val;
    for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
      double sum = 0.0;
      const auto batches = EpochBatches(epoch);
      for (std::size_t b = 0; b < batches.size(); ++b) {
        try {
          sum += Step(batches[b]);
        } catch (const NumericError& e) {
          throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(b));
        }
      }
      val = Evaluate(main_, ds_, data::Split::kVal, eval_, options);
      log_epoch(epoch, sum / static_cast<double>(batches.size()), val);
      const double score = val.AccAt(cfg_.alpha_select);
      if (score > best_score) {
        best_score = score;
        result.best_epoch = epoch;
        result.best_params = SnapshotParams(main_);
        result.best_val = val;
      }
    }
    result.final_val = val;
    result.final_test = Evaluate(main_, ds_, data::Split::kTest, eval_, options);
    result.final_params = SnapshotParams(main_);
    RestoreParams(main_, result.best_params);
    result.best_test = Evaluate(main_, ds_, data::Split::kTest, eval_, options);
  } catch (const NumericError& e) {
    result.status = TrialStatus::kDiverged;
    result.diagnostic = e.what();
    result.final_val.reset();
    result.final_test.reset();
    result.best_val.reset();
    result.best_test.reset();
    result.final_params.clear();
    result.best_params.clear();
  }
  return result;
}

}  // namespace

std::string_view TrialStatusName(TrialStatus status) {
  switch (status) {
    case TrialStatus::kOk: return "ok";
    case TrialStatus::kDiverged: return "diverged";
    case TrialStatus::kAborted: return "aborted";
  }
  return "?";
}

TrialStatus ParseTrialStatus(std::string_view name) {
  if (name == "ok") return TrialStatus::kOk;
  if (name == "diverged") return TrialStatus::kDiverged;
  if (name == "aborted") return TrialStatus::kAborted;
  throw ValidationError("unknown trial status '" + std::string(name) + "'");
}

Json ToJson(const EpochLog& log) {
  Json acc = Json::array();
  for (const auto& [a, v] : log.val_acc_alpha) acc.push_back({{"alpha", a}, {"acc", v}});
  return {{"epoch", log.epoch},
          {"train_loss", log.train_loss ? Json(*log.train_loss) : Json(nullptr)},
          {"train_eval_loss", log.train_eval_loss},
          {"val_acc_alpha", acc}};
}

EpochLog EpochLogFromJson(const Json& j) {
  CheckKeys(j, {"epoch", "train_loss", "train_eval_loss", "val_acc_alpha"}, "epoch log");
  EpochLog log;
  log.epoch = j.at("epoch").get<int>();
  if (!j.at("train_loss").is_null()) log.train_loss = j.at("train_loss").get<double>();
  log.train_eval_loss = j.at("train_eval_loss").get<double>();
  for (const auto& a : j.at("val_acc_alpha")) log.val_acc_alpha.emplace_back(a.at("alpha").get<double>(), a.at("acc").get<double>());
  return log;
}

void FillBatch(const data::Dataset& ds, data::Split split, std::span<const std::size_t> indices, Tensor<float>& out) {
  const std::size_t per = ds.input_size();
  if (ds.input == data::InputKind::kImage) {
    out.resize(ds.channels, static_cast<Eigen::Index>(indices.size()) * ds.height * ds.width);
  } else {
    out.resize(static_cast<Eigen::Index>(per), static_cast<Eigen::Index>(indices.size()));
  }
  float* dst = out.data();
  for (auto i : indices) {
    ds.CopyInput(split, i, dst);
    dst += per;
  }
}

std::vector<int> Predict(Model<float>& model, const data::Dataset& ds, data::Split split) {
  const std::size_t n = ds.split(split).size();
  std::vector<int> out(n);
  Tensor<float> x;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += kEvalChunk) {
    const std::size_t end = std::min(n, start + kEvalChunk);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    FillBatch(ds, split, idx, x);
    const auto& logits = model.Forward(x, static_cast<int>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      Eigen::Index arg = 0;
      logits.col(static_cast<Eigen::Index>(k)).maxCoeff(&arg);
      out[start + k] = static_cast<int>(arg);
    }
  }
  return out;
}

metrics::EvalReport Evaluate(Model<float>& model, const data::Dataset& ds, data::Split split,
                             std::span<const std::size_t> group_factors, const metrics::EvalOptions& options) {
  const auto predictions = Predict(model, ds, split);
  return metrics::BuildReport(ds, split, predictions, group_factors, options);
}

std::vector<NamedTensor> SnapshotParams(Model<float>& model) {
  std::vector<NamedTensor> out;
  for (const auto& p : model.Params()) out.push_back({p.name, *p.value});
  return out;
}

void RestoreParams(Model<float>& model, const std::vector<NamedTensor>& params) {
  auto refs = model.Params();
  if (refs.size() != params.size()) throw ValidationError("parameter count mismatch");
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i].name != params[i].name || refs[i].value->rows() != params[i].value.rows() ||
        refs[i].value->cols() != params[i].value.cols()) {
      throw ValidationError("parameter '" + params[i].name + "' does not match the model");
    }
    *refs[i].value = params[i].value;
  }
}

TrainResult Train(const data::Dataset& dataset, const TrainConfig& config, const TrainHooks& hooks) {
  Runner runner(dataset, config);
  return runner.Run(hooks);
}

}  // namespace biasbench::train
