// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "biasbench/data/generate.hpp"
#include "biasbench/data/group_task.hpp"
#include "biasbench/error.hpp"
#include "biasbench/rng.hpp"
#include "biasbench/train/checkpoint.hpp"
#include "biasbench/train/model.hpp"
#include "biasbench/train/optimizer.hpp"
#include "biasbench/train/trainer.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace biasbench;
using namespace biasbench::train;

namespace {

data::Dataset TinyImages(std::size_t n, std::uint64_t seed = 1) {
  auto spec = data::BiasSpec::Default();
  spec.seed = seed;
  spec.cell_size = 12;
  spec.split_sizes = {n, n / 2, n / 2};
  spec.corpus.kind = data::CorpusSource::Kind::kFont;
  return data::GenerateDataset(spec);
}

data::Dataset TinyGroupTask(std::uint64_t seed = 1) {
  data::GroupTaskSpec spec;
  spec.rare_fraction = 0.02;
  spec.n_train = 4000;
  spec.n_val = spec.n_test = 1000;
  spec.seed = seed;
  return data::GenerateGroupTask(spec);
}

template <typename T>
Tensor<T> RandomInput(Rng& rng, const ModelSpec& spec, int batch) {
  Tensor<T> x(spec.input.c, static_cast<Eigen::Index>(batch) * spec.input.spatial());
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<T>(rng.Uniform(-1.0, 1.0));
  return x;
}

// Directional finite-difference check of d/dtheta sum(R * logits) (+ sum(F * features)).
double ModelGradCheck(const ModelSpec& spec, bool feature_grad, std::uint64_t seed) {
  Model<double> model(spec, seed);
  Rng rng(seed + 100);
  const int batch = 3;
  const auto x = RandomInput<double>(rng, spec, batch);
  Tensor<double> r(spec.num_classes, batch), f(model.feature_dim(), batch);
  for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = rng.Normal();
  for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = rng.Normal();
  const auto objective = [&] {
    double v = model.Forward(x, batch).cwiseProduct(r).sum();
    if (feature_grad) v += model.features().cwiseProduct(f).sum();
    return v;
  };
  model.ZeroGrad();
  objective();
  model.Backward(r, feature_grad ? &f : nullptr);
  auto params = model.Params();
  // Random direction over a random subset of parameter entries.
  std::vector<Tensor<double>> dir;
  double analytic = 0.0;
  for (auto& p : params) {
    Tensor<double> d = Tensor<double>::Zero(p.value->rows(), p.value->cols());
    for (Eigen::Index i = 0; i < d.size(); ++i)
      if (rng.Uniform() < 0.3) d.data()[i] = rng.Normal();
    dir.push_back(std::move(d));
  }
  // Unit-norm direction keeps the probe away from ReLU and max-pool kinks.
  double norm = 0.0;
  for (const auto& d : dir) norm += d.squaredNorm();
  for (std::size_t k = 0; k < params.size(); ++k) {
    dir[k] /= std::sqrt(norm);
    analytic += dir[k].cwiseProduct(*params[k].grad).sum();
  }
  const double h = 1e-4;
  const auto shift = [&](double s) {
    for (std::size_t k = 0; k < params.size(); ++k) *params[k].value += s * dir[k];
  };
  shift(h);
  const double up = objective();
  shift(-2 * h);
  const double down = objective();
  shift(h);
  return oracle::RelErr(analytic, (up - down) / (2 * h));
}

TrainConfig QuickConfig(methods::MethodTag tag, int epochs = 1) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 64;
  c.method = methods::MethodConfig::Default(tag);
  c.explicit_factors = {"digit_color"};
  c.train_eval_size = 256;
  return c;
}

}  // namespace

TEST_CASE("grid_cnn shape contract and coordinate channels") {
  ModelSpec spec;
  spec.input = {3, 96, 96};
  Model<float> m(spec, 1);
  Rng rng(1);
  const auto& logits = m.Forward(RandomInput<float>(rng, spec, 4), 4);
  CHECK(logits.rows() == 10);
  CHECK(logits.cols() == 4);

  auto coord = spec;
  coord.coord_channels = true;
  Model<float> mc(coord, 1);
  const auto conv1_fan_in = [](Model<float>& model) {
    for (auto& p : model.Params())
      if (p.name.rfind("conv1", 0) == 0 && p.value->cols() > 1) return p.value->cols();
    return Eigen::Index{0};
  };
  CHECK(conv1_fan_in(m) == 3 * 9);
  CHECK(conv1_fan_in(mc) == 5 * 9);
  // Coordinates are inserted before and after the pool: 2*9 extra weights per
  // output channel of conv1 and conv2.
  CHECK(mc.ParameterCount() - m.ParameterCount() == static_cast<std::size_t>(2 * 9 * (8 + 16)));

  int convs = 0;
  for (auto& p : m.Params())
    if (p.name.rfind("conv", 0) == 0 && p.value->cols() > 1) ++convs;
  CHECK(convs == 4);
  spec.widths = {8, 16};
  CHECK_THROWS_AS(spec.Validate(), ValidationError);
}

TEST_CASE("Seeded initialization") {
  ModelSpec spec{Architecture::kMlp, {6, 1, 1}, 3, {16, 8}, false};
  Model<float> a(spec, 7), b(spec, 7), c(spec, 8);
  auto pa = a.Params(), pb = b.Params(), pc = c.Params();
  bool any_diff = false;
  for (std::size_t k = 0; k < pa.size(); ++k) {
    CHECK(*pa[k].value == *pb[k].value);
    any_diff |= *pa[k].value != *pc[k].value;
  }
  CHECK(any_diff);
}

TEST_CASE("Model gradients match finite differences") {
  ModelSpec cnn;
  cnn.input = {3, 16, 16};
  cnn.widths = {4, 5, 6, 7};
  ModelSpec coord = cnn;
  coord.coord_channels = true;
  ModelSpec mlp{Architecture::kMlp, {5, 1, 1}, 3, {7, 6}, false};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CHECK(ModelGradCheck(cnn, false, seed) < 1e-6);
    CHECK(ModelGradCheck(coord, true, seed) < 1e-6);
    CHECK(ModelGradCheck(mlp, true, seed) < 1e-6);
  }
}

TEST_CASE("Optimizers") {
  Tensor<double> w = Tensor<double>::Constant(2, 1, 1.0), g(2, 1);
  g << 0.5, -2.0;
  {
    auto v = w;
    Optimizer<double> sgd(OptimizerKind::kSgd, {{"w", &v, &g}}, 0.1, 0.0);
    sgd.Step();
    CHECK(v(0) == doctest::Approx(0.95));
    CHECK(v(1) == doctest::Approx(1.2));
  }
  {
    auto v = w;
    Optimizer<double> adam(OptimizerKind::kAdam, {{"w", &v, &g}}, 0.01, 0.0);
    adam.Step();
    // Adam's bias-corrected first step moves each coordinate by about lr.
    CHECK(v(0) == doctest::Approx(0.99).epsilon(1e-6));
    CHECK(v(1) == doctest::Approx(1.01).epsilon(1e-6));
  }
  {
    auto v = w;
    Tensor<double> zero = Tensor<double>::Zero(2, 1);
    Optimizer<double> sgd(OptimizerKind::kSgd, {{"w", &v, &zero}}, 0.1, 0.5);
    sgd.Step();
    CHECK(v(0) == doctest::Approx(0.95));  // decay alone: w -= lr * wd * w
  }
  CHECK(ParseOptimizer("adam") == OptimizerKind::kAdam);
  CHECK_THROWS_AS(ParseOptimizer("rmsprop"), ValidationError);
}

TEST_CASE("TrainConfig JSON and validation") {
  auto c = QuickConfig(methods::MethodTag::kLnl);
  c.widths = {4, 4, 4, 4};
  c.arch = Architecture::kGridCnn;
  const auto back = TrainConfigFromJson(ToJson(c));
  CHECK(back == c);
  CHECK(ToJson(back) == ToJson(c));
  Json j = ToJson(c);
  j["learning_rate"] = 1;
  CHECK_THROWS_AS(TrainConfigFromJson(j), ValidationError);
  auto rubi = QuickConfig(methods::MethodTag::kRubi);
  rubi.explicit_factors.clear();
  CHECK_THROWS_AS(rubi.Validate(), ValidationError);
  auto neg = QuickConfig(methods::MethodTag::kStdM);
  neg.lr = -1;
  CHECK_THROWS_AS(neg.Validate(), ValidationError);
}

TEST_CASE("Train: zero epochs is chance level") {
  const auto ds = TinyImages(600);
  auto c = QuickConfig(methods::MethodTag::kStdM, 0);
  const auto r = Train(ds, c);
  REQUIRE(r.status == TrialStatus::kOk);
  REQUIRE(r.final_test);
  CHECK(r.epochs.size() == 1);
  CHECK_FALSE(r.epochs[0].train_loss.has_value());
  CHECK(std::fabs(r.final_test->accuracy() - 0.1) < 0.08);
  CHECK(r.final_test->acc_alpha.size() == 7);
}

TEST_CASE("Train: every method runs through the same loop") {
  const auto ds = TinyImages(300);
  for (const auto tag : methods::kAllMethods) {
    CAPTURE(methods::MethodName(tag));
    auto c = QuickConfig(tag, 1);
    const auto r = Train(ds, c);
    CHECK(r.status == TrialStatus::kOk);
    REQUIRE(r.final_val);
    CHECK(r.epochs.size() == 2);
    CHECK(std::isfinite(*r.epochs[1].train_loss));
    CHECK(r.final_params.size() == r.best_params.size());
  }
  auto gt = QuickConfig(methods::MethodTag::kGdro, 1);
  gt.explicit_factors = {"bias"};
  CHECK(Train(TinyGroupTask(), gt).status == TrialStatus::kOk);
}

TEST_CASE("Train: bitwise determinism and learning") {
  const auto ds = TinyGroupTask(3);
  TrainConfig c;
  c.epochs = 5;
  c.method = methods::MethodConfig::Default(methods::MethodTag::kStdM);
  const auto a = Train(ds, c);
  const auto b = Train(ds, c);
  REQUIRE(a.status == TrialStatus::kOk);
  CHECK(a.epochs == b.epochs);
  CHECK(metrics::ToJson(*a.final_test) == metrics::ToJson(*b.final_test));
  CHECK(a.best_epoch == b.best_epoch);
  CHECK(a.epochs[5].train_eval_loss < a.epochs[0].train_eval_loss);
  c.seed = 1;
  CHECK(Train(ds, c).epochs != a.epochs);
}

TEST_CASE("Train: divergence yields a diagnostic record") {
  const auto ds = TinyGroupTask(2);
  TrainConfig c;
  c.epochs = 3;
  c.optimizer = OptimizerKind::kSgd;
  c.lr = 1e30;
  const auto r = Train(ds, c);
  CHECK(r.status == TrialStatus::kDiverged);
  CHECK_FALSE(r.diagnostic.empty());
  CHECK_FALSE(r.final_test.has_value());
  CHECK(r.final_params.empty());
}

TEST_CASE("Checkpoint round trip restores predictions") {
  const auto ds = TinyGroupTask(4);
  TrainConfig c;
  c.epochs = 1;
  const auto r = Train(ds, c);
  REQUIRE(r.status == TrialStatus::kOk);
  Checkpoint ck{r.model, r.final_params};
  const auto bytes = SerializeCheckpoint(ck);
  const auto back = ParseCheckpoint(bytes);
  CHECK(SerializeCheckpoint(back) == bytes);
  Model<float> m(back.model, 999);
  RestoreParams(m, back.tensors);
  const auto report = Evaluate(m, ds, data::Split::kTest, {}, {});
  CHECK(report.correct == r.final_test->correct);
  CHECK_THROWS_AS(ParseCheckpoint(bytes.substr(0, bytes.size() - 3)), IngestionError);
  CHECK_THROWS_AS(ParseCheckpoint("XXXX" + bytes.substr(4)), IngestionError);
}
