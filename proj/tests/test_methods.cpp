// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "biasbench/error.hpp"
#include "biasbench/methods/losses.hpp"
#include "biasbench/methods/method_config.hpp"
#include "biasbench/rng.hpp"
#include "oracles.hpp"

using namespace biasbench;
using namespace biasbench::methods;

namespace {

Mat RandomLogits(Rng& rng, int n, int c, double scale = 2.0) {
  Mat m(n, c);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < c; ++k) m(i, k) = scale * rng.Normal();
  return m;
}

std::vector<int> RandomLabels(Rng& rng, int n, int c) {
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng.Below(c));
  return y;
}

oracle::Rows ToRows(const Mat& m) {
  oracle::Rows rows(m.rows(), oracle::Row(m.cols()));
  for (int i = 0; i < m.rows(); ++i)
    for (int k = 0; k < m.cols(); ++k) rows[i][k] = m(i, k);
  return rows;
}

oracle::Row Flatten(const Mat& m) { return oracle::Row(m.data(), m.data() + m.size()); }

Mat Unflatten(const oracle::Row& v, int rows, int cols) {
  Mat m(rows, cols);
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

// Max relative error between an analytic gradient and central differences.
double GradCheck(const std::function<double(const Mat&)>& f, const Mat& x, const Mat& analytic, double h = 1e-5) {
  const auto num = oracle::NumericGrad([&](const oracle::Row& v) { return f(Unflatten(v, x.rows(), x.cols())); },
                                       Flatten(x), h);
  const auto ana = Flatten(analytic);
  double num_norm = 0.0, diff = 0.0;
  for (std::size_t k = 0; k < num.size(); ++k) {
    num_norm += num[k] * num[k];
    diff += (num[k] - ana[k]) * (num[k] - ana[k]);
  }
  return std::sqrt(diff) / std::max(std::sqrt(num_norm), 1e-10);
}

}  // namespace

TEST_CASE("StdM cross-entropy") {
  Mat uniform = Mat::Zero(3, 10);
  const std::vector<int> y = {0, 4, 9};
  CHECK(LossStdm(uniform, y).loss == doctest::Approx(std::log(10.0)).epsilon(1e-12));

  Mat confident = Mat::Zero(1, 3);
  confident(0, 1) = 200.0;
  CHECK(LossStdm(confident, std::vector<int>{1}).loss < 1e-80);

  Mat two(2, 2);
  two << 1.0, 2.0, 0.5, -0.5;
  const std::vector<int> y2 = {0, 0};
  const double expected = 0.5 * (std::log(std::exp(1.0) + std::exp(2.0)) - 1.0 +
                                 std::log(std::exp(0.5) + std::exp(-0.5)) - 0.5);
  CHECK(LossStdm(two, y2).loss == doctest::Approx(expected).epsilon(1e-12));

  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const Mat z = RandomLogits(rng, 8, 5);
    const auto y3 = RandomLabels(rng, 8, 5);
    const auto out = LossStdm(z, y3);
    CHECK(out.loss == doctest::Approx(oracle::MeanCe(ToRows(z), y3)).epsilon(1e-12));
    CHECK(GradCheck([&](const Mat& m) { return LossStdm(m, y3).loss; }, z, out.grad) < 1e-6);
  }
  Mat bad = Mat::Zero(1, 2);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(LossStdm(bad, std::vector<int>{0}), NumericError);
  CHECK_THROWS_AS(LossStdm(Mat::Zero(1, 2), std::vector<int>{2}), ValidationError);
}

TEST_CASE("UpWt weighting") {
  Rng rng(2);
  const Mat z = RandomLogits(rng, 6, 3);
  const auto y = RandomLabels(rng, 6, 3);
  const std::vector<int> group = {0, 1, 0, 1, 1, 0};
  const std::vector<double> equal = {50, 50};
  CHECK(std::fabs(LossUpwt(z, y, group, equal).loss - LossStdm(z, y).loss) < 1e-12);

  // Equal per-sample losses: weighting does not matter.
  Mat same = Mat::Zero(4, 3);
  const std::vector<int> ys = {1, 1, 1, 1}, gs = {0, 1, 1, 1};
  const std::vector<double> skew = {1, 99};
  CHECK(std::fabs(LossUpwt(same, ys, gs, skew).loss - std::log(3.0)) < 1e-12);

  // Sizes {4, 1}: the minority sample's gradient is 4x the majority's.
  const std::vector<double> sizes = {4, 1};
  const std::vector<int> g2 = {0, 1};
  const auto out = LossUpwt(Mat::Zero(2, 3), std::vector<int>{0, 0}, g2, sizes);
  CHECK(out.grad(1, 0) / out.grad(0, 0) == doctest::Approx(4.0));
  CHECK_THROWS_AS(LossUpwt(z, y, std::vector<int>{0, 1, 0, 1, 1, 7}, equal), ValidationError);
}

TEST_CASE("GDRO step") {
  auto s = GdroState::Uniform(2);
  const std::vector<double> l = {1.0, 0.0};
  const std::vector<std::uint8_t> both = {1, 1};
  const double loss = GdroStep(l, both, s, 0.01);
  const double expected = std::exp(0.01) / (std::exp(0.01) + 1.0);
  CHECK(std::fabs(s.q[0] - expected) < 1e-15);
  CHECK(s.q[0] == doctest::Approx(0.5025).epsilon(1e-4));
  CHECK(loss == doctest::Approx(expected));

  auto eq = GdroState::Uniform(3);
  eq.q << 0.2, 0.3, 0.5;
  GdroStep(std::vector<double>{0.7, 0.7, 0.7}, std::vector<std::uint8_t>{1, 1, 1}, eq, 0.1);
  CHECK(eq.q[0] == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(eq.q[2] == doctest::Approx(0.5).epsilon(1e-14));

  // An absent group keeps its weight relative to the other absent groups and
  // contributes nothing to the loss.
  auto ab = GdroState::Uniform(3);
  const double l3 = GdroStep(std::vector<double>{2.0, 5.0, 1.0}, std::vector<std::uint8_t>{1, 0, 1}, ab, 0.5);
  CHECK(ab.q[1] < 1.0 / 3.0);
  CHECK(l3 == doctest::Approx(ab.q[0] * 2.0 + ab.q[2] * 1.0));

  auto conv = GdroState::Uniform(2);
  double last = 0.0;
  for (int i = 0; i < 5000; ++i) last = GdroStep(l, both, conv, 0.01);
  CHECK(conv.q[0] > 1.0 - 1e-3);
  CHECK(last == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("GDRO keeps q a positive probability vector") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t g = 2 + rng.Below(8);
    auto s = GdroState::Uniform(g);
    const double eta = rng.Uniform() < 0.5 ? 0.1 : 1.0;
    for (int step = 0; step < 2000; ++step) {
      std::vector<double> l(g);
      std::vector<std::uint8_t> present(g);
      for (std::size_t k = 0; k < g; ++k) {
        l[k] = 10.0 * rng.Uniform();
        present[k] = rng.Uniform() < 0.8;
      }
      GdroStep(l, present, s, eta);
      CHECK(std::fabs(s.q.sum() - 1.0) <= 1e-12);
      CHECK(s.q.minCoeff() > 0.0);
    }
  }
}

TEST_CASE("GDRO loss gradient matches finite differences at fixed q") {
  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    const Mat z = RandomLogits(rng, 12, 4);
    const auto y = RandomLabels(rng, 12, 4);
    std::vector<int> g(12);
    for (auto& v : g) v = static_cast<int>(rng.Below(3));
    auto s = GdroState::Uniform(3);
    const auto out = LossGdro(z, y, g, s, 0.05);
    const Vec q = s.q;
    const auto f = [&](const Mat& m) {
      const auto ce = CrossEntropy(m, y);
      double total = 0.0;
      for (int k = 0; k < 3; ++k) {
        double sum = 0.0;
        int n = 0;
        for (int i = 0; i < 12; ++i)
          if (g[i] == k) sum += ce[i], ++n;
        if (n) total += q[k] * sum / n;
      }
      return total;
    };
    CHECK(out.loss == doctest::Approx(f(z)).epsilon(1e-12));
    CHECK(GradCheck(f, z, out.grad) < 1e-6);
  }
}

TEST_CASE("RUBi combination") {
  Mat d(1, 2), b(1, 2);
  d << 2.0, -1.0;
  b << 1.0, -1.0;
  const Mat c = RubiCombine(d, b);
  CHECK(c(0, 0) == doctest::Approx(1.4621).epsilon(1e-4));
  CHECK(c(0, 1) == doctest::Approx(-0.2689).epsilon(1e-4));
  CHECK(std::fabs(c(0, 0) - 2.0 / (1.0 + std::exp(-1.0))) < 1e-15);

  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const Mat dd = RandomLogits(rng, 5, 6);
    const Mat zero = Mat::Zero(5, 6);
    const Mat half = RubiCombine(dd, zero);
    CHECK((half - 0.5 * dd).cwiseAbs().maxCoeff() < 1e-15);
    Mat row_const(5, 6);
    for (int i = 0; i < 5; ++i) row_const.row(i).setConstant(rng.Normal());
    const Mat cc = RubiCombine(dd, row_const);
    for (int i = 0; i < 5; ++i) {
      Eigen::Index a, bidx;
      dd.row(i).maxCoeff(&a);
      cc.row(i).maxCoeff(&bidx);
      CHECK(a == bidx);
    }
  }

  const Mat dd = RandomLogits(rng, 7, 4);
  const Mat bb = RandomLogits(rng, 7, 4);
  const auto y = RandomLabels(rng, 7, 4);
  const auto out = LossRubi(dd, bb, y);
  CHECK(out.loss == doctest::Approx(out.loss_main + out.loss_bias));
  CHECK(out.loss_bias == doctest::Approx(oracle::MeanCe(ToRows(bb), y)));
  CHECK(GradCheck([&](const Mat& m) { return LossRubi(m, bb, y).loss; }, dd, out.grad_debiased) < 1e-6);
  CHECK(GradCheck([&](const Mat& m) { return LossRubi(dd, m, y).loss; }, bb, out.grad_bias) < 1e-6);
  CHECK_THROWS_AS(LossRubi(dd, Mat::Zero(7, 3), y), ValidationError);
}

TEST_CASE("LNL losses") {
  Rng rng(6);
  const Mat cls = RandomLogits(rng, 9, 5);
  const auto y = RandomLabels(rng, 9, 5);
  const Mat bias = RandomLogits(rng, 9, 10);
  const auto b = RandomLabels(rng, 9, 10);
  const std::vector<LnlHead> heads = {{&bias, b}};

  const auto off = LossLnl(cls, y, heads, 0.0, 0.0);
  CHECK(std::fabs(off.task_loss - LossStdm(cls, y).loss) < 1e-12);
  CHECK(off.grad_features[0].cwiseAbs().maxCoeff() == 0.0);

  // The reversal scales the adversary gradient reaching the features.
  const auto rev = LossLnl(cls, y, heads, -0.1, 0.0);
  CHECK((rev.grad_features[0] + 0.1 * rev.grad_head[0]).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(rev.adversary_loss == doctest::Approx(oracle::MeanCe(ToRows(bias), b)));
  CHECK(GradCheck([&](const Mat& m) { return LossStdm(m, b).loss; }, bias, rev.grad_head[0]) < 1e-6);

  // Entropy at exact uniformity: value ln 10, zero gradient.
  Vec ne;
  const Mat g = NegEntropyGrad(Mat::Zero(3, 10), &ne);
  CHECK(ne[0] == doctest::Approx(-std::log(10.0)).epsilon(1e-14));
  CHECK(g.cwiseAbs().maxCoeff() < 1e-15);
  // Negative-entropy gradient matches finite differences.
  const Mat r = RandomLogits(rng, 4, 6);
  const Mat gr = NegEntropyGrad(r);
  const auto negh = [](const Mat& m) {
    double s = 0.0;
    for (const auto& row : ToRows(m)) {
      const auto p = oracle::SoftmaxRow(row);
      for (double v : p) s += v * std::log(v);
    }
    return s;
  };
  CHECK(GradCheck(negh, r, gr) < 1e-6);

  const auto ent = LossLnl(cls, y, heads, -0.1, 0.5);
  CHECK(ent.task_loss == doctest::Approx(LossStdm(cls, y).loss + 0.5 * ent.neg_entropy));
  CHECK_THROWS_AS(LossLnl(cls, y, heads, -0.1, -1.0), ValidationError);
}

TEST_CASE("IRMv1 penalty") {
  // Single sample, logits [a, -a].
  for (double a : {0.3, 1.0, 2.5}) {
    Mat z(1, 2);
    z << a, -a;
    const std::vector<int> y = {0}, env = {0};
    const auto out = LossIrm(z, y, env, 1.0);
    const double fd = oracle::IrmDwFiniteDiff(ToRows(z), y, 1e-5);
    CHECK(oracle::RelErr(out.dw[0], fd) < 1e-6);
    CHECK(out.penalty == doctest::Approx(fd * fd).epsilon(1e-6));
  }
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    const Mat z = RandomLogits(rng, 16, 4);
    const auto y = RandomLabels(rng, 16, 4);
    std::vector<int> env(16);
    for (auto& e : env) e = 10 + static_cast<int>(rng.Below(3)) * 7;  // non-contiguous ids
    const auto off = LossIrm(z, y, env, 0.0);
    CHECK(std::fabs(off.loss - LossStdm(z, y).loss) < 1e-12);
    const auto out = LossIrm(z, y, env, 3.0);
    CHECK(out.risk == doctest::Approx(oracle::MeanCe(ToRows(z), y)));
    CHECK(GradCheck([&](const Mat& m) { return LossIrm(m, y, env, 3.0).loss; }, z, out.grad) < 1e-5);
  }
  // Saturated, correct predictions: risk and penalty vanish.
  Mat sat = Mat::Zero(2, 2);
  sat(0, 0) = 60;
  sat(1, 1) = 60;
  const auto opt = LossIrm(sat, std::vector<int>{0, 1}, std::vector<int>{0, 1}, 100.0);
  CHECK(opt.risk < 1e-20);
  CHECK(opt.penalty < 1e-20);
}

TEST_CASE("GCE") {
  const double s = 0.5, gamma = 0.7;
  CHECK(GceFromScores(std::vector<double>{s}, gamma)[0] == doctest::Approx(0.54917).epsilon(1e-5));
  CHECK(GceFromScores(std::vector<double>{1.0}, gamma)[0] == 0.0);
  for (double sy : {0.05, 0.3, 0.9})
    CHECK(std::fabs(GceFromScores(std::vector<double>{sy}, 1e-4)[0] + std::log(sy)) < 1e-3);
  bool clamped = false;
  const auto v = GceFromScores(std::vector<double>{0.0}, gamma, &clamped);
  CHECK(clamped);
  CHECK(std::isfinite(v[0]));

  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    const Mat z = RandomLogits(rng, 6, 5);
    const auto y = RandomLabels(rng, 6, 5);
    const auto out = Gce(z, y, 0.7);
    const auto rows = ToRows(z);
    for (int i = 0; i < 6; ++i) CHECK(out.loss[i] == doctest::Approx(oracle::Gce(rows[i], y[i], 0.7)));
    CHECK(GradCheck([&](const Mat& m) { return Gce(m, y, 0.7).loss.sum(); }, z, out.grad) < 1e-6);
  }
  CHECK_THROWS_AS(Gce(Mat::Zero(1, 2), std::vector<int>{0}, 1.5), ValidationError);
}

TEST_CASE("LFF weights and loss") {
  Vec lb(4), ld(4);
  lb << 1.0, 2.0, 1.0, 0.0;
  ld << 1.0, 0.0, 3.0, 0.0;
  const Vec w = LffWeights(lb, ld);
  CHECK(w[0] == 0.5);
  CHECK(w[1] == 1.0);
  CHECK(w[2] == 0.25);
  CHECK(w[3] == 0.5);

  Rng rng(9);
  const Mat z = RandomLogits(rng, 10, 4);
  const auto y = RandomLabels(rng, 10, 4);
  // Identical branches give uniform weights and the plain mean CE.
  const auto same = LossLff(z, z, y, 0.7);
  CHECK(std::fabs(same.loss_debiased - LossStdm(z, y).loss) < 1e-12);
  const Mat zb = RandomLogits(rng, 10, 4);
  const auto out = LossLff(z, zb, y, 0.7);
  for (int i = 0; i < 10; ++i) {
    CHECK(out.weights[i] >= 0.0);
    CHECK(out.weights[i] <= 1.0);
  }
  CHECK(out.loss_biased == doctest::Approx(Gce(zb, y, 0.7).loss.mean()));
  // Weights are constants for the debiased gradient.
  const Vec wt = out.weights;
  const auto f = [&](const Mat& m) {
    const auto ce = CrossEntropy(m, y);
    return (wt.array() * ce.array()).sum() / wt.sum();
  };
  CHECK(GradCheck(f, z, out.grad_debiased) < 1e-6);
  CHECK(GradCheck([&](const Mat& m) { return Gce(m, y, 0.7).loss.mean(); }, zb, out.grad_biased) < 1e-6);
}

TEST_CASE("SD penalty") {
  Mat z(1, 2);
  z << 3.0, 4.0;
  const std::vector<double> one = {1.0}, zero = {0.0};
  CHECK(SdPenalty(z, std::vector<int>{0}, one, zero).loss == doctest::Approx(12.5).epsilon(1e-15));
  Mat at(2, 3);
  at.setConstant(0.44);
  const std::vector<double> lam = {10.0, 10.0}, gam = {0.44, 2.5};
  CHECK(SdPenalty(at, std::vector<int>{0, 0}, lam, gam).loss == 0.0);
  CHECK(SdPenalty(at, std::vector<int>{0, 1}, lam, gam).loss > 0.0);

  Rng rng(10);
  const Mat r = RandomLogits(rng, 5, 2);
  const auto y = RandomLabels(rng, 5, 2);
  const auto out = SdPenalty(r, y, lam, gam);
  CHECK(GradCheck([&](const Mat& m) { return SdPenalty(m, y, lam, gam).loss; }, r, out.grad) < 1e-6);
  const std::vector<double> neg = {-1.0};
  CHECK_THROWS_AS(SdPenalty(r, y, neg, zero), ValidationError);
}

TEST_CASE("Off-switches reproduce StdM") {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const int n = 8, c = 4;
    const Mat z = RandomLogits(rng, n, c);
    const auto y = RandomLabels(rng, n, c);
    const double ref = LossStdm(z, y).loss;
    std::vector<int> g(n);
    for (int i = 0; i < n; ++i) g[i] = i % 2;  // balanced groups, as the GDRO sampler draws
    const std::vector<double> counts = {10, 10};
    CHECK(std::fabs(LossUpwt(z, y, g, counts).loss - ref) < 1e-9);
    auto q = GdroState::Uniform(2);
    CHECK(std::fabs(LossGdro(z, y, g, q, 0.0).loss - ref) < 1e-9);
    CHECK(std::fabs(LossRubi(z, Mat::Constant(n, c, 40.0), y).loss_main - ref) < 1e-9);
    const Mat bias = RandomLogits(rng, n, 3);
    const auto b = RandomLabels(rng, n, 3);
    const std::vector<LnlHead> heads = {{&bias, b}};
    CHECK(std::fabs(LossLnl(z, y, heads, 0.0, 0.0).task_loss - ref) < 1e-9);
    CHECK(std::fabs(LossIrm(z, y, g, 0.0).loss - ref) < 1e-9);
    CHECK(std::fabs(LossLff(z, z, y, 0.7).loss_debiased - ref) < 1e-9);
    const std::vector<double> l0 = {0.0}, g0 = {0.1};
    CHECK(std::fabs(ref + SdPenalty(z, y, l0, g0).loss - ref) < 1e-9);
  }
}

TEST_CASE("MethodConfig parsing and validation") {
  for (const auto tag : kAllMethods) {
    const auto m = MethodConfig::Default(tag);
    CHECK(m.tag() == tag);
    CHECK(MethodConfigFromJson(ToJson(m)).tag() == tag);
    CHECK(ToJson(MethodConfigFromJson(ToJson(m))) == ToJson(m));
    CHECK(ParseMethodTag(MethodName(tag)) == tag);
    m.Validate(10);
  }
  CHECK(MethodConfigFromJson(Json("GDRO")).get<GdroParams>().eta == 0.01);
  CHECK(MethodConfigFromJson(Json{{"name", "SD"}, {"lambda", 1.0}, {"gamma", 2.0}}).get<SdParams>().gamma ==
        std::vector<double>{2.0});
  CHECK_THROWS_AS(MethodConfigFromJson(Json{{"name", "GDRO"}, {"etaa", 1}}), ValidationError);
  CHECK_THROWS_AS(MethodConfigFromJson(Json("Bogus")), ValidationError);
  CHECK_THROWS_AS(MethodConfigFromJson(Json{{"name", "LFF"}, {"gamma", 0.0}}).Validate(10), ValidationError);
  CHECK_THROWS_AS(MethodConfigFromJson(Json{{"name", "LNL"}, {"lambda_grad", 0.5}}).Validate(10), ValidationError);
  CHECK_THROWS_AS(MethodConfigFromJson(Json{{"name", "LNL"}, {"lambda_ent", -1}}).Validate(10), ValidationError);
  CHECK_THROWS_AS(MethodConfigFromJson(Json{{"name", "SD"}, {"lambda", -1.0}}).Validate(10), ValidationError);
  CHECK_THROWS_AS(MethodConfigFromJson(Json{{"name", "SD"}, {"lambda", {1.0, 2.0}}, {"gamma", {1.0, 2.0}}}).Validate(10),
                  ValidationError);
  CHECK(IsExplicit(MethodTag::kUpWt));
  CHECK_FALSE(IsExplicit(MethodTag::kLff));
}
