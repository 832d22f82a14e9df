// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails. `acceptance 3 9` runs a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "biasbench/data/generate.hpp"
#include "biasbench/data/group_task.hpp"
#include "biasbench/expcli/config.hpp"
#include "biasbench/expcli/reports.hpp"
#include "biasbench/expcli/store.hpp"
#include "biasbench/methods/losses.hpp"
#include "biasbench/metrics/groups.hpp"
#include "biasbench/rng.hpp"
#include "biasbench/sweep/sweep.hpp"
#include "biasbench/train/trainer.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace biasbench;
using methods::Mat;

namespace {

// Pinned tolerances and thresholds.
constexpr double kGenTolerance = 0.02;          // 1: |majority fraction - 0.7|
constexpr double kChiSquareLevel = 0.01;        // 1: uniformity significance
constexpr double kGenMaxSeconds = 120.0;        // 1
constexpr double kClosedFormTol = 1e-12;        // 2
constexpr double kGradRelTol = 1e-4;            // 3
constexpr double kFiniteDiffStep = 1e-5;        // 3
constexpr int kGradBatches = 100;               // 3
constexpr double kOffSwitchTol = 1e-9;          // 4
constexpr double kExploitGap = 0.15;            // 5: majority - unbiased
constexpr double kExploitMaxSeconds = 600.0;    // 5
constexpr double kWorstGroupMargin = 0.10;      // 6
constexpr int kHiddenMinSeeds = 2;              // 7: of 3
constexpr int kGdroSteps = 10000;               // 9
constexpr double kGdroSumTol = 1e-12;           // 9
constexpr double kGdroLimitTol = 1e-3;          // 9

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Every EvalReport produced by the training criteria, for criterion 2.
std::vector<metrics::EvalReport> g_reports;

void Collect(const train::TrainResult& r) {
  for (const auto* rep : {&r.final_val, &r.final_test, &r.best_val, &r.best_test})
    if (*rep) g_reports.push_back(**rep);
}

std::string Fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Mat RandomLogits(Rng& rng, int n, int c, double scale) {
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

oracle::Row RowOf(const Mat& m, int i) {
  oracle::Row r(m.cols());
  for (int k = 0; k < m.cols(); ++k) r[k] = m(i, k);
  return r;
}

// ---------------------------------------------------------------------------

Outcome GeneratorStatistics() {
  const auto t0 = std::chrono::steady_clock::now();
  auto spec = data::BiasSpec::Default();
  spec.seed = 2026;
  spec.split_sizes = {20000, 5000, 20000};
  spec.SetAllPBias(data::Split::kTrain, 0.7);
  spec.SetUniformPBias(data::Split::kTest);  // 0.1 for every cardinality-10 factor
  const auto ds = data::GenerateDataset(spec);
  const double secs = Seconds(t0);

  bool pass = secs < kGenMaxSeconds;
  double worst_dev = 0.0, worst_p = 1.0;
  for (std::size_t j = 0; j < ds.num_factors(); ++j) {
    const auto& tr = ds.split(data::Split::kTrain);
    std::size_t maj = 0;
    for (std::size_t i = 0; i < tr.size(); ++i) maj += ds.IsMajority(data::Split::kTrain, i, j);
    const double dev = std::fabs(maj / double(tr.size()) - 0.7);
    worst_dev = std::max(worst_dev, dev);
    pass &= dev <= kGenTolerance;

    const auto& te = ds.split(data::Split::kTest);
    std::vector<std::size_t> counts(ds.cardinalities[j], 0);
    for (std::size_t i = 0; i < te.size(); ++i) counts[ds.Factor(data::Split::kTest, i, j)]++;
    const double p = oracle::ChiSquareSurvival(oracle::ChiSquareStatistic(counts), ds.cardinalities[j] - 1);
    worst_p = std::min(worst_p, p);
    pass &= p > kChiSquareLevel;
  }
  return {pass, Fmt("max |frac-0.7| = %.4f (<= %.2f), min chi-square p = %.3f (> %.2f), %.1fs", worst_dev,
                    kGenTolerance, worst_p, kChiSquareLevel, secs)};
}

Outcome AccAlphaClosedForms() {
  metrics::GroupTable t;
  t.total = 10;
  t.groups = {{{0, {}}, 9, 9, 0.9}, {{1, {}}, 1, 0, 0.1}};
  const double e0 = std::fabs(metrics::AccAlpha(t, 0.0) - 0.5);
  const double e1 = std::fabs(metrics::AccAlpha(t, 1.0) - 0.9);
  const double em = std::fabs(metrics::AccAlpha(t, -1.0) - 0.1);
  bool pass = e0 <= kClosedFormTol && e1 <= kClosedFormTol && em <= kClosedFormTol;
  double worst = 0.0;
  for (const auto& r : g_reports) {
    double mean = 0.0;
    for (const auto& g : r.groups.groups) mean += g.accuracy() / r.groups.size();
    worst = std::max({worst, std::fabs(r.AccAt(0.0) - mean), std::fabs(r.AccAt(1.0) - r.accuracy())});
  }
  pass &= worst <= kClosedFormTol && !g_reports.empty();
  return {pass, Fmt("closed-form errors %.1e %.1e %.1e; identities on %zu reports, max error %.1e", e0, e1, em,
                    g_reports.size(), worst)};
}

Outcome GradientOracles() {
  Rng rng(303);
  double worst_identity = 0.0, worst_fd = 0.0, worst_irm = 0.0;
  for (int b = 0; b < kGradBatches; ++b) {
    const int n = 1 + static_cast<int>(rng.Below(16)), c = 2 + static_cast<int>(rng.Below(9));
    const Mat z = RandomLogits(rng, n, c, 3.0);
    const auto y = RandomLabels(rng, n, c);
    const double gamma = rng.Uniform(0.05, 1.0);
    const auto gce = methods::Gce(z, y, gamma);
    for (int i = 0; i < n; ++i) {
      const auto row = RowOf(z, i);
      const auto p = oracle::SoftmaxRow(row);
      const double scale = std::pow(p[y[i]], gamma);
      oracle::Row ce_grad(c), analytic(c);
      for (int k = 0; k < c; ++k) {
        ce_grad[k] = p[k] - (k == y[i] ? 1.0 : 0.0);
        analytic[k] = gce.grad(i, k);
      }
      const auto fd = oracle::NumericGrad([&](const oracle::Row& v) { return oracle::Gce(v, y[i], gamma); }, row,
                                          kFiniteDiffStep);
      double num = 0, den = 0, num_fd = 0;
      for (int k = 0; k < c; ++k) {
        num += std::pow(analytic[k] - scale * ce_grad[k], 2);
        num_fd += std::pow(analytic[k] - fd[k], 2);
        den += fd[k] * fd[k];
      }
      den = std::max(std::sqrt(den), 1e-8);
      worst_identity = std::max(worst_identity, std::sqrt(num) / den);
      worst_fd = std::max(worst_fd, std::sqrt(num_fd) / den);
    }

    // IRMv1: penalty against (finite-difference d/dw CE(w z) at w = 1)^2.
    std::vector<int> env(n);
    const int envs = 1 + static_cast<int>(rng.Below(4));
    for (auto& e : env) e = static_cast<int>(rng.Below(envs));
    const double lambda = rng.Uniform(0.5, 10.0);
    const auto irm = methods::LossIrm(z, y, env, lambda);
    double penalty_fd = 0.0;
    for (int e = 0; e < envs; ++e) {
      oracle::Rows rows;
      std::vector<int> ys;
      for (int i = 0; i < n; ++i)
        if (env[i] == e) rows.push_back(RowOf(z, i)), ys.push_back(y[i]);
      if (rows.empty()) continue;
      const double d = oracle::IrmDwFiniteDiff(rows, ys, kFiniteDiffStep);
      penalty_fd += d * d;
    }
    penalty_fd *= lambda;
    if (penalty_fd > 1e-12) worst_irm = std::max(worst_irm, oracle::RelErr(irm.penalty, penalty_fd));
  }
  const bool pass = worst_identity < kGradRelTol && worst_fd < kGradRelTol && worst_irm < kGradRelTol;
  return {pass, Fmt("%d batches: GCE identity %.1e, GCE vs FD %.1e, IRMv1 penalty vs FD %.1e (< %.0e)", kGradBatches,
                    worst_identity, worst_fd, worst_irm, kGradRelTol)};
}

Outcome OffSwitches() {
  Rng rng(404);
  std::map<std::string, double> worst;
  for (int b = 0; b < 200; ++b) {
    const int half = 1 + static_cast<int>(rng.Below(32)), n = 2 * half, c = 2 + static_cast<int>(rng.Below(9));
    const Mat z = RandomLogits(rng, n, c, 3.0);
    const auto y = RandomLabels(rng, n, c);
    const double ref = methods::LossStdm(z, y).loss;
    // Balanced groups, as drawn by the group-balanced sampler.
    std::vector<int> group(n);
    for (int i = 0; i < n; ++i) group[i] = i % 2;
    const std::vector<double> equal = {100, 100};
    const auto track = [&](const std::string& name, double v) { worst[name] = std::max(worst[name], std::fabs(v - ref)); };
    track("UpWt", methods::LossUpwt(z, y, group, equal).loss);
    auto q = methods::GdroState::Uniform(2);
    track("GDRO", methods::LossGdro(z, y, group, q, 0.0).loss);
    track("RUBi", methods::LossRubi(z, Mat::Constant(n, c, 40.0), y).loss_main);
    const Mat bias = RandomLogits(rng, n, 10, 2.0);
    const auto bias_y = RandomLabels(rng, n, 10);
    const std::vector<methods::LnlHead> heads = {{&bias, bias_y}};
    track("LNL", methods::LossLnl(z, y, heads, 0.0, 0.0).task_loss);
    track("IRMv1", methods::LossIrm(z, y, group, 0.0).loss);
    track("LFF", methods::LossLff(z, z, y, rng.Uniform(0.1, 1.0)).loss_debiased);
    const std::vector<double> l0 = {0.0}, g0 = {rng.Normal()};
    track("SD", ref + methods::SdPenalty(z, y, l0, g0).loss);
  }
  bool pass = true;
  std::string detail;
  for (const auto& [name, err] : worst) {
    pass &= err < kOffSwitchTol;
    detail += Fmt("%s %.0e ", name.c_str(), err);
  }
  return {pass, detail + Fmt("(< %.0e over 200 batches)", kOffSwitchTol)};
}

Outcome BiasExploitation() {
  const auto t0 = std::chrono::steady_clock::now();
  auto spec = data::BiasSpec::Default();
  spec.seed = 5;
  spec.split_sizes = {20000, 5000, 5000};
  for (auto s : data::kAllSplits) spec.SetUniformPBias(s);
  spec.SetPBias(data::Split::kTrain, "digit_color", 0.99);
  spec.SetPBias(data::Split::kVal, "digit_color", 0.99);
  const auto ds = data::GenerateDataset(spec);
  bool pass = true;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    train::TrainConfig c;
    c.epochs = 5;
    c.seed = seed;
    c.eval_factors = {"digit_color"};
    const auto r = train::Train(ds, c);
    if (r.status != train::TrialStatus::kOk) return {false, "trial failed: " + r.diagnostic};
    Collect(r);
    const auto& test = *r.final_test;
    const double maj = test.Factor("digit_color").majmin->majority, unb = test.AccAt(0.0);
    pass &= maj - unb >= kExploitGap;
    const bool learned = r.epochs.back().train_eval_loss < r.epochs.front().train_eval_loss;
    detail += Fmt("seed %d: maj %.3f unb %.3f%s; ", int(seed), maj, unb, learned ? "" : " (loss did not drop)");
  }
  const double secs = Seconds(t0);
  pass &= secs < kExploitMaxSeconds;
  return {pass, detail + Fmt("%.0fs", secs)};
}

double WorstGroup(const metrics::EvalReport& r) {
  double w = 1.0;
  for (const auto& g : r.groups.groups) w = std::min(w, g.accuracy());
  return w;
}

data::Dataset FourGroupTask() {
  data::GroupTaskSpec spec;  // correlation 0.95, rare fraction 1%, 100k train
  spec.seed = 6;
  return data::GenerateGroupTask(spec);
}

Outcome WorstGroupImprovement() {
  const auto ds = FourGroupTask();
  std::map<methods::MethodTag, double> mean;
  for (auto tag : {methods::MethodTag::kStdM, methods::MethodTag::kUpWt, methods::MethodTag::kGdro}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      train::TrainConfig c;
      c.epochs = 5;
      c.seed = seed;
      c.method = methods::MethodConfig::Default(tag);
      c.explicit_factors = {"bias"};
      const auto r = train::Train(ds, c);
      if (r.status != train::TrialStatus::kOk) return {false, "trial failed: " + r.diagnostic};
      Collect(r);
      mean[tag] += WorstGroup(*r.final_test) / 3.0;
    }
  }
  const double base = mean[methods::MethodTag::kStdM];
  const double up = mean[methods::MethodTag::kUpWt], gdro = mean[methods::MethodTag::kGdro];
  const bool pass = up - base >= kWorstGroupMargin && gdro - base >= kWorstGroupMargin;
  return {pass, Fmt("mean worst-group test accuracy: StdM %.3f, UpWt %.3f, GDRO %.3f (margin >= %.2f)", base, up,
                    gdro, kWorstGroupMargin)};
}

Outcome HiddenBias() {
  auto spec = data::BiasSpec::Default();
  spec.seed = 7;
  spec.split_sizes = {20000, 5000, 5000};
  for (auto s : data::kAllSplits) spec.SetUniformPBias(s);
  for (auto s : {data::Split::kTrain, data::Split::kVal}) {
    spec.SetPBias(s, "digit_color", 0.99);
    spec.SetPBias(s, "background_color", 0.99);
  }
  const auto ds = data::GenerateDataset(spec);
  int hits = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    train::TrainConfig c;
    c.epochs = 5;
    c.seed = seed;
    c.method = methods::MethodConfig::Default(methods::MethodTag::kUpWt);
    c.explicit_factors = {"digit_color"};
    const auto r = train::Train(ds, c);
    if (r.status != train::TrialStatus::kOk) return {false, "trial failed: " + r.diagnostic};
    Collect(r);
    const double hidden = r.final_test->Factor("background_color").majmin->mmd();
    const double expl = r.final_test->Factor("digit_color").majmin->mmd();
    hits += hidden > expl;
    detail += Fmt("seed %d: MMD hidden %.3f explicit %.3f; ", int(seed), hidden, expl);
  }
  return {hits >= kHiddenMinSeeds, detail + Fmt("%d/3 seeds", hits)};
}

Outcome SelectionSensitivity() {
  const auto ds = FourGroupTask();
  sweep::SweepPlan plan;
  plan.base.epochs = 5;
  plan.base.method = methods::MethodConfig::Default(methods::MethodTag::kUpWt);
  plan.base.explicit_factors = {"bias"};
  plan.seeds = {0, 1, 2};
  const auto runner = [&](const train::TrainConfig& c) {
    const auto r = train::Train(ds, c);
    Collect(r);
    return expcli::MakeRecord(expcli::DatasetIdentity(ds), c, r);
  };
  const auto trials = sweep::RunSweep(plan, runner);
  const auto s = sweep::SelectionSensitivity(trials, metrics::DefaultAlphaGrid());
  std::set<std::string> winners;
  for (const auto& row : s.rows) winners.insert(row.winner_id);
  const bool pass = s.minority_range > s.majority_range;
  return {pass, Fmt("%zu trials, %zu distinct winners over 7 alphas; range minority %s %.3f vs majority %s %.3f "
                    "(rest-mean %.3f)",
                    trials.size(), winners.size(), metrics::ToString(s.minority).c_str(), s.minority_range,
                    metrics::ToString(s.majority).c_str(), s.majority_range, s.rest_range)};
}

Outcome GdroState() {
  Rng rng(909);
  double worst_sum = 0.0, min_q = 1.0;
  for (int run = 0; run < 5; ++run) {
    const std::size_t g = 2 + rng.Below(15);
    auto state = methods::GdroState::Uniform(g);
    const double eta = std::vector<double>{0.001, 0.01, 0.1, 1.0, 5.0}[run];
    for (int step = 0; step < kGdroSteps; ++step) {
      std::vector<double> l(g);
      std::vector<std::uint8_t> present(g);
      for (std::size_t k = 0; k < g; ++k) {
        l[k] = rng.Uniform(0.0, 5.0);
        present[k] = rng.Uniform() < 0.7;
      }
      methods::GdroStep(l, present, state, eta);
      worst_sum = std::max(worst_sum, std::fabs(state.q.sum() - 1.0));
      min_q = std::min(min_q, state.q.minCoeff());
    }
  }
  auto fixed = methods::GdroState::Uniform(2);
  const std::vector<double> l = {1.0, 0.0};
  const std::vector<std::uint8_t> both = {1, 1};
  for (int step = 0; step < kGdroSteps; ++step) methods::GdroStep(l, both, fixed, 0.01);
  const double dist = std::max(std::fabs(fixed.q[0] - 1.0), std::fabs(fixed.q[1]));
  const bool pass = worst_sum <= kGdroSumTol && min_q > 0.0 && dist < kGdroLimitTol;
  return {pass, Fmt("max |sum q - 1| = %.1e, min q = %.2e, fixed-loss limit distance %.1e", worst_sum, min_q, dist)};
}

Outcome Reproducibility() {
  data::GroupTaskSpec gt;
  gt.n_train = 20000;
  gt.n_val = gt.n_test = 5000;
  auto img = data::BiasSpec::Default();
  img.split_sizes = {2000, 500, 500};
  std::vector<std::pair<data::Dataset, train::TrainConfig>> jobs;
  train::TrainConfig up;
  up.epochs = 3;
  up.method = methods::MethodConfig::Default(methods::MethodTag::kLff);
  jobs.emplace_back(data::GenerateGroupTask(gt), up);
  train::TrainConfig cnn;
  cnn.epochs = 2;
  cnn.method = methods::MethodConfig::Default(methods::MethodTag::kGdro);
  cnn.explicit_factors = {"digit_color"};
  jobs.emplace_back(data::GenerateDataset(img), cnn);

  std::vector<std::string> record_bytes[2], report_bytes[2];
  test::TempDir dir;
  for (int copy = 0; copy < 2; ++copy) {
    expcli::TrialStore store(dir.path() / ("store" + std::to_string(copy)));
    for (const auto& [ds, config] : jobs) {
      // Regenerate the dataset too: generation is part of the pipeline.
      const auto fresh = ds.kind == "group_task" ? data::GenerateGroupTask(gt) : data::GenerateDataset(img);
      expcli::StoreRunner runner(store, fresh);
      const auto r = runner(config);
      if (!r.ok()) return {false, "trial failed: " + r.diagnostic};
      record_bytes[copy].push_back(store.ReadRecordBytes(r.id));
    }
    const auto trials = store.LoadAll();
    for (auto kind : {expcli::ReportKind::kOverall, expcli::ReportKind::kPerGroup, expcli::ReportKind::kPerFactor}) {
      const auto table = expcli::BuildReportTable(kind, trials, {});
      report_bytes[copy].push_back(expcli::RenderText(table));
      report_bytes[copy].push_back(expcli::RenderCsv(table));
    }
  }
  const bool pass = record_bytes[0] == record_bytes[1] && report_bytes[0] == report_bytes[1];
  std::size_t bytes = 0;
  for (const auto& b : record_bytes[0]) bytes += b.size();
  return {pass, Fmt("2 trials x 2 independent stores: records %s (%zu bytes), 6 report renderings %s",
                    record_bytes[0] == record_bytes[1] ? "identical" : "DIFFER", bytes,
                    report_bytes[0] == report_bytes[1] ? "identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::pair<const char*, std::function<Outcome()>>>> criteria = {
      {1, {"generator statistics", GeneratorStatistics}},
      {3, {"gradient oracles", GradientOracles}},
      {4, {"method off-switches", OffSwitches}},
      {9, {"GDRO state properties", GdroState}},
      {5, {"bias exploitation", BiasExploitation}},
      {6, {"worst-group improvement", WorstGroupImprovement}},
      {7, {"hidden-bias failure", HiddenBias}},
      {8, {"selection sensitivity", SelectionSensitivity}},
      {10, {"reproducibility", Reproducibility}},
      {2, {"Acc(alpha) closed forms", AccAlphaClosedForms}},  // last: checks every report produced above
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  std::map<int, std::pair<std::string, Outcome>> results;
  for (const auto& [id, entry] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = entry.second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::fprintf(stderr, "criterion %d done in %.1fs\n", id, Seconds(t0));
    results[id] = {entry.first, o};
  }
  int failed = 0;
  for (const auto& [id, r] : results) {
    std::printf("[%s] %2d %s: %s\n", r.second.pass ? "PASS" : "FAIL", id, r.first.c_str(), r.second.detail.c_str());
    failed += !r.second.pass;
  }
  std::printf("acceptance: %zu/%zu passed\n", results.size() - failed, results.size());
  return failed ? 1 : 0;
}
