// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/sweep/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "biasbench/error.hpp"

namespace biasbench::sweep {

using methods::MethodConfig;
using methods::MethodTag;

void SweepPlan::Validate() const {
  if (lrs.empty() || wds.empty()) throw ValidationError("sweep grids must be non-empty");
  if (seeds.empty()) throw ValidationError("sweep needs at least one seed");
  if (parallelism < 1) throw ValidationError("sweep parallelism must be >= 1");
  base.Validate();
  if (stage2) {
    for (const auto& m : *stage2) {
      if (m.tag() != base.method.tag()) throw ValidationError("stage-2 grid must use the swept method");
      m.Validate();
    }
  }
}

std::vector<MethodConfig> DefaultStage2Grid(MethodTag tag) {
  std::vector<MethodConfig> out;
  auto cfg = MethodConfig::Default(tag);
  switch (tag) {
    case MethodTag::kGdro:
      for (double eta : {0.001, 0.01, 0.1}) {
        std::get<methods::GdroParams>(cfg.params).eta = eta;
        out.push_back(cfg);
      }
      break;
    case MethodTag::kLnl:
      for (double lg : {-1.0, -0.1, -0.01}) {
        for (double le : {1.0, 0.1, 0.01, 0.0}) {
          auto& p = std::get<methods::LnlParams>(cfg.params);
          p.lambda_grad = lg;
          p.lambda_ent = le;
          out.push_back(cfg);
        }
      }
      break;
    case MethodTag::kIrm:
      for (double l : {1.0, 10.0, 100.0, 1000.0, 10000.0}) {
        std::get<methods::IrmParams>(cfg.params).lambda = l;
        out.push_back(cfg);
      }
      break;
    case MethodTag::kLff:
      for (double g : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        std::get<methods::LffParams>(cfg.params).gamma = g;
        out.push_back(cfg);
      }
      break;
    case MethodTag::kSd: {
      const double grid[] = {1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0};
      for (double l : grid) {
        for (double g : grid) {
          auto& p = std::get<methods::SdParams>(cfg.params);
          p.lambda = {l};
          p.gamma = {g};
          out.push_back(cfg);
        }
      }
      break;
    }
    default: break;
  }
  return out;
}

std::vector<train::TrainConfig> Stage1Configs(const SweepPlan& plan) {
  std::vector<train::TrainConfig> out;
  for (auto seed : plan.seeds) {
    for (double lr : plan.lrs) {
      for (double wd : plan.wds) {
        auto c = plan.base;
        c.lr = lr;
        c.weight_decay = wd;
        c.seed = seed;
        c.method = MethodConfig::Default(plan.base.method.tag());
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

std::vector<train::TrainConfig> Stage2Configs(const SweepPlan& plan, double lr, double wd) {
  const auto grid = plan.stage2 ? *plan.stage2 : DefaultStage2Grid(plan.base.method.tag());
  std::vector<train::TrainConfig> out;
  for (auto seed : plan.seeds) {
    for (const auto& m : grid) {
      auto c = plan.base;
      c.lr = lr;
      c.weight_decay = wd;
      c.seed = seed;
      c.method = m;
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<expcli::TrialRecord> RunTrials(const std::vector<train::TrainConfig>& configs,
                                           const TrialRunner& runner, int parallelism) {
  std::vector<expcli::TrialRecord> out(configs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < configs.size(); i = next.fetch_add(1)) {
      try {
        out[i] = runner(configs[i]);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(configs.size());
      }
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, parallelism));
  if (workers == 1 || configs.size() <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(workers, configs.size()); ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<expcli::TrialRecord> RunSweep(const SweepPlan& plan, const TrialRunner& runner) {
  plan.Validate();
  auto records = RunTrials(Stage1Configs(plan), runner, plan.parallelism);
  if (std::none_of(records.begin(), records.end(), [](const auto& r) { return r.ok(); })) {
    throw NumericError("every stage-1 trial diverged");
  }
  const auto& winner = SelectModel(records, plan.policy);
  const auto stage2 = RunTrials(Stage2Configs(plan, winner.config.lr, winner.config.weight_decay), runner,
                                plan.parallelism);
  records.insert(records.end(), stage2.begin(), stage2.end());
  return records;
}

const metrics::EvalReport* ValReport(const expcli::TrialRecord& r, CheckpointChoice c) {
  const auto& rep = c == CheckpointChoice::kFinal ? r.final_val : r.best_val;
  return rep ? &*rep : nullptr;
}

const metrics::EvalReport* TestReport(const expcli::TrialRecord& r, CheckpointChoice c) {
  const auto& rep = c == CheckpointChoice::kFinal ? r.final_test : r.best_test;
  return rep ? &*rep : nullptr;
}

const expcli::TrialRecord& SelectModel(std::span<const expcli::TrialRecord> trials, const SelectionPolicy& policy) {
  if (trials.empty()) throw ValidationError("model selection over an empty trial list");
  const expcli::TrialRecord* best = nullptr;
  double best_score = 0.0;
  for (const auto& t : trials) {
    if (!t.ok()) continue;
    const auto* val = ValReport(t, policy.checkpoint);
    if (!val) continue;
    const double score = val->AccAt(policy.alpha);
    bool better = false;
    if (!best || score > best_score) {
      better = true;
    } else if (score == best_score) {
      const auto& a = t.config;
      const auto& b = best->config;
      if (a.lr != b.lr) {
        better = a.lr < b.lr;
      } else if (a.weight_decay != b.weight_decay) {
        better = a.weight_decay > b.weight_decay;
      } else if (a.seed != b.seed) {
        better = a.seed < b.seed;
      } else {
        better = t.id < best->id;
      }
    }
    if (better) {
      best = &t;
      best_score = score;
    }
  }
  if (!best) throw NotFoundError("no successful trial carries a validation report");
  return *best;
}

Sensitivity SelectionSensitivity(std::span<const expcli::TrialRecord> trials, std::span<const double> alphas,
                                 CheckpointChoice checkpoint) {
  if (alphas.empty()) throw ValidationError("selection sensitivity needs an alpha grid");
  Sensitivity out;
  std::map<metrics::GroupKey, GroupSpread> spreads;
  std::vector<const metrics::EvalReport*> tests;
  for (double alpha : alphas) {
    const auto& winner = SelectModel(trials, {alpha, checkpoint});
    const auto* test = TestReport(winner, checkpoint);
    if (!test) throw NotFoundError("winning trial " + winner.id + " has no test report");
    tests.push_back(test);
    SensitivityRow row{alpha, winner.id, ValReport(winner, checkpoint)->AccAt(alpha), test->AccAt(0.0), {}};
    for (const auto& g : test->groups.groups) {
      row.group_accuracy.emplace(g.key, g.accuracy());
      auto [it, inserted] = spreads.try_emplace(g.key, GroupSpread{g.key, g.count, g.accuracy(), g.accuracy()});
      if (!inserted) {
        it->second.min = std::min(it->second.min, g.accuracy());
        it->second.max = std::max(it->second.max, g.accuracy());
      }
    }
    out.rows.push_back(std::move(row));
  }
  for (auto& [key, s] : spreads) out.groups.push_back(s);
  if (out.groups.size() >= 2) {
    const auto rare = std::min_element(out.groups.begin(), out.groups.end(),
                                       [](const auto& a, const auto& b) { return a.test_count < b.test_count; });
    out.minority = rare->key;
    out.minority_range = rare->range();
    const auto common = std::max_element(out.groups.begin(), out.groups.end(),
                                         [](const auto& a, const auto& b) { return a.test_count < b.test_count; });
    out.majority = common->key;
    out.majority_range = common->range();
    double lo = 1.0;
    double hi = 0.0;
    for (const auto* test : tests) {
      double sum = 0.0;
      int n = 0;
      for (const auto& g : test->groups.groups) {
        if (g.key == out.minority) continue;
        sum += g.accuracy();
        ++n;
      }
      const double mean = n ? sum / n : 0.0;
      lo = std::min(lo, mean);
      hi = std::max(hi, mean);
    }
    out.rest_range = hi - lo;
  }
  return out;
}

Json ToJson(const SweepPlan& p) {
  Json stage2 = nullptr;
  if (p.stage2) {
    stage2 = Json::array();
    for (const auto& m : *p.stage2) stage2.push_back(methods::ToJson(m));
  }
  return {{"lrs", p.lrs},
          {"wds", p.wds},
          {"stage2", stage2},
          {"seeds", p.seeds},
          {"alpha_select", p.policy.alpha},
          {"checkpoint", p.policy.checkpoint == CheckpointChoice::kFinal ? "final" : "best"},
          {"parallelism", p.parallelism}};
}

SweepPlan SweepPlanFromJson(const Json& j, const train::TrainConfig& base) {
  CheckKeys(j, {"lrs", "wds", "stage2", "seeds", "alpha_select", "checkpoint", "parallelism"}, "sweep");
  SweepPlan p;
  p.base = base;
  p.lrs = ValueOr(j, "lrs", p.lrs);
  p.wds = ValueOr(j, "wds", p.wds);
  if (j.contains("stage2") && !j.at("stage2").is_null()) {
    const auto& s = j.at("stage2");
    if (s.is_string() && s.get<std::string>() == "default") {
      p.stage2.reset();
    } else if (s.is_array()) {
      std::vector<MethodConfig> grid;
      for (const auto& m : s) {
        Json mj = m;
        if (mj.is_object() && !mj.contains("name")) mj["name"] = methods::MethodName(base.method.tag());
        grid.push_back(methods::MethodConfigFromJson(mj));
      }
      p.stage2 = std::move(grid);
    } else {
      ThrowBadType("stage2", "expected \"default\" or a list of method settings");
    }
  }
  p.seeds = ValueOr(j, "seeds", p.seeds);
  p.policy.alpha = ValueOr(j, "alpha_select", base.alpha_select);
  if (j.contains("checkpoint")) {
    const auto c = j.at("checkpoint").get<std::string>();
    if (c == "final") {
      p.policy.checkpoint = CheckpointChoice::kFinal;
    } else if (c == "best") {
      p.policy.checkpoint = CheckpointChoice::kBest;
    } else {
      throw ValidationError("checkpoint must be 'final' or 'best'");
    }
  }
  p.parallelism = ValueOr(j, "parallelism", p.parallelism);
  p.Validate();
  return p;
}

}  // namespace biasbench::sweep
