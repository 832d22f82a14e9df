// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/expcli/config.hpp"

#include <chrono>
#include <cstdio>

#include "biasbench/data/generate.hpp"
#include "biasbench/data/manifest.hpp"
#include "biasbench/error.hpp"

namespace biasbench::expcli {

namespace fs = std::filesystem;

DatasetSource DatasetSourceFromJson(const Json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ValidationError("dataset section must be an object");
  DatasetSource s;
  if (j.contains("path")) {
    CheckKeys(j, {"path"}, "dataset");
    s.kind = DatasetSource::Kind::kPath;
    s.path = j.at("path").get<std::string>();
    if (s.path.is_relative() && !base_dir.empty()) s.path = base_dir / s.path;
    return s;
  }
  const std::string kind = ValueOr<std::string>(j, "kind", "biased_mnist");
  Json rest = j;
  rest.erase("kind");
  if (kind == "biased_mnist") {
    s.kind = DatasetSource::Kind::kBiasedMnist;
    s.bias = data::BiasSpecFromJson(rest);
  } else if (kind == "group_task") {
    s.kind = DatasetSource::Kind::kGroupTask;
    s.group = data::GroupTaskSpecFromJson(rest);
  } else {
    throw ValidationError("unknown dataset kind '" + kind + "'");
  }
  return s;
}

Json DatasetIdentity(const data::Dataset& ds) {
  return {{"kind", ds.kind},
          {"generator_version", ds.metadata.value("generator_version", "")},
          {"spec", ds.metadata.value("spec", Json::object())}};
}

Json DatasetIdentity(const DatasetSource& s) {
  switch (s.kind) {
    case DatasetSource::Kind::kBiasedMnist:
      return {{"kind", "biased_mnist"}, {"generator_version", data::kGeneratorVersion}, {"spec", data::ToJson(s.bias)}};
    case DatasetSource::Kind::kGroupTask:
      return {{"kind", "group_task"}, {"generator_version", data::kGeneratorVersion}, {"spec", data::ToJson(s.group)}};
    case DatasetSource::Kind::kPath: {
      const auto m = data::LoadManifest(s.path / data::kManifestFile);
      return {{"kind", m.metadata.value("kind", "")},
              {"generator_version", m.metadata.value("generator_version", "")},
              {"spec", m.metadata.value("spec", Json::object())}};
    }
  }
  throw ValidationError("bad dataset source");
}

data::Dataset Materialize(const DatasetSource& s) {
  switch (s.kind) {
    case DatasetSource::Kind::kBiasedMnist: return data::GenerateDataset(s.bias);
    case DatasetSource::Kind::kGroupTask: return data::GenerateGroupTask(s.group);
    case DatasetSource::Kind::kPath: return data::LoadDataset(s.path);
  }
  throw ValidationError("bad dataset source");
}

ExperimentConfig ExperimentConfigFromJson(const Json& j, const fs::path& base_dir) {
  CheckKeys(j, {"dataset", "method", "train", "sweep", "report"}, "experiment config");
  if (!j.contains("dataset")) throw ValidationError("experiment config needs a dataset section");
  ExperimentConfig c;
  c.dataset = DatasetSourceFromJson(j.at("dataset"), base_dir);
  Json train = j.value("train", Json::object());
  if (j.contains("method")) {
    if (train.contains("method")) throw ValidationError("method given both at top level and in train");
    train["method"] = j.at("method");
  }
  c.train = train::TrainConfigFromJson(train);
  c.sweep = sweep::SweepPlanFromJson(j.value("sweep", Json::object()), c.train);
  if (j.contains("report")) {
    const auto& r = j.at("report");
    CheckKeys(r, {"alphas", "baseline"}, "report");
    c.report.alphas = ValueOr(r, "alphas", c.report.alphas);
    c.report.baseline = ValueOr(r, "baseline", c.report.baseline);
    methods::ParseMethodTag(c.report.baseline);
  }
  return c;
}

ExperimentConfig LoadExperimentConfig(const fs::path& path) {
  return ExperimentConfigFromJson(ReadJsonFile(path), path.parent_path());
}

StoreRunner::StoreRunner(TrialStore& store, const data::Dataset& dataset, bool verbose)
    : store_(store), dataset_(dataset), identity_(DatasetIdentity(dataset)), verbose_(verbose) {}

TrialRecord StoreRunner::operator()(const train::TrainConfig& config) {
  const std::string id = TrialId(identity_, config);
  if (auto cached = store_.Find(id)) {
    std::lock_guard lock(mu_);
    ++cached_;
    return *cached;
  }
  const std::string method(methods::MethodName(config.method.tag()));
  train::TrainHooks hooks;
  if (verbose_) {
    hooks.on_epoch = [&](const train::EpochLog& log) {
      std::lock_guard lock(mu_);
      std::fprintf(stderr, "[%s %.8s] epoch %d train_eval_loss %.4f val_acc0 %.4f\n", method.c_str(), id.c_str(),
                   log.epoch, log.train_eval_loss,
                   log.val_acc_alpha.empty() ? 0.0 : [&] {
                     for (const auto& [a, v] : log.val_acc_alpha)
                       if (a == 0.0) return v;
                     return log.val_acc_alpha.front().second;
                   }());
    };
  }
  TrialStore::Timing timing;
  timing.started = UtcNow();
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = train::Train(dataset_, config, hooks);
  timing.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  timing.finished = UtcNow();
  auto record = MakeRecord(identity_, config, result);
  store_.Put(record, &result, timing);
  {
    std::lock_guard lock(mu_);
    ++executed_;
  }
  // Re-read so callers see exactly the persisted bytes' decoding.
  return *store_.Find(id);
}

}  // namespace biasbench::expcli
