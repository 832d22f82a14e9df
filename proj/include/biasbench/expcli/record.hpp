// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biasbench/json_util.hpp"
#include "biasbench/metrics/report.hpp"
#include "biasbench/train/train_config.hpp"
#include "biasbench/train/trainer.hpp"

namespace biasbench::expcli {

inline constexpr int kRecordVersion = 1;
inline constexpr char kLibraryVersion[] = "0.1.0";

// Outcome of one (dataset, TrainConfig) run. Wall-clock timestamps live in a
// sidecar file so that the record itself is a pure function of its inputs.
struct TrialRecord {
  std::string id;
  Json dataset;  // dataset identity: kind, generator version, spec
  train::TrainConfig config;
  train::TrialStatus status = train::TrialStatus::kOk;
  std::string diagnostic;
  std::vector<train::EpochLog> epochs;
  int best_epoch = 0;
  std::optional<metrics::EvalReport> final_val, final_test, best_val, best_test;
  Json environment;

  bool ok() const { return status == train::TrialStatus::kOk; }
  std::string_view method() const { return methods::MethodName(config.method.tag()); }
};

std::string Sha256Hex(std::string_view bytes);

// Hash of the canonical encoding of (dataset identity, TrainConfig).
std::string TrialId(const Json& dataset_identity, const train::TrainConfig& config);

// Platform fingerprint: library and generator versions, compiler, scalar type.
Json EnvironmentFingerprint();

TrialRecord MakeRecord(const Json& dataset_identity, const train::TrainConfig& config,
                       const train::TrainResult& result);

Json ToJson(const TrialRecord& record);
TrialRecord TrialRecordFromJson(const Json& json);
// Canonical bytes written to disk.
std::string SerializeRecord(const TrialRecord& record);

}  // namespace biasbench::expcli
