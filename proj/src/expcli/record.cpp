// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/expcli/record.hpp"

#include <openssl/evp.h>

#include <Eigen/Core>
#include <cstdio>

#include "biasbench/data/generate.hpp"
#include "biasbench/error.hpp"

namespace biasbench::expcli {

std::string Sha256Hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 failed");
  }
  std::string out;
  char hex[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(hex, sizeof(hex), "%02x", digest[i]);
    out += hex;
  }
  return out;
}

std::string TrialId(const Json& dataset_identity, const train::TrainConfig& config) {
  const Json canonical = {{"dataset", dataset_identity}, {"train", train::ToJson(config)}};
  return Sha256Hex(canonical.dump());
}

Json EnvironmentFingerprint() {
  return {{"library_version", kLibraryVersion},
          {"generator_version", data::kGeneratorVersion},
          {"compiler", __VERSION__},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"scalar", "float32"}};
}

TrialRecord MakeRecord(const Json& dataset_identity, const train::TrainConfig& config,
                       const train::TrainResult& result) {
  TrialRecord r;
  r.id = TrialId(dataset_identity, config);
  r.dataset = dataset_identity;
  r.config = config;
  r.status = result.status;
  r.diagnostic = result.diagnostic;
  r.epochs = result.epochs;
  r.best_epoch = result.best_epoch;
  r.final_val = result.final_val;
  r.final_test = result.final_test;
  r.best_val = result.best_val;
  r.best_test = result.best_test;
  r.environment = EnvironmentFingerprint();
  return r;
}

namespace {

Json OptReport(const std::optional<metrics::EvalReport>& r) { return r ? metrics::ToJson(*r) : Json(nullptr); }

std::optional<metrics::EvalReport> ReadOptReport(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return metrics::EvalReportFromJson(j);
}

}  // namespace

Json ToJson(const TrialRecord& r) {
  Json epochs = Json::array();
  for (const auto& e : r.epochs) epochs.push_back(train::ToJson(e));
  return {{"format", "biasbench.trial"},
          {"version", kRecordVersion},
          {"id", r.id},
          {"dataset", r.dataset},
          {"config", train::ToJson(r.config)},
          {"status", train::TrialStatusName(r.status)},
          {"diagnostic", r.diagnostic},
          {"epochs", epochs},
          {"best_epoch", r.best_epoch},
          {"final_val", OptReport(r.final_val)},
          {"final_test", OptReport(r.final_test)},
          {"best_val", OptReport(r.best_val)},
          {"best_test", OptReport(r.best_test)},
          {"environment", r.environment}};
}

TrialRecord TrialRecordFromJson(const Json& j) {
  CheckKeys(j,
            {"format", "version", "id", "dataset", "config", "status", "diagnostic", "epochs", "best_epoch",
             "final_val", "final_test", "best_val", "best_test", "environment"},
            "trial record");
  if (j.value("format", "") != "biasbench.trial" || j.value("version", 0) != kRecordVersion) {
    throw IngestionError("unsupported trial record format");
  }
  TrialRecord r;
  r.id = j.at("id").get<std::string>();
  r.dataset = j.at("dataset");
  r.config = train::TrainConfigFromJson(j.at("config"));
  r.status = train::ParseTrialStatus(j.at("status").get<std::string>());
  r.diagnostic = j.at("diagnostic").get<std::string>();
  for (const auto& e : j.at("epochs")) r.epochs.push_back(train::EpochLogFromJson(e));
  r.best_epoch = j.at("best_epoch").get<int>();
  r.final_val = ReadOptReport(j.at("final_val"));
  r.final_test = ReadOptReport(j.at("final_test"));
  r.best_val = ReadOptReport(j.at("best_val"));
  r.best_test = ReadOptReport(j.at("best_test"));
  r.environment = j.at("environment");
  return r;
}

std::string SerializeRecord(const TrialRecord& r) { return ToJson(r).dump(1) + "\n"; }

}  // namespace biasbench::expcli
