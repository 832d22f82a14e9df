// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "biasbench/expcli/record.hpp"
#include "biasbench/train/trainer.hpp"

namespace biasbench::expcli {

inline constexpr char kStoreEnvVar[] = "BIASBENCH_STORE";

// Layout:
//   <root>/trials/<id>/record.json    canonical TrialRecord
//   <root>/trials/<id>/epochs.jsonl   one EpochLog per line
//   <root>/trials/<id>/timing.json    wall-clock start/end, duration
//   <root>/trials/<id>/final.ckpt, best.ckpt
//   <root>/index.jsonl                id, method, status, seed, lr, wd (rebuilt under a file lock)
// Trial directories are written under a temporary name and renamed into
// place, so concurrent writers never observe partial trials.
class TrialStore {
 public:
  explicit TrialStore(std::filesystem::path root);

  // $BIASBENCH_STORE if set, otherwise ./biasbench_store.
  static std::filesystem::path DefaultRoot();

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path TrialDir(const std::string& id) const;

  bool Contains(const std::string& id) const;
  std::optional<TrialRecord> Find(const std::string& id) const;
  std::string ReadRecordBytes(const std::string& id) const;

  struct Timing {
    std::string started;
    std::string finished;
    double seconds = 0.0;
  };

  // Writes the trial if absent; returns false if another writer won.
  bool Put(const TrialRecord& record, const train::TrainResult* result, const Timing& timing);

  // All complete trials, sorted by id.
  std::vector<TrialRecord> LoadAll() const;
  void RebuildIndex() const;

 private:
  std::filesystem::path root_;
};

std::string UtcNow();

}  // namespace biasbench::expcli
