// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/expcli/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>

#include "biasbench/error.hpp"
#include "biasbench/train/checkpoint.hpp"

namespace biasbench::expcli {

namespace fs = std::filesystem;

namespace {

std::atomic<unsigned> g_tmp_counter{0};

class FileLock {
 public:
  explicit FileLock(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0) throw IoError("cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw IoError("cannot lock " + path.string());
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace

std::string UtcNow() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

TrialStore::TrialStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_ / "trials", ec);
  if (ec) throw IoError("cannot create store at " + root_.string() + ": " + ec.message());
}

fs::path TrialStore::DefaultRoot() {
  if (const char* env = std::getenv(kStoreEnvVar); env && *env) return env;
  return "biasbench_store";
}

fs::path TrialStore::TrialDir(const std::string& id) const { return root_ / "trials" / id; }

bool TrialStore::Contains(const std::string& id) const { return fs::exists(TrialDir(id) / "record.json"); }

std::string TrialStore::ReadRecordBytes(const std::string& id) const {
  if (!Contains(id)) throw NotFoundError("no trial " + id);
  return ReadFile(TrialDir(id) / "record.json");
}

std::optional<TrialRecord> TrialStore::Find(const std::string& id) const {
  if (!Contains(id)) return std::nullopt;
  try {
    return TrialRecordFromJson(Json::parse(ReadRecordBytes(id)));
  } catch (const Json::exception& e) {
    throw IngestionError("trial " + id + ": " + e.what());
  }
}

bool TrialStore::Put(const TrialRecord& record, const train::TrainResult* result, const Timing& timing) {
  if (Contains(record.id)) return false;
  const fs::path tmp = root_ / "trials" /
                       (".tmp-" + record.id + "-" + std::to_string(::getpid()) + "-" +
                        std::to_string(g_tmp_counter.fetch_add(1)));
  try {
    fs::create_directories(tmp);
    WriteFileAtomic(tmp / "record.json", SerializeRecord(record));
    std::string epochs;
    for (const auto& e : record.epochs) epochs += train::ToJson(e).dump() + "\n";
    WriteFileAtomic(tmp / "epochs.jsonl", epochs);
    WriteFileAtomic(tmp / "timing.json",
                    Json{{"started", timing.started}, {"finished", timing.finished}, {"seconds", timing.seconds}}
                            .dump(1) + "\n");
    if (result && !result->final_params.empty()) {
      train::SaveCheckpoint(tmp / "final.ckpt", {result->model, result->final_params});
      train::SaveCheckpoint(tmp / "best.ckpt", {result->model, result->best_params});
    }
    std::error_code ec;
    fs::rename(tmp, TrialDir(record.id), ec);
    if (ec) {
      fs::remove_all(tmp);
      if (Contains(record.id)) return false;
      throw IoError("cannot publish trial " + record.id + ": " + ec.message());
    }
  } catch (...) {
    std::error_code ignored;
    fs::remove_all(tmp, ignored);
    throw;
  }
  return true;
}

std::vector<TrialRecord> TrialStore::LoadAll() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root_ / "trials")) {
    const auto name = entry.path().filename().string();
    if (!name.empty() && name[0] != '.' && fs::exists(entry.path() / "record.json")) ids.push_back(name);
  }
  std::sort(ids.begin(), ids.end());
  std::vector<TrialRecord> out;
  for (const auto& id : ids) out.push_back(*Find(id));
  return out;
}

void TrialStore::RebuildIndex() const {
  FileLock lock(root_ / "index.lock");
  std::string text;
  for (const auto& r : LoadAll()) {
    text += Json{{"id", r.id},
                 {"method", r.method()},
                 {"status", train::TrialStatusName(r.status)},
                 {"seed", r.config.seed},
                 {"lr", r.config.lr},
                 {"weight_decay", r.config.weight_decay},
                 {"dataset", r.dataset.value("kind", "")}}
                .dump();
    text.push_back('\n');
  }
  WriteFileAtomic(root_ / "index.jsonl", text);
}

}  // namespace biasbench::expcli
