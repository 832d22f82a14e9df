// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "biasbench/data/bias_spec.hpp"
#include "biasbench/data/dataset.hpp"
#include "biasbench/json_util.hpp"

namespace biasbench::data {

enum class StorageFormat { kPng, kPacked, kInline };

std::string_view StorageFormatName(StorageFormat format);
StorageFormat ParseStorageFormat(std::string_view name);

struct ManifestRecord {
  Split split = Split::kTrain;
  std::size_t index = 0;
  int y = 0;
  std::vector<int> b;
  std::vector<bool> is_majority;
  std::string file;                     // png storage
  std::optional<std::uint64_t> offset;  // packed storage: byte offset in <split>.bin
  std::vector<float> features;          // inline storage (vector tasks)

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

// Line-delimited JSON: one metadata line followed by one line per sample.
struct DatasetManifest {
  Json metadata;
  std::vector<ManifestRecord> records;

  std::size_t Count(Split split) const;
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

inline constexpr int kManifestVersion = 1;
inline constexpr char kManifestFile[] = "manifest.jsonl";

DatasetManifest BuildManifest(const Dataset& dataset, StorageFormat format);
std::string SerializeManifest(const DatasetManifest& manifest);
DatasetManifest ParseManifest(std::string_view text);
void WriteManifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest LoadManifest(const std::filesystem::path& path);

// Packed tensor archive: "BBPK" magic, u32 version, u64 count, u32 height,
// u32 width, u32 channels, u32 dtype (1 = uint8), then row-major samples.
// All integers little-endian.
struct PackedHeader {
  std::uint32_t version = 1;
  std::uint64_t count = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;
  std::uint32_t dtype = 1;
};
inline constexpr std::size_t kPackedHeaderBytes = 4 + 4 + 8 + 4 + 4 + 4 + 4;

void WritePacked(const std::filesystem::path& path, const PackedHeader& header,
                 std::span<const std::uint8_t> data);
PackedHeader ReadPacked(const std::filesystem::path& path, std::vector<std::uint8_t>& data);

void WritePng(const std::filesystem::path& path, int width, int height,
              std::span<const std::uint8_t> rgb);
std::vector<std::uint8_t> ReadPng(const std::filesystem::path& path, int& width, int& height);

// Writes manifest plus image storage into `dir`.
void SaveDataset(const Dataset& dataset, const std::filesystem::path& dir, StorageFormat format);
Dataset LoadDataset(const std::filesystem::path& dir);

}  // namespace biasbench::data
