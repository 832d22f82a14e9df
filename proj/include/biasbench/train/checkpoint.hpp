// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "biasbench/train/model.hpp"
#include "biasbench/train/trainer.hpp"

namespace biasbench::train {

// Layout (little-endian): "BBCK", u32 version, u32 json length, JSON header
// {"model": ModelSpec, "tensors": [{"name", "shape": [rows, cols]}...]},
// then each tensor's float32 values in column-major order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelSpec model;
  std::vector<NamedTensor> tensors;
};

std::string SerializeCheckpoint(const Checkpoint& checkpoint);
Checkpoint ParseCheckpoint(std::string_view bytes);
void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace biasbench::train
