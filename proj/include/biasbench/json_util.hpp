// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

#include "json.hpp"

namespace biasbench {

using Json = nlohmann::json;

// Rejects keys of `object` that are not listed in `allowed`.
void CheckKeys(const Json& object, std::initializer_list<std::string_view> allowed,
               std::string_view context);

[[noreturn]] void ThrowBadType(std::string_view key, std::string_view detail);

// Reads `key` from `object` if present, otherwise returns `fallback`.
template <typename T>
T ValueOr(const Json& object, const char* key, T fallback) {
  if (!object.contains(key)) return fallback;
  try {
    return object.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    ThrowBadType(key, e.what());
  }
}

Json ReadJsonFile(const std::filesystem::path& path);

// Writes via a temporary file and rename so readers never see partial files.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view contents);

std::string ReadFile(const std::filesystem::path& path);

}  // namespace biasbench
