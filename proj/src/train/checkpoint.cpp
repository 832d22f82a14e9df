// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/train/checkpoint.hpp"

#include <cstring>

#include "biasbench/error.hpp"

namespace biasbench::train {

namespace {

constexpr char kMagic[4] = {'B', 'B', 'C', 'K'};

void PutU32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

std::uint32_t GetU32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + k])) << (8 * k);
  return v;
}

}  // namespace

std::string SerializeCheckpoint(const Checkpoint& ck) {
  Json tensors = Json::array();
  for (const auto& t : ck.tensors) tensors.push_back({{"name", t.name}, {"shape", {t.value.rows(), t.value.cols()}}});
  const std::string header = Json{{"model", ToJson(ck.model)}, {"tensors", tensors}}.dump();
  std::string out(kMagic, 4);
  PutU32(out, kCheckpointVersion);
  PutU32(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  for (const auto& t : ck.tensors) {
    for (Eigen::Index i = 0; i < t.value.size(); ++i) {
      std::uint32_t bits = 0;
      const float v = t.value.data()[i];
      std::memcpy(&bits, &v, 4);
      PutU32(out, bits);
    }
  }
  return out;
}

Checkpoint ParseCheckpoint(std::string_view in) {
  if (in.size() < 12 || std::memcmp(in.data(), kMagic, 4) != 0) throw IngestionError("not a checkpoint archive");
  if (GetU32(in, 4) != kCheckpointVersion) throw IngestionError("unsupported checkpoint version");
  const std::size_t len = GetU32(in, 8);
  if (in.size() < 12 + len) throw IngestionError("truncated checkpoint header");
  Json header;
  try {
    header = Json::parse(in.substr(12, len));
  } catch (const Json::parse_error& e) {
    throw IngestionError(std::string("checkpoint header: ") + e.what());
  }
  Checkpoint ck;
  ck.model = ModelSpecFromJson(header.at("model"));
  std::size_t at = 12 + len;
  for (const auto& t : header.at("tensors")) {
    const auto shape = t.at("shape").get<std::vector<Eigen::Index>>();
    if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0) throw IngestionError("bad tensor shape in checkpoint");
    NamedTensor nt{t.at("name").get<std::string>(), Tensor<float>(shape[0], shape[1])};
    const std::size_t bytes = static_cast<std::size_t>(nt.value.size()) * 4;
    if (in.size() < at + bytes) throw IngestionError("truncated checkpoint data");
    for (Eigen::Index i = 0; i < nt.value.size(); ++i) {
      const std::uint32_t bits = GetU32(in, at + static_cast<std::size_t>(i) * 4);
      std::memcpy(nt.value.data() + i, &bits, 4);
    }
    at += bytes;
    ck.tensors.push_back(std::move(nt));
  }
  if (at != in.size()) throw IngestionError("trailing bytes in checkpoint");
  return ck;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  WriteFileAtomic(path, SerializeCheckpoint(ck));
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) { return ParseCheckpoint(ReadFile(path)); }

}  // namespace biasbench::train
