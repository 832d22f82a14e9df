// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/data/manifest.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "biasbench/error.hpp"

namespace biasbench::data {

namespace {

constexpr char kPackedMagic[4] = {'B', 'B', 'P', 'K'};

std::string PngName(Split split, std::size_t index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s/%07zu.png", std::string(SplitName(split)).c_str(), index);
  return buf;
}

std::string PackedName(Split split) { return std::string(SplitName(split)) + ".bin"; }

template <typename T>
void PutLe(std::string& out, T v) {
  for (std::size_t k = 0; k < sizeof(T); ++k) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * k)) & 0xff));
}

template <typename T>
T GetLe(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t k = 0; k < sizeof(T); ++k) v |= static_cast<std::uint64_t>(p[k]) << (8 * k);
  return static_cast<T>(v);
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

Json RecordToJson(const ManifestRecord& r) {
  Json j;
  j["split"] = SplitName(r.split);
  j["index"] = r.index;
  j["y"] = r.y;
  j["b"] = r.b;
  Json maj = Json::array();
  for (bool m : r.is_majority) maj.push_back(m ? 1 : 0);
  j["maj"] = maj;
  if (!r.file.empty()) j["file"] = r.file;
  if (r.offset) j["offset"] = *r.offset;
  if (!r.features.empty()) j["x"] = r.features;
  return j;
}

ManifestRecord RecordFromJson(const Json& j) {
  CheckKeys(j, {"split", "index", "y", "b", "maj", "file", "offset", "x"}, "manifest record");
  ManifestRecord r;
  r.split = ParseSplit(j.at("split").get<std::string>());
  r.index = j.at("index").get<std::size_t>();
  r.y = j.at("y").get<int>();
  r.b = j.at("b").get<std::vector<int>>();
  for (const auto& m : j.at("maj")) r.is_majority.push_back(m.get<int>() != 0);
  if (j.contains("file")) r.file = j.at("file").get<std::string>();
  if (j.contains("offset")) r.offset = j.at("offset").get<std::uint64_t>();
  if (j.contains("x")) r.features = j.at("x").get<std::vector<float>>();
  return r;
}

}  // namespace

std::string_view StorageFormatName(StorageFormat format) {
  switch (format) {
    case StorageFormat::kPng: return "png";
    case StorageFormat::kPacked: return "packed";
    case StorageFormat::kInline: return "inline";
  }
  return "?";
}

StorageFormat ParseStorageFormat(std::string_view name) {
  if (name == "png") return StorageFormat::kPng;
  if (name == "packed") return StorageFormat::kPacked;
  if (name == "inline") return StorageFormat::kInline;
  throw ValidationError("unknown storage format '" + std::string(name) + "'");
}

std::size_t DatasetManifest::Count(Split split) const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.split == split ? 1 : 0;
  return n;
}

DatasetManifest BuildManifest(const Dataset& ds, StorageFormat format) {
  if (ds.input == InputKind::kVector) format = StorageFormat::kInline;
  if (ds.input == InputKind::kImage && format == StorageFormat::kInline) {
    throw ValidationError("image datasets need png or packed storage");
  }
  DatasetManifest m;
  m.metadata = ds.metadata;
  m.metadata["format"] = "biasbench.manifest";
  m.metadata["version"] = kManifestVersion;
  m.metadata["kind"] = ds.kind;
  m.metadata["num_classes"] = ds.num_classes;
  m.metadata["factor_names"] = ds.factor_names;
  m.metadata["cardinalities"] = ds.cardinalities;
  m.metadata["storage"] = StorageFormatName(format);
  if (ds.input == InputKind::kImage) {
    m.metadata["input"] = {{"kind", "image"}, {"height", ds.height}, {"width", ds.width}, {"channels", ds.channels}};
  } else {
    m.metadata["input"] = {{"kind", "vector"}, {"dim", ds.feature_dim}};
  }
  const std::size_t bytes = ds.input_size();
  for (auto split : kAllSplits) {
    const auto& data = ds.split(split);
    for (std::size_t i = 0; i < data.size(); ++i) {
      ManifestRecord r;
      r.split = split;
      r.index = i;
      r.y = data.labels[i];
      for (std::size_t j = 0; j < ds.num_factors(); ++j) {
        r.b.push_back(ds.Factor(split, i, j));
        r.is_majority.push_back(ds.IsMajority(split, i, j));
      }
      switch (format) {
        case StorageFormat::kPng: r.file = PngName(split, i); break;
        case StorageFormat::kPacked: r.offset = kPackedHeaderBytes + i * bytes; break;
        case StorageFormat::kInline:
          r.features.assign(data.features.begin() + static_cast<std::ptrdiff_t>(i * bytes),
                            data.features.begin() + static_cast<std::ptrdiff_t>((i + 1) * bytes));
          break;
      }
      m.records.push_back(std::move(r));
    }
  }
  return m;
}

std::string SerializeManifest(const DatasetManifest& manifest) {
  std::string out = manifest.metadata.dump();
  out.push_back('\n');
  for (const auto& r : manifest.records) {
    out += RecordToJson(r).dump();
    out.push_back('\n');
  }
  return out;
}

DatasetManifest ParseManifest(std::string_view text) {
  DatasetManifest m;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw IngestionError(std::string("manifest: ") + e.what());
    }
    if (first) {
      m.metadata = std::move(j);
      first = false;
      if (m.metadata.value("format", "") != "biasbench.manifest") {
        throw IngestionError("manifest: missing format header");
      }
      if (m.metadata.value("version", 0) != kManifestVersion) {
        throw IngestionError("manifest: unsupported version");
      }
    } else {
      m.records.push_back(RecordFromJson(j));
    }
  }
  if (first) throw IngestionError("manifest: empty file");
  return m;
}

void WriteManifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  WriteFileAtomic(path, SerializeManifest(manifest));
}

DatasetManifest LoadManifest(const std::filesystem::path& path) { return ParseManifest(ReadFile(path)); }

void WritePacked(const std::filesystem::path& path, const PackedHeader& h, std::span<const std::uint8_t> data) {
  std::string out(kPackedMagic, 4);
  PutLe(out, h.version);
  PutLe(out, h.count);
  PutLe(out, h.height);
  PutLe(out, h.width);
  PutLe(out, h.channels);
  PutLe(out, h.dtype);
  out.append(reinterpret_cast<const char*>(data.data()), data.size());
  WriteFileAtomic(path, out);
}

PackedHeader ReadPacked(const std::filesystem::path& path, std::vector<std::uint8_t>& data) {
  const std::string raw = ReadFile(path);
  if (raw.size() < kPackedHeaderBytes || std::memcmp(raw.data(), kPackedMagic, 4) != 0) {
    throw IngestionError(path.string() + ": not a packed archive");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
  PackedHeader h;
  h.version = GetLe<std::uint32_t>(p + 4);
  h.count = GetLe<std::uint64_t>(p + 8);
  h.height = GetLe<std::uint32_t>(p + 16);
  h.width = GetLe<std::uint32_t>(p + 20);
  h.channels = GetLe<std::uint32_t>(p + 24);
  h.dtype = GetLe<std::uint32_t>(p + 28);
  if (h.version != 1 || h.dtype != 1) throw IngestionError(path.string() + ": unsupported version or dtype");
  const std::size_t expected = static_cast<std::size_t>(h.count) * h.height * h.width * h.channels;
  if (raw.size() - kPackedHeaderBytes != expected) throw IngestionError(path.string() + ": truncated data");
  data.assign(raw.begin() + static_cast<std::ptrdiff_t>(kPackedHeaderBytes), raw.end());
  return h;
}

void WritePng(const std::filesystem::path& path, int width, int height, std::span<const std::uint8_t> rgb) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(rgb.data() + static_cast<std::size_t>(y) * width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<std::uint8_t> ReadPng(const std::filesystem::path& path, int& width, int& height) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IngestionError(path.string() + ": cannot open");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IngestionError("libpng initialization failed");
  }
  std::vector<std::uint8_t> out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IngestionError(path.string() + ": corrupt png");
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_RGB || png_get_bit_depth(png, info) != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IngestionError(path.string() + ": expected 8-bit RGB");
  }
  out.resize(static_cast<std::size_t>(width) * height * 3);
  for (int y = 0; y < height; ++y) png_read_row(png, out.data() + static_cast<std::size_t>(y) * width * 3, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void SaveDataset(const Dataset& ds, const std::filesystem::path& dir, StorageFormat format) {
  std::filesystem::create_directories(dir);
  const auto manifest = BuildManifest(ds, format);
  const std::string storage = manifest.metadata.at("storage").get<std::string>();
  if (storage == "png") {
    for (auto split : kAllSplits) {
      std::filesystem::create_directories(dir / SplitName(split));
      const auto& data = ds.split(split);
      const std::size_t bytes = ds.input_size();
      for (std::size_t i = 0; i < data.size(); ++i) {
        WritePng(dir / PngName(split, i), ds.width, ds.height,
                 std::span(data.pixels.data() + i * bytes, bytes));
      }
    }
  } else if (storage == "packed") {
    for (auto split : kAllSplits) {
      const auto& data = ds.split(split);
      PackedHeader h;
      h.count = data.size();
      h.height = static_cast<std::uint32_t>(ds.height);
      h.width = static_cast<std::uint32_t>(ds.width);
      h.channels = static_cast<std::uint32_t>(ds.channels);
      WritePacked(dir / PackedName(split), h, data.pixels);
    }
  }
  WriteManifest(manifest, dir / kManifestFile);
}

Dataset LoadDataset(const std::filesystem::path& dir) {
  const auto manifest = LoadManifest(dir / kManifestFile);
  const auto& meta = manifest.metadata;
  Dataset ds;
  ds.kind = meta.at("kind").get<std::string>();
  ds.num_classes = meta.at("num_classes").get<int>();
  ds.factor_names = meta.at("factor_names").get<std::vector<std::string>>();
  ds.cardinalities = meta.at("cardinalities").get<std::vector<int>>();
  ds.metadata = meta;
  for (const char* k : {"format", "version", "kind", "num_classes", "factor_names", "cardinalities", "storage", "input"}) {
    ds.metadata.erase(k);
  }
  const auto& input = meta.at("input");
  const std::string storage = meta.at("storage").get<std::string>();
  if (input.at("kind") == "image") {
    ds.input = InputKind::kImage;
    ds.height = input.at("height").get<int>();
    ds.width = input.at("width").get<int>();
    ds.channels = input.at("channels").get<int>();
  } else {
    ds.input = InputKind::kVector;
    ds.feature_dim = input.at("dim").get<int>();
  }
  const std::size_t bytes = ds.input_size();
  std::array<std::vector<std::uint8_t>, 3> packed;
  if (storage == "packed") {
    for (auto split : kAllSplits) {
      const auto h = ReadPacked(dir / PackedName(split), packed[static_cast<int>(split)]);
      if (static_cast<int>(h.height) != ds.height || static_cast<int>(h.width) != ds.width ||
          static_cast<int>(h.channels) != ds.channels) {
        throw IngestionError(PackedName(split) + ": dimensions disagree with manifest");
      }
    }
  }
  for (const auto& r : manifest.records) {
    auto& data = ds.split(r.split);
    if (r.index != data.size()) throw IngestionError("manifest records out of index order");
    if (r.b.size() != ds.num_factors()) throw IngestionError("manifest record has wrong factor count");
    data.labels.push_back(r.y);
    data.factors.insert(data.factors.end(), r.b.begin(), r.b.end());
    if (ds.input == InputKind::kVector) {
      if (r.features.size() != bytes) throw IngestionError("manifest record has wrong feature count");
      data.features.insert(data.features.end(), r.features.begin(), r.features.end());
    } else if (storage == "png") {
      int w = 0, h = 0;
      const auto px = ReadPng(dir / r.file, w, h);
      if (w != ds.width || h != ds.height) throw IngestionError(r.file + ": dimensions disagree with manifest");
      data.pixels.insert(data.pixels.end(), px.begin(), px.end());
    } else {
      const auto& blob = packed[static_cast<int>(r.split)];
      if (!r.offset || *r.offset < kPackedHeaderBytes || *r.offset - kPackedHeaderBytes + bytes > blob.size()) {
        throw IngestionError("manifest record has invalid packed offset");
      }
      const auto start = blob.begin() + static_cast<std::ptrdiff_t>(*r.offset - kPackedHeaderBytes);
      data.pixels.insert(data.pixels.end(), start, start + static_cast<std::ptrdiff_t>(bytes));
    }
  }
  return ds;
}

}  // namespace biasbench::data
