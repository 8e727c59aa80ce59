#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gdnet/imaging/degrade.hpp"

namespace gdnet::imaging {

struct ManifestRecord {
  std::string optical;  // P6 path, relative to the manifest directory unless absolute
  std::string thermal;  // 16-bit P5 ground-truth path
  Attribute attr = Attribute::Normal;
  DegradeMode mode = DegradeMode::BI;
  int scale = 4;
  std::uint64_t seed = 0;

  /// Stable record identifier: the thermal file stem.
  std::string id() const;
};

/// Line-oriented JSON dataset listing, one record per line.
struct DatasetManifest {
  std::filesystem::path base_dir;
  std::vector<ManifestRecord> records;

  std::filesystem::path resolve(const std::string& p) const;
  std::vector<ManifestRecord> with_attr(Attribute a) const;
};

/// Throws ParseError (byte offset of the offending line) on malformed JSON,
/// missing or unknown keys, unknown tags, scale outside {4, 8} or duplicate
/// seeds. With `check_files`, missing images raise IoError.
DatasetManifest read_manifest(const std::filesystem::path& path, bool check_files = true);
DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);

}  // namespace gdnet::imaging
