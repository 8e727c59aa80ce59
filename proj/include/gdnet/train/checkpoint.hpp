#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gdnet/core/parameter.hpp"

namespace gdnet::train {

inline constexpr char kCheckpointMagic[4] = {'G', 'D', 'N', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointRecord {
  std::string name;
  core::Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::string config_json;
  std::vector<CheckpointRecord> records;
};

/// Layout, all integers little-endian: "GDNT", u32 version, u32 config length
/// + config JSON, u32 record count, then per record u32 name length + name,
/// u32 rank, u64 dims[rank], f32 payload.
std::vector<char> encode_checkpoint(const Checkpoint& ck);
/// Throws ParseError with the byte offset on bad magic, version, truncation,
/// trailing bytes or duplicate names.
Checkpoint decode_checkpoint(const std::vector<char>& bytes);

template <typename T>
Checkpoint snapshot(const core::ParameterStore<T>& store, const std::string& config_json);

/// Copies records whose name starts with `prefix` into the store. Every store
/// parameter under the prefix must be present; unknown names and shape
/// conflicts raise ParseError at the record's offset. Returns the number of
/// parameters restored.
template <typename T>
std::size_t restore(const Checkpoint& ck, core::ParameterStore<T>& store, const std::string& prefix = "");

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
/// IoError when the file cannot be opened; ParseError messages carry the path.
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace gdnet::train
