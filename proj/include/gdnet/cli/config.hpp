#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gdnet/imaging/degrade.hpp"
#include "gdnet/model/config.hpp"
#include "gdnet/train/stage.hpp"

namespace gdnet::cli {

/// Settings for the train command. Paths read from a config file resolve
/// against the file's directory; flag values are taken as given.
struct RunConfig {
  int scale = 4;
  imaging::DegradeMode mode = imaging::DegradeMode::BI;
  std::uint64_t seed = 0;
  std::string preset = "tiny";
  std::string stage = "all";
  int steps = 100;
  /// Per-stage step counts keyed by stage name; missing stages use `steps`.
  std::map<std::string, int> stage_steps;
  int batch = 8;
  int crop = 48;
  double lr = 1e-4;
  int steps_per_epoch = 0;
  bool stage3_head = false;
  std::filesystem::path manifest;
  std::filesystem::path checkpoint;
  /// Optional starting weights; defaults to `checkpoint` for stages after 1.
  std::filesystem::path init_checkpoint;
  /// Loss CSV; defaults to <checkpoint>.loss.csv.
  std::filesystem::path loss_log;

  model::GDNetConfig model() const;
  train::TrainOptions options(train::StageId stage) const;
  std::vector<train::StageId> stages() const;
  void validate() const;
  /// Fully resolved settings as one JSON object.
  std::string echo() const;
};

/// Flag overrides as (key, raw text). Raw text is read as a JSON scalar when
/// it parses as one and as a string otherwise.
using Overrides = std::vector<std::pair<std::string, std::string>>;

/// Merges `overrides` over the JSON object `text`, then validates. Unknown
/// keys, type mismatches and missing required paths raise ConfigError naming
/// the key.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir, const Overrides& overrides = {});
/// Reads `path` (IoError when unreadable) and calls parse_config.
RunConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});

}  // namespace gdnet::cli
