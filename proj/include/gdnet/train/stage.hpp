#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gdnet/imaging/manifest.hpp"
#include "gdnet/model/gdnet.hpp"

namespace gdnet::train {

enum class StageId { Stage1, Stage2NC, Stage2LI, Stage2FO, Stage3 };

/// "1", "2nc", "2li", "2fo", "3".
std::string to_string(StageId s);
StageId parse_stage(const std::string& s);
/// Stage-2 branches run NC, LI, FO in that order.
std::vector<StageId> all_stages();

struct LrGroup {
  std::string prefix;
  double lr = 1e-4;
};

struct StageSpec {
  StageId id = StageId::Stage1;
  std::vector<LrGroup> groups;
  /// Stage-2 branches train on one attribute only.
  std::optional<imaging::Attribute> attr;
  model::StageMode mode = model::StageMode::Stage1;
};

/// Stage 1: shallow, backbone, MOGM and head on all records.
/// Stage 2: one AGM branch on its attribute subset.
/// Stage 3: AFM at base_lr and MOGM at base_lr / 2 on all records; the head
/// joins the MOGM group when `stage3_head` is set.
StageSpec stage_spec(StageId id, double base_lr = 1e-4, bool stage3_head = false);

/// One aligned training example at full resolution.
struct Sample {
  std::string id;
  imaging::Attribute attr = imaging::Attribute::Normal;
  imaging::ImagePlane lr, hr;
  imaging::ImageRGB optical;
};

using SampleLoader = std::function<Sample(const imaging::ManifestRecord&)>;

/// Reads the record's optical and ground-truth files and derives the LR input
/// with the record's scale and degradation mode.
SampleLoader file_loader(const imaging::DatasetManifest& manifest);
Sample make_sample(const imaging::ManifestRecord& rec, const imaging::ImagePlane& hr, const imaging::ImageRGB& optical);

struct TrainOptions {
  int steps = 100;
  int batch = 8;
  /// LR crop side; shrunk to the smallest LR image and floored to a window
  /// multiple.
  int crop = 48;
  double base_lr = 1e-4;
  /// Steps that make up one schedule epoch; 0 means one pass over the
  /// stage's records.
  int steps_per_epoch = 0;
  std::uint64_t seed = 0;
  bool stage3_head = false;
};

struct StepLog {
  int step = 0;
  std::string stage;
  double lr = 0;
  double loss = 0;
};

struct StageResult {
  std::vector<StepLog> log;
  /// Ids of records handed to the loader, in load order.
  std::vector<std::string> loaded;
  /// Ids of records used in batches, one entry per sample per step.
  std::vector<std::string> used;
};

/// Trains `net` for options.steps steps. Throws ConfigError when the filter
/// leaves no records.
StageResult run_stage(const StageSpec& spec, const imaging::DatasetManifest& manifest, model::GDNet<float>& net,
                      const TrainOptions& options, const SampleLoader& loader);

/// CSV "step,stage,lr,loss"; the header is written when `header` is set.
void write_loss_log(std::ostream& os, const std::vector<StepLog>& log, bool header = true);

}  // namespace gdnet::train
