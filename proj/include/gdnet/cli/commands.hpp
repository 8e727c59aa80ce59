#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <ostream>
#include <string>

#include "gdnet/cli/config.hpp"
#include "gdnet/eval/report.hpp"
#include "gdnet/model/gdnet.hpp"

namespace gdnet::cli {

/// Worker cap from GDNET_THREADS (positive integer), else the hardware
/// concurrency. Throws ConfigError on a malformed value.
std::size_t worker_count();
/// Runs fn(i) for i in [0, n) on up to worker_count() threads; the first
/// exception is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// n toy pairs of size x size at <out>/toy_NNNN.{ppm,pgm} plus
/// <out>/manifest.jsonl. Returns the manifest path.
std::filesystem::path run_synth(const std::filesystem::path& out, int n, std::uint64_t seed, int size);

/// Assigns attributes 1:1:1 through a seeded permutation, degrades each
/// optical image accordingly into <stem>_x<scale>_<mode>/ and writes
/// <stem>_x<scale>_<mode>.jsonl beside the input manifest. Returns its path.
std::filesystem::path run_degrade(const std::filesystem::path& manifest, int scale, imaging::DegradeMode mode,
                                  std::uint64_t seed);

/// Runs the configured stages, writing the checkpoint after each stage and
/// appending to the loss log.
void run_train(const RunConfig& cfg, std::ostream& log);

/// Builds a model from a checkpoint (IoError when it is missing).
std::unique_ptr<model::GDNet<float>> load_model(const std::filesystem::path& checkpoint);

/// Super-resolves one record's LR input. Inputs whose LR side is not a window
/// multiple are edge-padded and the output cropped back.
imaging::ImagePlane super_resolve(const model::GDNet<float>& net, const imaging::ImagePlane& lr,
                                  const imaging::ImageRGB& optical, model::StageMode mode);

/// Writes <out>/<id>.pgm for every manifest record.
void run_infer(const std::filesystem::path& checkpoint, const std::filesystem::path& manifest,
               const std::filesystem::path& out, model::StageMode mode);

/// CSV report (IoError when the path cannot be written).
void write_report(const eval::MetricReport& report, const std::filesystem::path& path);

/// Scores SR outputs, writes the CSV report and prints the table. Returns the
/// process exit status: nonzero when any SR file is missing.
int run_eval(const std::filesystem::path& manifest, const std::filesystem::path& sr, const std::filesystem::path& report,
             std::ostream& out);

/// Command-line entry point.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gdnet::cli
