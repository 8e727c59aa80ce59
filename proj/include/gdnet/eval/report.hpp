#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gdnet/imaging/manifest.hpp"

namespace gdnet::eval {

struct MetricEntry {
  std::string id;
  imaging::Attribute attr = imaging::Attribute::Normal;
  double psnr = 0;
  double ssim = 0;
};

struct Aggregate {
  std::string label;  // attribute tag or "all"
  std::size_t count = 0;
  double psnr = 0;
  double ssim = 0;
};

struct MetricReport {
  std::vector<MetricEntry> entries;   // sorted by id
  std::vector<MetricEntry> baseline;  // bicubic upsampling of the same records
  std::vector<std::string> missing;   // ids without an SR file, sorted

  /// Means per attribute (normal, fog, lowlight) followed by "all".
  std::vector<Aggregate> aggregates() const;
  std::vector<Aggregate> baseline_aggregates() const;
};

/// Arithmetic means per attribute group and overall; NaN means for empty groups.
std::vector<Aggregate> aggregate(const std::vector<MetricEntry>& entries);

/// LR input for a record, upsampled bicubically and stored at 16 bits: the
/// reference baseline.
imaging::ImagePlane bicubic_baseline(const imaging::ManifestRecord& rec, const imaging::ImagePlane& gt);

/// SR output path for a record: <sr_dir>/<id>.pgm.
std::filesystem::path sr_path(const std::filesystem::path& sr_dir, const imaging::ManifestRecord& rec);

/// Scores every record's SR file against its ground truth, plus the bicubic
/// baseline. Missing SR files are listed and left out of the means.
MetricReport evaluate_pairs(const imaging::DatasetManifest& manifest, const std::filesystem::path& sr_dir);

/// CSV: header "id,attr,psnr,ssim", body rows by id, then footer rows
/// "mean(n=K),<group>,psnr,ssim" and "bicubic_mean(n=K),<group>,psnr,ssim".
/// Numbers use %.17g.
void write_report_csv(std::ostream& os, const MetricReport& report);
/// Human-readable summary of the aggregates and missing records.
void write_report_table(std::ostream& os, const MetricReport& report);

}  // namespace gdnet::eval
