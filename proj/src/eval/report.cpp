#include "gdnet/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "gdnet/eval/metrics.hpp"
#include "gdnet/imaging/netpbm.hpp"

namespace gdnet::eval {

using imaging::Attribute;

std::vector<Aggregate> aggregate(const std::vector<MetricEntry>& entries) {
  std::vector<Aggregate> out;
  auto group = [&](const std::string& label, auto&& keep) {
    Aggregate g{label, 0, 0, 0};
    for (const auto& e : entries)
      if (keep(e)) {
        ++g.count;
        g.psnr += e.psnr;
        g.ssim += e.ssim;
      }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    g.psnr = g.count ? g.psnr / static_cast<double>(g.count) : nan;
    g.ssim = g.count ? g.ssim / static_cast<double>(g.count) : nan;
    out.push_back(g);
  };
  for (auto a : {Attribute::Normal, Attribute::Fog, Attribute::LowLight})
    group(imaging::to_string(a), [a](const MetricEntry& e) { return e.attr == a; });
  group("all", [](const MetricEntry&) { return true; });
  return out;
}

std::vector<Aggregate> MetricReport::aggregates() const { return aggregate(entries); }
std::vector<Aggregate> MetricReport::baseline_aggregates() const { return aggregate(baseline); }

imaging::ImagePlane bicubic_baseline(const imaging::ManifestRecord& rec, const imaging::ImagePlane& gt) {
  auto up = imaging::resize(imaging::degrade_thermal(gt, rec.scale, rec.mode), rec.scale);
  imaging::clamp01(up);
  return imaging::quantize16(up);
}

std::filesystem::path sr_path(const std::filesystem::path& sr_dir, const imaging::ManifestRecord& rec) {
  return sr_dir / (rec.id() + ".pgm");
}

MetricReport evaluate_pairs(const imaging::DatasetManifest& manifest, const std::filesystem::path& sr_dir) {
  std::vector<const imaging::ManifestRecord*> order;
  for (const auto& r : manifest.records) order.push_back(&r);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->id() < b->id(); });
  MetricReport report;
  for (const auto* r : order) {
    const auto gt = imaging::read_pgm(manifest.resolve(r->thermal));
    const auto base = bicubic_baseline(*r, gt);
    report.baseline.push_back({r->id(), r->attr, psnr(base, gt), ssim(base, gt)});
    const auto path = sr_path(sr_dir, *r);
    if (!std::filesystem::exists(path)) {
      report.missing.push_back(r->id());
      continue;
    }
    const auto sr = imaging::read_pgm(path);
    report.entries.push_back({r->id(), r->attr, psnr(sr, gt), ssim(sr, gt)});
  }
  return report;
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_report_csv(std::ostream& os, const MetricReport& report) {
  os << "id,attr,psnr,ssim\n";
  for (const auto& e : report.entries)
    os << e.id << ',' << imaging::to_string(e.attr) << ',' << num(e.psnr) << ',' << num(e.ssim) << '\n';
  for (const auto& g : report.aggregates())
    os << "mean(n=" << g.count << ")," << g.label << ',' << num(g.psnr) << ',' << num(g.ssim) << '\n';
  for (const auto& g : report.baseline_aggregates())
    os << "bicubic_mean(n=" << g.count << ")," << g.label << ',' << num(g.psnr) << ',' << num(g.ssim) << '\n';
}

void write_report_table(std::ostream& os, const MetricReport& report) {
  char line[128];
  std::snprintf(line, sizeof line, "%-10s %6s %10s %8s %12s %8s\n", "group", "n", "PSNR(dB)", "SSIM", "bicubic PSNR",
                "SSIM");
  os << line;
  const auto ours = report.aggregates(), base = report.baseline_aggregates();
  for (std::size_t i = 0; i < ours.size(); ++i) {
    std::snprintf(line, sizeof line, "%-10s %6zu %10.4f %8.4f %12.4f %8.4f\n", ours[i].label.c_str(), ours[i].count,
                  ours[i].psnr, ours[i].ssim, base[i].psnr, base[i].ssim);
    os << line;
  }
  if (!report.missing.empty()) {
    os << "missing SR outputs (" << report.missing.size() << "):";
    for (const auto& id : report.missing) os << ' ' << id;
    os << '\n';
  }
}

}  // namespace gdnet::eval
