#include "gdnet/train/stage.hpp"

#include <algorithm>
#include <iomanip>

#include "gdnet/core/autograd.hpp"
#include "gdnet/core/error.hpp"
#include "gdnet/imaging/netpbm.hpp"
#include "gdnet/train/loss.hpp"
#include "gdnet/train/optim.hpp"

namespace gdnet::train {

using imaging::Attribute;
using model::StageMode;

std::string to_string(StageId s) {
  switch (s) {
    case StageId::Stage1: return "1";
    case StageId::Stage2NC: return "2nc";
    case StageId::Stage2LI: return "2li";
    case StageId::Stage2FO: return "2fo";
    case StageId::Stage3: return "3";
  }
  return "?";
}

StageId parse_stage(const std::string& s) {
  for (auto id : all_stages())
    if (to_string(id) == s) return id;
  throw ConfigError("unknown stage '" + s + "' (expected 1, 2nc, 2li, 2fo or 3)");
}

std::vector<StageId> all_stages() {
  return {StageId::Stage1, StageId::Stage2NC, StageId::Stage2LI, StageId::Stage2FO, StageId::Stage3};
}

StageSpec stage_spec(StageId id, double base_lr, bool stage3_head) {
  StageSpec s;
  s.id = id;
  switch (id) {
    case StageId::Stage1:
      s.groups = {{"shallow.", base_lr}, {"backbone.", base_lr}, {"mogm.", base_lr}, {"head.", base_lr}};
      s.mode = StageMode::Stage1;
      break;
    case StageId::Stage2NC:
      s.groups = {{"agm.nc.", base_lr}};
      s.attr = Attribute::Normal;
      s.mode = StageMode::BranchNC;
      break;
    case StageId::Stage2LI:
      s.groups = {{"agm.li.", base_lr}};
      s.attr = Attribute::LowLight;
      s.mode = StageMode::BranchLI;
      break;
    case StageId::Stage2FO:
      s.groups = {{"agm.fo.", base_lr}};
      s.attr = Attribute::Fog;
      s.mode = StageMode::BranchFO;
      break;
    case StageId::Stage3:
      s.groups = {{"afm.", base_lr}, {"mogm.", base_lr * 0.5}};
      if (stage3_head) s.groups.push_back({"head.", base_lr * 0.5});
      s.mode = StageMode::Full;
      break;
  }
  return s;
}

Sample make_sample(const imaging::ManifestRecord& rec, const imaging::ImagePlane& hr, const imaging::ImageRGB& optical) {
  if (hr.height != optical.height || hr.width != optical.width)
    throw ContractError("record " + rec.id() + ": optical " + std::to_string(optical.height) + "x" +
                        std::to_string(optical.width) + " does not match thermal " + std::to_string(hr.height) + "x" +
                        std::to_string(hr.width));
  Sample s;
  s.id = rec.id();
  s.attr = rec.attr;
  s.hr = hr;
  s.optical = optical;
  s.lr = imaging::degrade_thermal(hr, rec.scale, rec.mode);
  return s;
}

SampleLoader file_loader(const imaging::DatasetManifest& manifest) {
  return [manifest](const imaging::ManifestRecord& rec) {
    return make_sample(rec, imaging::read_pgm(manifest.resolve(rec.thermal)),
                       imaging::read_ppm(manifest.resolve(rec.optical)));
  };
}

namespace {

struct Batch {
  core::Tensor<float> lr, optical, hr;
};

Batch assemble(const std::vector<const Sample*>& picks, const std::vector<std::pair<int, int>>& origins, int crop,
               int scale) {
  const auto n = static_cast<std::int64_t>(picks.size());
  const int big = crop * scale;
  std::vector<float> lr(static_cast<std::size_t>(n * crop * crop));
  std::vector<float> hr(static_cast<std::size_t>(n * big * big));
  std::vector<float> opt(static_cast<std::size_t>(n * 3 * big * big));
  for (std::int64_t b = 0; b < n; ++b) {
    const Sample& s = *picks[static_cast<std::size_t>(b)];
    const auto [oy, ox] = origins[static_cast<std::size_t>(b)];
    for (int y = 0; y < crop; ++y)
      for (int x = 0; x < crop; ++x)
        lr[static_cast<std::size_t>((b * crop + y) * crop + x)] = s.lr.at(oy + y, ox + x);
    for (int y = 0; y < big; ++y)
      for (int x = 0; x < big; ++x) {
        const int sy = oy * scale + y, sx = ox * scale + x;
        hr[static_cast<std::size_t>((b * big + y) * big + x)] = s.hr.at(sy, sx);
        for (int c = 0; c < 3; ++c)
          opt[static_cast<std::size_t>(((b * 3 + c) * big + y) * big + x)] =
              s.optical.data[(static_cast<std::size_t>(sy) * s.optical.width + sx) * 3 + c];
      }
  }
  return {core::Tensor<float>::from({n, 1, crop, crop}, std::move(lr)),
          core::Tensor<float>::from({n, 3, big, big}, std::move(opt)),
          core::Tensor<float>::from({n, 1, big, big}, std::move(hr))};
}

}  // namespace

StageResult run_stage(const StageSpec& spec, const imaging::DatasetManifest& manifest, model::GDNet<float>& net,
                      const TrainOptions& options, const SampleLoader& loader) {
  const auto& cfg = net.config();
  if (options.steps < 0 || options.batch < 1) throw ConfigError("train: steps must be >= 0 and batch >= 1");
  std::vector<const imaging::ManifestRecord*> records;
  for (const auto& r : manifest.records)
    if (!spec.attr || r.attr == *spec.attr) records.push_back(&r);
  if (records.empty())
    throw ConfigError("stage " + to_string(spec.id) + ": no training records" +
                      (spec.attr ? " with attribute " + imaging::to_string(*spec.attr) : std::string()));

  StageResult result;
  std::vector<Sample> samples;
  int crop = options.crop;
  for (const auto* r : records) {
    if (r->scale != cfg.scale)
      throw ConfigError("record " + r->id() + " has scale " + std::to_string(r->scale) + ", model uses " +
                        std::to_string(cfg.scale));
    result.loaded.push_back(r->id());
    samples.push_back(loader(*r));
    crop = std::min({crop, samples.back().lr.height, samples.back().lr.width});
  }
  crop -= crop % cfg.window;
  if (crop < cfg.window) throw ConfigError("training images are smaller than one attention window");

  std::vector<std::string> patterns;
  std::vector<ParamGroup<float>> groups;
  for (const auto& g : spec.groups) {
    patterns.push_back(g.prefix);
    groups.push_back({net.parameters().with_prefix(g.prefix), g.lr});
  }
  set_trainable(net.parameters(), patterns);
  Adam<float> adam(groups);

  const auto n = samples.size();
  const std::size_t per_epoch =
      options.steps_per_epoch > 0 ? static_cast<std::size_t>(options.steps_per_epoch) : (n + options.batch - 1) / options.batch;
  core::SeededRng rng = core::SeededRng(options.seed).fork("stage-" + to_string(spec.id));
  core::SeededRng order_rng = rng.fork("order"), crop_rng = rng.fork("crop");
  std::vector<std::size_t> perm(n);
  std::size_t cursor = n;

  for (int step = 0; step < options.steps; ++step) {
    std::vector<const Sample*> picks;
    std::vector<std::pair<int, int>> origins;
    for (int b = 0; b < options.batch; ++b) {
      if (cursor == n) {
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[order_rng.below(i)]);
        cursor = 0;
      }
      const Sample& s = samples[perm[cursor++]];
      const int cells_y = (s.lr.height - crop) / cfg.window + 1, cells_x = (s.lr.width - crop) / cfg.window + 1;
      const int oy = static_cast<int>(crop_rng.below(static_cast<std::uint64_t>(cells_y))) * cfg.window;
      const int ox = static_cast<int>(crop_rng.below(static_cast<std::uint64_t>(cells_x))) * cfg.window;
      picks.push_back(&s);
      origins.emplace_back(oy, ox);
      result.used.push_back(s.id);
    }
    Batch batch = assemble(picks, origins, crop, cfg.scale);
    auto loss = l1_loss(net.forward(batch.lr, batch.optical, spec.mode), batch.hr);
    core::backward(loss);
    const double factor = lr_at_epoch(1.0, static_cast<double>(static_cast<std::size_t>(step) / per_epoch));
    adam.step(factor);
    result.log.push_back({step, to_string(spec.id), spec.groups.front().lr * factor, static_cast<double>(loss.item())});
  }
  return result;
}

void write_loss_log(std::ostream& os, const std::vector<StepLog>& log, bool header) {
  if (header) os << "step,stage,lr,loss\n";
  for (const auto& e : log)
    os << e.step << ',' << e.stage << ',' << std::setprecision(17) << e.lr << ',' << e.loss << '\n';
}

}  // namespace gdnet::train
