#include "gdnet/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "gdnet/core/error.hpp"
#include "gdnet/imaging/netpbm.hpp"
#include "gdnet/train/checkpoint.hpp"

namespace gdnet::cli {

using imaging::Attribute;
using imaging::DatasetManifest;
using imaging::ManifestRecord;

std::size_t worker_count() {
  const char* env = std::getenv("GDNET_THREADS");
  if (env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw ConfigError(std::string("GDNET_THREADS must be a positive integer, got '") + env + "'");
    return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::exception_ptr first;
  std::size_t next = 0;
  auto work = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= n || first) return;
        i = next++;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

std::filesystem::path run_synth(const std::filesystem::path& out, int n, std::uint64_t seed, int size) {
  if (n < 1) throw ConfigError("synth: --n must be at least 1");
  std::filesystem::create_directories(out);
  DatasetManifest m;
  m.base_dir = out;
  m.records.resize(static_cast<std::size_t>(n));
  const core::SeededRng root(seed);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "toy_%04zu", i);
    core::SeededRng rng = root.fork(static_cast<std::uint64_t>(i));
    auto& r = m.records[i];
    r.seed = rng.next_u64();
    r.optical = std::string(stem) + ".ppm";
    r.thermal = std::string(stem) + ".pgm";
    auto pair = imaging::generate_toy_pair(rng, size, size);
    imaging::write_ppm8(out / r.optical, pair.optical);
    imaging::write_pgm16(out / r.thermal, pair.thermal);
  });
  const auto path = out / "manifest.jsonl";
  imaging::write_manifest(path, m);
  return path;
}

std::filesystem::path run_degrade(const std::filesystem::path& manifest_path, int scale, imaging::DegradeMode mode,
                                  std::uint64_t seed) {
  if (scale != 4 && scale != 8) throw ConfigError("degrade: --scale must be 4 or 8");
  const auto in = imaging::read_manifest(manifest_path);
  const std::string tag = manifest_path.stem().string() + "_x" + std::to_string(scale) + "_" + imaging::to_string(mode);
  const auto dir = manifest_path.parent_path() / tag;
  std::filesystem::create_directories(dir);

  const core::SeededRng root(seed);
  const std::size_t n = in.records.size();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  core::SeededRng shuffle = root.fork("attributes");
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[shuffle.below(i)]);
  const Attribute cycle[3] = {Attribute::Normal, Attribute::Fog, Attribute::LowLight};

  DatasetManifest out;
  out.base_dir = manifest_path.parent_path();
  out.records.resize(n);
  for (std::size_t p = 0; p < n; ++p) out.records[perm[p]].attr = cycle[p % 3];
  parallel_for(n, [&](std::size_t i) {
    const auto& src = in.records[i];
    auto& r = out.records[i];
    const auto hr = imaging::read_pgm(in.resolve(src.thermal));
    if (hr.height % scale || hr.width % scale)
      throw ConfigError("degrade: " + src.thermal + " is not divisible by scale " + std::to_string(scale));
    core::SeededRng rng = root.fork(src.seed);
    const auto optical = imaging::degrade_optical(imaging::read_ppm(in.resolve(src.optical)), r.attr, rng);
    r.optical = (std::filesystem::path(tag) / (std::filesystem::path(src.optical).stem().string() + ".ppm")).string();
    imaging::write_ppm8(out.base_dir / r.optical, optical);
    r.thermal = std::filesystem::relative(in.resolve(src.thermal), out.base_dir).string();
    r.mode = mode;
    r.scale = scale;
    r.seed = src.seed;
  });
  const auto path = out.base_dir / (tag + ".jsonl");
  imaging::write_manifest(path, out);
  return path;
}

namespace {

void save(const std::filesystem::path& path, const model::GDNet<float>& net) {
  const auto tmp = path.string() + ".tmp";
  train::write_checkpoint(tmp, train::snapshot(net.parameters(), model::config_to_json(net.config())));
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::unique_ptr<model::GDNet<float>> load_model(const std::filesystem::path& checkpoint) {
  if (!std::filesystem::exists(checkpoint)) throw IoError("missing checkpoint " + checkpoint.string());
  const auto ck = train::read_checkpoint(checkpoint);
  auto net = std::make_unique<model::GDNet<float>>(model::config_from_json(ck.config_json), 0);
  train::restore(ck, net->parameters());
  return net;
}

void run_train(const RunConfig& cfg, std::ostream& log) {
  log << "config " << cfg.echo() << '\n';
  const auto manifest = imaging::read_manifest(cfg.manifest);
  const auto stages = cfg.stages();
  std::unique_ptr<model::GDNet<float>> net;
  auto start = cfg.init_checkpoint;
  if (start.empty() && stages.front() != train::StageId::Stage1) start = cfg.checkpoint;
  if (start.empty()) {
    net = std::make_unique<model::GDNet<float>>(cfg.model(), cfg.seed);
  } else {
    net = load_model(start);
    if (model::config_to_json(net->config()) != model::config_to_json(cfg.model()))
      throw ConfigError("checkpoint " + start.string() + " was trained with a different model configuration");
  }
  const auto loader = train::file_loader(manifest);
  const bool fresh_log = stages.front() == train::StageId::Stage1 || !std::filesystem::exists(cfg.loss_log);
  std::ofstream loss(cfg.loss_log, fresh_log ? std::ios::trunc : std::ios::app);
  if (!loss) throw IoError("cannot write loss log " + cfg.loss_log.string());
  bool header = fresh_log;
  for (auto id : stages) {
    const auto spec = train::stage_spec(id, cfg.lr, cfg.stage3_head);
    const auto result = train::run_stage(spec, manifest, *net, cfg.options(id), loader);
    train::write_loss_log(loss, result.log, header);
    header = false;
    save(cfg.checkpoint, *net);
    log << "stage " << train::to_string(id) << ": " << result.log.size() << " steps";
    if (!result.log.empty())
      log << ", loss " << result.log.front().loss << " -> " << result.log.back().loss;
    log << ", checkpoint " << cfg.checkpoint.string() << '\n';
  }
}

imaging::ImagePlane super_resolve(const model::GDNet<float>& net, const imaging::ImagePlane& lr,
                                  const imaging::ImageRGB& optical, model::StageMode mode) {
  const int s = net.config().scale, m = net.config().window;
  if (optical.height != lr.height * s || optical.width != lr.width * s)
    throw ContractError("optical image must be the LR size times the scale");
  const int ph = (lr.height + m - 1) / m * m, pw = (lr.width + m - 1) / m * m;
  imaging::ImagePlane lp(ph, pw);
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x) lp.at(y, x) = lr.at(std::min(y, lr.height - 1), std::min(x, lr.width - 1));
  imaging::ImageRGB op(ph * s, pw * s);
  for (int y = 0; y < ph * s; ++y)
    for (int x = 0; x < pw * s; ++x)
      for (int c = 0; c < 3; ++c)
        op.data[(static_cast<std::size_t>(y) * op.width + x) * 3 + c] =
            optical.data[(static_cast<std::size_t>(std::min(y, optical.height - 1)) * optical.width +
                          std::min(x, optical.width - 1)) * 3 + c];
  core::NoGradGuard guard;
  const auto out = imaging::plane_from_tensor(net.forward(imaging::to_tensor(lp), imaging::to_tensor(op), mode));
  imaging::ImagePlane sr(lr.height * s, lr.width * s);
  for (int y = 0; y < sr.height; ++y)
    for (int x = 0; x < sr.width; ++x) sr.at(y, x) = out.at(y, x);
  imaging::clamp01(sr);
  return sr;
}

void run_infer(const std::filesystem::path& checkpoint, const std::filesystem::path& manifest_path,
               const std::filesystem::path& out, model::StageMode mode) {
  const auto net = load_model(checkpoint);
  const auto manifest = imaging::read_manifest(manifest_path);
  std::filesystem::create_directories(out);
  parallel_for(manifest.records.size(), [&](std::size_t i) {
    const auto& r = manifest.records[i];
    if (r.scale != net->config().scale)
      throw ConfigError("record " + r.id() + " has scale " + std::to_string(r.scale) + ", checkpoint uses " +
                        std::to_string(net->config().scale));
    const auto hr = imaging::read_pgm(manifest.resolve(r.thermal));
    const auto lr = imaging::degrade_thermal(hr, r.scale, r.mode);
    const auto sr = super_resolve(*net, lr, imaging::read_ppm(manifest.resolve(r.optical)), mode);
    imaging::write_pgm16(eval::sr_path(out, r), sr);
  });
}

void write_report(const eval::MetricReport& report, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write report " + path.string());
  eval::write_report_csv(os, report);
  if (!os) throw IoError("short write to report " + path.string());
}

int run_eval(const std::filesystem::path& manifest, const std::filesystem::path& sr, const std::filesystem::path& report,
             std::ostream& out) {
  const auto rep = eval::evaluate_pairs(imaging::read_manifest(manifest), sr);
  write_report(rep, report);
  eval::write_report_table(out, rep);
  return rep.missing.empty() ? 0 : 3;
}

}  // namespace gdnet::cli
