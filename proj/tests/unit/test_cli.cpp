#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "gdnet/cli/commands.hpp"
#include "gdnet/core/error.hpp"
#include "gdnet/imaging/netpbm.hpp"

using namespace gdnet;
using namespace gdnet::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("gdnet_test_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
  return files;
}

int run(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "gdnet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return rc;
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config parsing") {
  const std::string paths = R"("manifest":"m.jsonl","checkpoint":"c.gdnt")";
  auto c = parse_config(R"({"scale":4,"preset":"paper",)" + paths + "}", "/data");
  CHECK(c.model().embed_dim == 96);
  CHECK(c.model().window == 8);
  CHECK(c.model().heads == 6);
  CHECK(c.manifest == fs::path("/data/m.jsonl"));
  CHECK(c.loss_log == fs::path("/data/c.gdnt.loss.csv"));

  auto o = parse_config(R"({"seed":3,)" + paths + "}", "/data", {{"seed", "7"}, {"checkpoint", "rel.gdnt"}});
  CHECK(o.seed == 7);
  CHECK(o.checkpoint == fs::path("rel.gdnt"));

  CHECK(error_of([&] { parse_config(R"({"scale":5,)" + paths + "}", "."); }).find("scale") != std::string::npos);
  CHECK(error_of([&] { parse_config(R"({"colour":1,)" + paths + "}", "."); }).find("colour") != std::string::npos);
  CHECK(error_of([&] { parse_config(R"({"steps":"many",)" + paths + "}", "."); }).find("steps") != std::string::npos);
  CHECK(error_of([&] { parse_config(R"({"checkpoint":"c"})", "."); }).find("manifest") != std::string::npos);
  CHECK(error_of([&] { parse_config(R"({"stage":"7",)" + paths + "}", "."); }).find("7") != std::string::npos);
  CHECK(error_of([&] { parse_config(R"({"mode":"XX",)" + paths + "}", "."); }).find("mode") != std::string::npos);
  CHECK_THROWS_AS(parse_config("[1]", "."), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/cfg.json"), IoError);

  auto t = parse_config(R"({"stage_steps":{"1":5,"3":2},"steps":9,)" + paths + "}", ".");
  CHECK(t.options(train::StageId::Stage1).steps == 5);
  CHECK(t.options(train::StageId::Stage2LI).steps == 9);
  CHECK(t.stages().size() == 5);
  CHECK(t.echo().find("\"embed_dim\":32") != std::string::npos);
}

TEST_CASE("worker cap and parallel loop") {
  setenv("GDNET_THREADS", "3", 1);
  CHECK(worker_count() == 3);
  std::vector<int> hits(50, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) { if (i == 4) throw IoError("boom"); }), IoError);
  setenv("GDNET_THREADS", "zero", 1);
  CHECK_THROWS_AS(worker_count(), ConfigError);
  std::string err;
  CHECK(run({"synth", "--out", fresh_dir("threads").string(), "--n", "1", "--size", "32"}, nullptr, &err) == 2);
  CHECK(err.find("GDNET_THREADS") != std::string::npos);
  unsetenv("GDNET_THREADS");
  CHECK(worker_count() >= 1);
}

TEST_CASE("synth and degrade are deterministic; attributes split 1:1:1") {
  auto a = fresh_dir("synth_a"), b = fresh_dir("synth_b");
  CHECK(run({"synth", "--out", a.string(), "--n", "12", "--seed", "1", "--size", "64"}) == 0);
  CHECK(run({"synth", "--out", b.string(), "--n", "12", "--seed", "1", "--size", "64"}) == 0);
  CHECK(tree(a) == tree(b));
  CHECK(tree(a).size() == 25);

  for (const auto& d : {a, b}) CHECK(run({"degrade", "--manifest", (d / "manifest.jsonl").string(), "--scale", "8",
                                           "--mode", "BD", "--seed", "4"}) == 0);
  CHECK(tree(a) == tree(b));
  auto m = imaging::read_manifest(a / "manifest_x8_BD.jsonl");
  REQUIRE(m.records.size() == 12);
  std::map<imaging::Attribute, int> counts;
  for (const auto& r : m.records) {
    counts[r.attr]++;
    CHECK(r.scale == 8);
    CHECK(r.mode == imaging::DegradeMode::BD);
  }
  CHECK(counts[imaging::Attribute::Normal] == 4);
  CHECK(counts[imaging::Attribute::Fog] == 4);
  CHECK(counts[imaging::Attribute::LowLight] == 4);
  // normal records keep the original optical pixels
  auto src = imaging::read_manifest(a / "manifest.jsonl");
  for (std::size_t i = 0; i < m.records.size(); ++i)
    if (m.records[i].attr == imaging::Attribute::Normal)
      CHECK(imaging::read_ppm(m.resolve(m.records[i].optical)).data ==
            imaging::read_ppm(src.resolve(src.records[i].optical)).data);

  std::string err;
  CHECK(run({"degrade", "--manifest", (a / "manifest.jsonl").string(), "--scale", "5"}, nullptr, &err) != 0);
  CHECK(run({"synth", "--out", a.string(), "--n", "2", "--size", "60"}, nullptr, &err) == 1);
  CHECK(run({}, nullptr, &err) != 0);
}

TEST_CASE("train, infer and eval round trip") {
  auto d = fresh_dir("pipeline");
  REQUIRE(run({"synth", "--out", (d / "data").string(), "--n", "6", "--seed", "2", "--size", "72"}) == 0);
  REQUIRE(run({"degrade", "--manifest", (d / "data" / "manifest.jsonl").string(), "--seed", "3"}) == 0);
  const auto manifest = (d / "data" / "manifest_x4_BI.jsonl").string();

  std::string err;
  CHECK(run({"infer", "--checkpoint", (d / "none.gdnt").string(), "--manifest", manifest, "--out",
             (d / "sr").string()},
            nullptr, &err) == 1);
  CHECK(err.find("missing checkpoint") != std::string::npos);

  {
    std::ofstream cfg(d / "cfg.json");
    cfg << R"({"manifest":"data/manifest_x4_BI.jsonl","checkpoint":"model.gdnt","steps":2,"batch":1,"crop":16,"lr":0.001,"seed":5})";
  }
  CHECK(run({"train", "--config", (d / "cfg.json").string(), "--stage", "2nc"}, nullptr, &err) == 1);
  CHECK(err.find("missing checkpoint") != std::string::npos);

  std::string out;
  REQUIRE(run({"train", "--config", (d / "cfg.json").string(), "--stage", "1"}, &out) == 0);
  CHECK(out.find("\"seed\":5") != std::string::npos);
  const auto first = slurp(d / "model.gdnt");
  REQUIRE(run({"train", "--config", (d / "cfg.json").string(), "--stage", "1"}) == 0);
  CHECK(slurp(d / "model.gdnt") == first);
  REQUIRE(run({"train", "--config", (d / "cfg.json").string(), "--stage", "2fo", "--seed", "5"}) == 0);
  CHECK(slurp(d / "model.gdnt") != first);
  const auto log = slurp(d / "model.gdnt.loss.csv");
  CHECK(log.rfind("step,stage,lr,loss\n0,1,", 0) == 0);
  CHECK(log.find("\n0,2fo,") != std::string::npos);

  REQUIRE(run({"infer", "--checkpoint", (d / "model.gdnt").string(), "--manifest", manifest, "--out",
               (d / "sr").string()}) == 0);
  auto sr = imaging::read_pgm(d / "sr" / "toy_0000.pgm");
  CHECK(sr.height == 72);
  CHECK(sr.width == 72);
  CHECK(run({"eval", "--manifest", manifest, "--sr", (d / "sr").string(), "--report", (d / "rep.csv").string()},
            &out) == 0);
  CHECK(out.find("all") != std::string::npos);
  const auto report = slurp(d / "rep.csv");
  CHECK(report.rfind("id,attr,psnr,ssim\ntoy_0000,", 0) == 0);

  fs::remove(d / "sr" / "toy_0003.pgm");
  CHECK(run({"eval", "--manifest", manifest, "--sr", (d / "sr").string(), "--report", (d / "rep2.csv").string()},
            &out) != 0);
  CHECK(out.find("toy_0003") != std::string::npos);
}

TEST_CASE("report writing") {
  auto d = fresh_dir("report");
  eval::MetricReport empty;
  write_report(empty, d / "a.csv");
  const auto text = slurp(d / "a.csv");
  CHECK(text.rfind("id,attr,psnr,ssim\nmean(n=0),normal,", 0) == 0);
  eval::MetricReport r;
  r.entries = {{"b", imaging::Attribute::Fog, 30.5, 0.9}, {"c", imaging::Attribute::Normal, 28.25, 0.8}};
  write_report(r, d / "b1.csv");
  write_report(r, d / "b2.csv");
  CHECK(slurp(d / "b1.csv") == slurp(d / "b2.csv"));
  CHECK(slurp(d / "b1.csv").find("mean(n=2),all,29.375,0.85") != std::string::npos);
  CHECK_THROWS_AS(write_report(r, d / "missing_dir" / "x.csv"), IoError);
}
