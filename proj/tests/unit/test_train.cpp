#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "gdnet/core/autograd.hpp"
#include "gdnet/train/checkpoint.hpp"
#include "gdnet/train/loss.hpp"
#include "gdnet/train/optim.hpp"
#include "gdnet/train/stage.hpp"
#include "support/toy_data.hpp"

using namespace gdnet;
using namespace gdnet::train;
using core::SeededRng;
using core::Tensor;

namespace {

model::GDNetConfig small_config() {
  auto c = model::tiny_preset(4);
  c.embed_dim = 16;
  c.heads = 2;
  c.window = 4;
  c.nc_mgl = 1;
  c.li_mgl = 1;
  c.fo_gal = 1;
  c.upsample_mid_channels = 4;
  return c;
}

TrainOptions quick(int steps, int batch = 1) {
  TrainOptions o;
  o.steps = steps;
  o.batch = batch;
  o.crop = 8;
  o.base_lr = 1e-3;
  o.seed = 3;
  return o;
}

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "gdnet_test_train";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("l1 loss values and subgradient") {
  auto a = Tensor<double>::from({2, 3}, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
  CHECK(l1_loss(a, a).item() == 0.0);
  auto b = Tensor<double>::from({2, 3}, {0.6, 0.7, 0.8, 0.9, 1.0, 1.1});
  CHECK(l1_loss(b, a).item() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(l1_loss(a, Tensor<double>::zeros({3, 2})), ContractError);

  auto out = Tensor<double>::leaf({4}, {0.5, -0.2, 0.3, 1.0}, true);
  auto gt = Tensor<double>::from({4}, {0.1, 0.1, 0.3, 2.0});
  core::backward(l1_loss(out, gt));
  const double expect[4] = {0.25, -0.25, 0.0, -0.25};
  for (int i = 0; i < 4; ++i) CHECK(out.grad()[static_cast<std::size_t>(i)] == expect[i]);

  // finite differences agree away from ties
  std::function<double(const Tensor<double>&)> f = [&](const Tensor<double>& x) { return l1_loss(x, gt).item(); };
  auto fd = core::finite_diff_grad(f, out.detach(), 1e-6);
  for (int i : {0, 1, 3}) CHECK(fd[i] == doctest::Approx(expect[i]).epsilon(1e-6));
}

TEST_CASE("adam matches hand-evaluated updates") {
  core::ParameterStore<double> store;
  auto& p = store.add("p", {1}, {0.0});
  Adam<double> adam({{{&p}, 1e-4}});
  p.value.mutable_grad()[0] = 1.0;
  adam.step();
  CHECK(p.value[0] == doctest::Approx(-1e-4 / (1.0 + 1e-8)).epsilon(1e-12));
  CHECK(p.grad()[0] == 0.0);

  // three steps against an independent recurrence
  core::ParameterStore<double> s2;
  auto& q = s2.add("q", {2}, {0.5, -0.5});
  Adam<double> a2({{{&q}, 0.01}});
  const double grads[3][2] = {{0.3, -1.0}, {0.1, 2.0}, {-0.4, 0.0}};
  double val[2] = {0.5, -0.5}, m[2] = {0, 0}, v[2] = {0, 0};
  for (int t = 1; t <= 3; ++t) {
    for (int i = 0; i < 2; ++i) {
      q.value.mutable_grad()[static_cast<std::size_t>(i)] = grads[t - 1][i];
      m[i] = 0.9 * m[i] + 0.1 * grads[t - 1][i];
      v[i] = 0.99 * v[i] + 0.01 * grads[t - 1][i] * grads[t - 1][i];
      val[i] -= 0.01 * (m[i] / (1 - std::pow(0.9, t))) / (std::sqrt(v[i] / (1 - std::pow(0.99, t))) + 1e-8);
    }
    a2.step();
    for (int i = 0; i < 2; ++i) CHECK(q.value[i] == doctest::Approx(val[i]).epsilon(1e-12));
  }
  CHECK(a2.steps() == 3);
  CHECK(a2.first_moment("q").size() == 2);

  core::ParameterStore<double> s3;
  auto& z = s3.add("z", {3}, {1.0, 2.0, 3.0});
  Adam<double> a3({{{&z}, 0.1}});
  for (int i = 0; i < 5; ++i) a3.step();
  CHECK(z.value[0] == 1.0);
  CHECK(z.value[1] == 2.0);
  CHECK(z.value[2] == 3.0);

  auto& stray = s3.add("stray", {1}, {0.0});
  CHECK_THROWS_AS(a3.update(stray, 0.1), ContractError);
}

TEST_CASE("learning-rate schedule halves every 200 epochs") {
  CHECK(lr_at_epoch(1e-4, 0) == 1e-4);
  CHECK(lr_at_epoch(1e-4, 199.5) == 1e-4);
  CHECK(lr_at_epoch(1e-4, 200) == 5e-5);
  CHECK(lr_at_epoch(1e-4, 400) == 2.5e-5);
  double prev = lr_at_epoch(1e-4, 0);
  for (int e = 1; e <= 2000; ++e) {
    const double lr = lr_at_epoch(1e-4, e);
    CHECK(lr <= prev);
    if (e % 200 == 0) CHECK(lr == prev * 0.5);
    else CHECK(lr == prev);
    prev = lr;
  }
  CHECK_THROWS_AS(lr_at_epoch(1e-4, -1), ContractError);
}

TEST_CASE("trainable selection by name prefix") {
  model::GDNet<float> net(small_config(), 1);
  auto& store = net.parameters();
  CHECK_THROWS_AS(set_trainable(store, {"agm.nc.", "nothing."}), ConfigError);
  const auto n = set_trainable(store, {"agm.nc."});
  CHECK(n == store.with_prefix("agm.nc.").size());
  for (auto* p : store.all()) CHECK(p->trainable() == (p->name.rfind("agm.nc.", 0) == 0));
  CHECK(set_trainable(store, {}) == store.size());
  const auto h = checksum(store);
  CHECK(h == checksum(store));
  CHECK(checksum(store, "agm.") != checksum(store, "afm."));
}

TEST_CASE("checkpoint round trip and partial restore") {
  auto cfg = small_config();
  model::GDNet<float> a(cfg, 10), b(cfg, 11);
  auto x = Tensor<float>::full({1, 1, 8, 8}, 0.3f);
  auto y = Tensor<float>::full({1, 3, 32, 32}, 0.6f);
  core::NoGradGuard guard;
  auto path = temp_path("round.gdnt");
  write_checkpoint(path, snapshot(a.parameters(), model::config_to_json(cfg)));
  auto ck = read_checkpoint(path);
  CHECK(model::config_from_json(ck.config_json).embed_dim == 16);
  CHECK(ck.records.size() == a.parameters().size());

  // prefix filter restores the low-light branch only
  const auto nc_before = checksum(b.parameters(), "agm.nc.");
  CHECK(restore(ck, b.parameters(), "agm.li.") == b.parameters().with_prefix("agm.li.").size());
  CHECK(checksum(b.parameters(), "agm.li.") == checksum(a.parameters(), "agm.li."));
  CHECK(checksum(b.parameters(), "agm.nc.") == nc_before);
  CHECK(checksum(b.parameters(), "agm.nc.") != checksum(a.parameters(), "agm.nc."));

  restore(ck, b.parameters());
  CHECK(checksum(b.parameters()) == checksum(a.parameters()));
  auto oa = a.forward(x, y, model::StageMode::Full), ob = b.forward(x, y, model::StageMode::Full);
  CHECK(std::memcmp(oa.data().data(), ob.data().data(), oa.data().size_bytes()) == 0);
  const auto bytes = encode_checkpoint(ck);
  CHECK(encode_checkpoint(decode_checkpoint(bytes)) == bytes);
}

TEST_CASE("checkpoint load errors") {
  auto cfg = small_config();
  model::GDNet<float> net(cfg, 12);
  auto ck = snapshot(net.parameters(), model::config_to_json(cfg));
  auto bytes = encode_checkpoint(ck);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 10);
  try {
    decode_checkpoint(truncated);
    FAIL("truncated checkpoint accepted");
  } catch (const ParseError& e) {
    CHECK(e.offset() > 0);
    CHECK(e.offset() <= truncated.size());
    CHECK(std::string(e.what()).find("offset") != std::string::npos);
  }
  auto path = temp_path("truncated.gdnt");
  {
    std::ofstream os(path, std::ios::binary);
    os.write(truncated.data(), static_cast<std::streamsize>(truncated.size()));
  }
  try {
    read_checkpoint(path);
    FAIL("truncated file accepted");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(path.string()) != std::string::npos);
  }
  CHECK_THROWS_AS(read_checkpoint(temp_path("absent.gdnt")), IoError);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad_magic), ParseError);
  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK_THROWS_AS(decode_checkpoint(bad_version), ParseError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_checkpoint(trailing), ParseError);

  auto unknown = ck;
  unknown.records.push_back({"ghost.weight", {1}, {0.f}});
  CHECK_THROWS_AS(restore(unknown, net.parameters()), ParseError);
  auto reshaped = ck;
  reshaped.records[0].shape = {static_cast<std::int64_t>(reshaped.records[0].values.size())};
  CHECK_THROWS_AS(restore(reshaped, net.parameters()), ParseError);
  auto missing = ck;
  missing.records.pop_back();
  CHECK_THROWS_AS(restore(missing, net.parameters()), ParseError);
  auto duplicate = ck;
  duplicate.records.push_back(duplicate.records[0]);
  CHECK_THROWS_AS(decode_checkpoint(encode_checkpoint(duplicate)), ParseError);
}

TEST_CASE("model config json") {
  auto cfg = small_config();
  auto back = model::config_from_json(model::config_to_json(cfg));
  CHECK(model::config_to_json(back) == model::config_to_json(cfg));
  CHECK_THROWS_AS(model::config_from_json(R"({"scale":4,"colour":1})"), ConfigError);
  CHECK_THROWS_AS(model::config_from_json(R"({"scale":"4"})"), ConfigError);
  CHECK_THROWS_AS(model::config_from_json(R"({"scale":5})"), ConfigError);
  CHECK(model::config_from_json(R"({"scale":8})").backbone_sets() == 6);
}

TEST_CASE("stage specs") {
  auto s1 = stage_spec(StageId::Stage1);
  CHECK(s1.groups.size() == 4);
  CHECK_FALSE(s1.attr.has_value());
  auto s3 = stage_spec(StageId::Stage3, 1e-4);
  REQUIRE(s3.groups.size() == 2);
  CHECK(s3.groups[0].prefix == "afm.");
  CHECK(s3.groups[0].lr == 1e-4);
  CHECK(s3.groups[1].prefix == "mogm.");
  CHECK(s3.groups[1].lr == 0.5e-4);
  CHECK(stage_spec(StageId::Stage3, 1e-4, true).groups.size() == 3);
  CHECK(*stage_spec(StageId::Stage2FO).attr == imaging::Attribute::Fog);
  CHECK(*stage_spec(StageId::Stage2LI).attr == imaging::Attribute::LowLight);
  CHECK(*stage_spec(StageId::Stage2NC).attr == imaging::Attribute::Normal);
  for (auto id : all_stages()) CHECK(parse_stage(to_string(id)) == id);
  CHECK_THROWS_AS(parse_stage("4"), ConfigError);
}

TEST_CASE("stage data routing and freezing") {
  auto ds = testing::make_toy_dataset({2, 2, 0}, 32, 4, 5);
  model::GDNet<float> net(small_config(), 6);
  CHECK_THROWS_AS(run_stage(stage_spec(StageId::Stage2FO), ds.manifest, net, quick(2), ds.loader()), ConfigError);

  const auto before_all = checksum(net.parameters());
  const auto nc_before = checksum(net.parameters(), "agm.nc.");
  std::vector<std::pair<std::string, std::uint64_t>> frozen;
  for (const char* g : {"shallow.", "backbone.", "agm.li.", "agm.fo.", "afm.", "mogm.", "head."})
    frozen.emplace_back(g, checksum(net.parameters(), g));
  ds.reads->clear();
  auto r = run_stage(stage_spec(StageId::Stage2NC, 1e-3), ds.manifest, net, quick(100), ds.loader());
  for (const auto& id : *ds.reads) CHECK(ds.samples.at(id).attr == imaging::Attribute::Normal);
  for (const auto& id : r.used) CHECK(ds.samples.at(id).attr == imaging::Attribute::Normal);
  CHECK(ds.reads->size() == 2);
  for (const auto& [g, h] : frozen) {
    INFO(g);
    CHECK(checksum(net.parameters(), g) == h);
  }
  CHECK(checksum(net.parameters(), "agm.nc.") != nc_before);
  CHECK(checksum(net.parameters()) != before_all);

  std::vector<std::pair<std::string, std::uint64_t>> stage3_frozen;
  for (const char* g : {"shallow.", "backbone.", "agm.", "head."})
    stage3_frozen.emplace_back(g, checksum(net.parameters(), g));
  ds.reads->clear();
  run_stage(stage_spec(StageId::Stage3, 1e-3), ds.manifest, net, quick(3), ds.loader());
  CHECK(ds.reads->size() == 4);
  for (const auto& [g, h] : stage3_frozen) {
    INFO(g);
    CHECK(checksum(net.parameters(), g) == h);
  }
}

TEST_CASE("stage runs are bit-reproducible and log the schedule") {
  auto ds = testing::make_toy_dataset({2, 1, 1}, 32, 4, 7);
  auto run = [&](std::vector<StepLog>& log) {
    model::GDNet<float> net(small_config(), 8);
    auto opts = quick(6, 2);
    opts.steps_per_epoch = 1;
    log = run_stage(stage_spec(StageId::Stage1, 1e-3), ds.manifest, net, opts, ds.loader()).log;
    return checksum(net.parameters());
  };
  std::vector<StepLog> a, b;
  CHECK(run(a) == run(b));
  REQUIRE(a.size() == 6);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].loss == b[i].loss);
    CHECK(a[i].lr == 1e-3);
    CHECK(a[i].stage == "1");
  }
  std::ostringstream os;
  write_loss_log(os, a);
  CHECK(os.str().rfind("step,stage,lr,loss\n0,1,", 0) == 0);

  auto wrong_scale = ds.manifest;
  wrong_scale.records[0].scale = 8;
  model::GDNet<float> net(small_config(), 8);
  CHECK_THROWS_AS(run_stage(stage_spec(StageId::Stage1), wrong_scale, net, quick(1), ds.loader()), ConfigError);
}
