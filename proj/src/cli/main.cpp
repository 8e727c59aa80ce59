#include <iostream>

#include "CLI11.hpp"
#include "gdnet/cli/commands.hpp"
#include "gdnet/core/error.hpp"

namespace gdnet::cli {

namespace {

model::StageMode parse_guidance(const std::string& s) {
  for (auto m : {model::StageMode::Full, model::StageMode::Stage1, model::StageMode::BranchNC,
                 model::StageMode::BranchLI, model::StageMode::BranchFO})
    if (model::to_string(m) == s) return m;
  throw ConfigError("unknown guidance '" + s + "'");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optics-guided thermal super-resolution"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate toy optical/thermal pairs and a manifest");
  std::string synth_out;
  int synth_n = 12, synth_size = 192;
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--n", synth_n, "number of pairs")->capture_default_str();
  synth->add_option("--seed", synth_seed, "random seed")->capture_default_str();
  synth->add_option("--size", synth_size, "image side (multiple of 8)")->capture_default_str();

  auto* degrade = app.add_subcommand("degrade", "tag attributes 1:1:1 and degrade optical images");
  std::string deg_manifest, deg_mode = "BI";
  int deg_scale = 4;
  std::uint64_t deg_seed = 0;
  degrade->add_option("--manifest", deg_manifest, "input manifest")->required();
  degrade->add_option("--scale", deg_scale, "4 or 8")->check(CLI::IsMember({4, 8}))->capture_default_str();
  degrade->add_option("--mode", deg_mode, "BI or BD")->check(CLI::IsMember({"BI", "BD"}))->capture_default_str();
  degrade->add_option("--seed", deg_seed, "random seed")->capture_default_str();

  auto* trn = app.add_subcommand("train", "run training stages");
  std::string cfg_path, stage;
  Overrides overrides;
  trn->add_option("--config", cfg_path, "JSON config file")->required();
  trn->add_option("--stage", stage, "1, 2nc, 2li, 2fo, 3 or all");
  for (const char* key : {"seed", "steps", "batch", "crop", "lr", "preset", "scale", "manifest", "checkpoint",
                          "init_checkpoint", "loss_log", "steps_per_epoch"})
    trn->add_option_function<std::string>(
        std::string("--") + key, [&overrides, key](const std::string& v) { overrides.emplace_back(key, v); },
        std::string("overrides the config value of ") + key);

  auto* infer = app.add_subcommand("infer", "super-resolve every manifest record");
  std::string inf_ck, inf_manifest, inf_out, inf_guidance = "full";
  infer->add_option("--checkpoint", inf_ck, "trained checkpoint")->required();
  infer->add_option("--manifest", inf_manifest, "manifest to process")->required();
  infer->add_option("--out", inf_out, "output directory for <id>.pgm")->required();
  infer->add_option("--guidance", inf_guidance, "full, stage1, branch_nc, branch_li or branch_fo")
      ->capture_default_str();

  auto* ev = app.add_subcommand("eval", "score SR outputs against ground truth");
  std::string ev_manifest, ev_sr, ev_report;
  ev->add_option("--manifest", ev_manifest, "manifest")->required();
  ev->add_option("--sr", ev_sr, "directory of <id>.pgm outputs")->required();
  ev->add_option("--report", ev_report, "CSV report path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    worker_count();
    if (*synth) {
      out << run_synth(synth_out, synth_n, synth_seed, synth_size).string() << '\n';
    } else if (*degrade) {
      out << run_degrade(deg_manifest, deg_scale, imaging::parse_mode(deg_mode), deg_seed).string() << '\n';
    } else if (*trn) {
      if (!stage.empty()) overrides.emplace_back("stage", stage);
      run_train(load_config(cfg_path, overrides), out);
    } else if (*infer) {
      run_infer(inf_ck, inf_manifest, inf_out, parse_guidance(inf_guidance));
    } else if (*ev) {
      return run_eval(ev_manifest, ev_sr, ev_report, out);
    }
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace gdnet::cli
