#include "gdnet/cli/config.hpp"

#include <fstream>
#include <type_traits>
#include <set>
#include <sstream>

#include "gdnet/core/error.hpp"
#include "json.hpp"

namespace gdnet::cli {

using nlohmann::json;

model::GDNetConfig RunConfig::model() const { return model::preset(preset, scale); }

train::TrainOptions RunConfig::options(train::StageId stage) const {
  train::TrainOptions o;
  auto it = stage_steps.find(train::to_string(stage));
  o.steps = it == stage_steps.end() ? steps : it->second;
  o.batch = batch;
  o.crop = crop;
  o.base_lr = lr;
  o.steps_per_epoch = steps_per_epoch;
  o.seed = seed;
  o.stage3_head = stage3_head;
  return o;
}

std::vector<train::StageId> RunConfig::stages() const {
  if (stage == "all") return train::all_stages();
  return {train::parse_stage(stage)};
}

void RunConfig::validate() const {
  model().validate();
  stages();
  for (const auto& [name, n] : stage_steps) {
    train::parse_stage(name);
    if (n < 0) throw ConfigError("stage_steps." + name + " must be non-negative");
  }
  if (steps < 0) throw ConfigError("steps must be non-negative");
  if (batch < 1) throw ConfigError("batch must be at least 1");
  if (crop < 1) throw ConfigError("crop must be positive");
  if (!(lr > 0)) throw ConfigError("lr must be positive");
  if (steps_per_epoch < 0) throw ConfigError("steps_per_epoch must be non-negative");
  if (manifest.empty()) throw ConfigError("missing required path 'manifest'");
  if (checkpoint.empty()) throw ConfigError("missing required path 'checkpoint'");
}

std::string RunConfig::echo() const {
  nlohmann::ordered_json j;
  j["scale"] = scale;
  j["mode"] = imaging::to_string(mode);
  j["seed"] = seed;
  j["preset"] = preset;
  j["stage"] = stage;
  j["steps"] = steps;
  j["stage_steps"] = stage_steps;
  j["batch"] = batch;
  j["crop"] = crop;
  j["lr"] = lr;
  j["steps_per_epoch"] = steps_per_epoch;
  j["stage3_head"] = stage3_head;
  j["manifest"] = manifest.string();
  j["checkpoint"] = checkpoint.string();
  j["init_checkpoint"] = init_checkpoint.string();
  j["loss_log"] = loss_log.string();
  j["model"] = json::parse(model::config_to_json(model()));
  return j.dump();
}

namespace {

template <typename V>
V typed(const json& v, const std::string& key) {
  const bool ok = [&] {
    if constexpr (std::is_same_v<V, bool>) return v.is_boolean();
    else if constexpr (std::is_same_v<V, std::uint64_t>) return v.is_number_unsigned();
    else if constexpr (std::is_integral_v<V>) return v.is_number_integer();
    else if constexpr (std::is_floating_point_v<V>) return v.is_number();
    else return v.is_string();
  }();
  if (!ok) throw ConfigError("config key '" + key + "' has the wrong type (got " + v.dump() + ")");
  return v.get<V>();
}

// Flag values arrive as text; keys holding strings keep them verbatim.
json scalar_from_text(const std::string& key, const std::string& text) {
  static const std::set<std::string> kTextKeys = {"mode", "preset", "stage", "manifest",
                                                  "checkpoint", "init_checkpoint", "loss_log"};
  if (kTextKeys.count(key)) return json(text);
  try {
    auto v = json::parse(text);
    if (!v.is_structured()) return v;
  } catch (const json::parse_error&) {
  }
  return json(text);
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir, const Overrides& overrides) {
  json file;
  try {
    file = json::parse(text.empty() ? std::string("{}") : text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!file.is_object()) throw ConfigError("config must be a JSON object");
  std::set<std::string> from_flags;
  for (const auto& [k, v] : overrides) {
    file[k] = scalar_from_text(k, v);
    from_flags.insert(k);
  }
  RunConfig c;
  auto path_value = [&](const std::string& key, const json& v) {
    std::filesystem::path p = typed<std::string>(v, key);
    if (!from_flags.count(key) && p.is_relative() && !p.empty()) p = base_dir / p;
    return p;
  };
  for (const auto& [key, v] : file.items()) {
    if (key == "scale") c.scale = typed<int>(v, key);
    else if (key == "mode") {
      try {
        c.mode = imaging::parse_mode(typed<std::string>(v, key));
      } catch (const ContractError& e) {
        throw ConfigError(std::string("config key 'mode': ") + e.what());
      }
    }
    else if (key == "seed") c.seed = typed<std::uint64_t>(v, key);
    else if (key == "preset") c.preset = typed<std::string>(v, key);
    else if (key == "stage") c.stage = typed<std::string>(v, key);
    else if (key == "steps") c.steps = typed<int>(v, key);
    else if (key == "stage_steps") {
      if (!v.is_object()) throw ConfigError("config key 'stage_steps' must be an object");
      for (const auto& [s, n] : v.items()) c.stage_steps[s] = typed<int>(n, "stage_steps." + s);
    } else if (key == "batch") c.batch = typed<int>(v, key);
    else if (key == "crop") c.crop = typed<int>(v, key);
    else if (key == "lr") c.lr = typed<double>(v, key);
    else if (key == "steps_per_epoch") c.steps_per_epoch = typed<int>(v, key);
    else if (key == "stage3_head") c.stage3_head = typed<bool>(v, key);
    else if (key == "manifest") c.manifest = path_value(key, v);
    else if (key == "checkpoint") c.checkpoint = path_value(key, v);
    else if (key == "init_checkpoint") c.init_checkpoint = path_value(key, v);
    else if (key == "loss_log") c.loss_log = path_value(key, v);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  if (c.loss_log.empty() && !c.checkpoint.empty()) c.loss_log = c.checkpoint.string() + ".loss.csv";
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path.parent_path(), overrides);
}

}  // namespace gdnet::cli
