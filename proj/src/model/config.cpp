#include "gdnet/model/config.hpp"

#include <type_traits>

#include "gdnet/core/error.hpp"
#include "json.hpp"

namespace gdnet::model {

int GDNetConfig::backbone_sets() const {
  if (backbone_k > 0) return backbone_k;
  return scale == 8 ? 6 : 4;
}

std::vector<int> GDNetConfig::backbone_strides() const {
  std::vector<int> s;
  int product = 1;
  for (int i = 0; i < backbone_sets(); ++i) {
    const bool down = i % 2 == 0 && product < scale;
    s.push_back(down ? 2 : 1);
    product *= s.back();
  }
  return s;
}

layers::AttentionConfig GDNetConfig::attention() const {
  layers::AttentionConfig a;
  a.embed_dim = embed_dim;
  a.heads = heads;
  a.window = window;
  a.overlap_ratio = overlap_ratio;
  return a;
}

void GDNetConfig::validate() const {
  if (scale != 4 && scale != 8) throw ConfigError("scale must be 4 or 8, got " + std::to_string(scale));
  for (auto [name, v] : {std::pair{"rmag_count", rmag_count}, std::pair{"stl_per_rmag", stl_per_rmag},
                         std::pair{"nc_mgl", nc_mgl}, std::pair{"li_mgl", li_mgl}, std::pair{"fo_gal", fo_gal},
                         std::pair{"upsample_mid_channels", upsample_mid_channels}})
    if (v <= 0) throw ConfigError(std::string(name) + " must be positive");
  int product = 1;
  for (int s : backbone_strides()) product *= s;
  if (product != scale)
    throw ConfigError("backbone of " + std::to_string(backbone_sets()) + " sets reaches stride " +
                      std::to_string(product) + ", not the scale " + std::to_string(scale));
  try {
    attention().validate();
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
}

GDNetConfig paper_preset(int scale) {
  GDNetConfig c;
  c.scale = scale;
  c.validate();
  return c;
}

GDNetConfig tiny_preset(int scale) {
  GDNetConfig c;
  c.scale = scale;
  c.rmag_count = 1;
  c.stl_per_rmag = 2;
  c.embed_dim = 32;
  c.heads = 4;
  c.validate();
  return c;
}

GDNetConfig preset(const std::string& name, int scale) {
  if (name == "paper") return paper_preset(scale);
  if (name == "tiny") return tiny_preset(scale);
  throw ConfigError("unknown preset '" + name + "' (expected paper or tiny)");
}

namespace {

template <typename F>
void for_each_field(GDNetConfig& c, F&& f) {
  f("scale", c.scale);
  f("embed_dim", c.embed_dim);
  f("heads", c.heads);
  f("window", c.window);
  f("rmag_count", c.rmag_count);
  f("stl_per_rmag", c.stl_per_rmag);
  f("nc_mgl", c.nc_mgl);
  f("li_mgl", c.li_mgl);
  f("fo_gal", c.fo_gal);
  f("backbone_k", c.backbone_k);
  f("overlap_ratio", c.overlap_ratio);
  f("upsample_mid_channels", c.upsample_mid_channels);
  f("mgl_double_residual", c.mgl_double_residual);
}

}  // namespace

std::string config_to_json(const GDNetConfig& c) {
  nlohmann::ordered_json j;
  GDNetConfig copy = c;
  for_each_field(copy, [&](const char* key, auto& v) { j[key] = v; });
  return j.dump();
}

GDNetConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  GDNetConfig c;
  std::size_t seen = 0;
  for_each_field(c, [&](const char* key, auto& v) {
    using V = std::decay_t<decltype(v)>;
    auto it = j.find(key);
    if (it == j.end()) return;
    ++seen;
    const bool ok = std::is_same_v<V, bool> ? it->is_boolean()
                    : std::is_integral_v<V> ? it->is_number_integer()
                                            : it->is_number();
    if (!ok) throw ConfigError(std::string("model config key '") + key + "' has the wrong type");
    v = it->template get<V>();
  });
  if (seen != j.size()) {
    GDNetConfig probe;
    for (const auto& [key, _] : j.items()) {
      bool known = false;
      for_each_field(probe, [&](const char* k, auto&) { known = known || key == k; });
      if (!known) throw ConfigError("model config: unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

}  // namespace gdnet::model
