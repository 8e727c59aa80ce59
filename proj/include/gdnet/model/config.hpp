#pragma once

#include <string>
#include <vector>

#include "gdnet/layers/attention.hpp"

namespace gdnet::model {

struct GDNetConfig {
  int scale = 4;
  int embed_dim = 96;
  int heads = 6;
  int window = 8;
  int rmag_count = 4;
  int stl_per_rmag = 6;
  int nc_mgl = 2;
  int li_mgl = 6;
  int fo_gal = 4;
  /// Conv + LeakyReLU sets in the optical backbone; 0 picks 4 for x4 and 6
  /// for x8.
  int backbone_k = 0;
  double overlap_ratio = 0.5;
  int upsample_mid_channels = 32;
  /// Second "+ M" skip in the modality-guided layers.
  bool mgl_double_residual = true;

  int backbone_sets() const;
  /// Stride per backbone conv: 2,1,2,1,... until the product reaches scale.
  std::vector<int> backbone_strides() const;
  layers::AttentionConfig attention() const;
  void validate() const;
};

/// Full-size settings: 96 channels, window 8, 6 heads, 4 RMAGs of 6 STLs.
GDNetConfig paper_preset(int scale);
/// Desk-scale settings: 1 RMAG, 2 STLs, 32 channels, 4 heads.
GDNetConfig tiny_preset(int scale);
GDNetConfig preset(const std::string& name, int scale);

/// Compact JSON echo of every field; parsing rejects unknown keys and type
/// mismatches with ConfigError and validates the result.
std::string config_to_json(const GDNetConfig& c);
GDNetConfig config_from_json(const std::string& text);

}  // namespace gdnet::model
