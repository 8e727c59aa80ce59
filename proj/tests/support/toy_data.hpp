#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gdnet/imaging/degrade.hpp"
#include "gdnet/train/stage.hpp"

namespace gdnet::testing {

/// In-memory dataset of toy pairs with a loader that records every read.
struct ToyDataset {
  imaging::DatasetManifest manifest;
  std::map<std::string, train::Sample> samples;
  std::shared_ptr<std::vector<std::string>> reads = std::make_shared<std::vector<std::string>>();

  train::SampleLoader loader() const {
    return [this](const imaging::ManifestRecord& rec) {
      reads->push_back(rec.id());
      return samples.at(rec.id());
    };
  }
};

/// `per_attr[i]` pairs of attribute i (normal, lowlight, fog) at hr x hr,
/// optical degraded per attribute.
inline ToyDataset make_toy_dataset(std::vector<int> per_attr, int hr, int scale, std::uint64_t seed,
                                   imaging::DegradeMode mode = imaging::DegradeMode::BI) {
  const imaging::Attribute attrs[3] = {imaging::Attribute::Normal, imaging::Attribute::LowLight,
                                       imaging::Attribute::Fog};
  ToyDataset ds;
  int k = 0;
  for (int a = 0; a < 3; ++a)
    for (int i = 0; i < per_attr[static_cast<std::size_t>(a)]; ++i, ++k) {
      imaging::ManifestRecord rec;
      rec.thermal = "toy_" + std::to_string(k) + ".pgm";
      rec.optical = "toy_" + std::to_string(k) + ".ppm";
      rec.attr = attrs[a];
      rec.mode = mode;
      rec.scale = scale;
      rec.seed = seed * 1000 + static_cast<std::uint64_t>(k);
      core::SeededRng prng(rec.seed);
      auto pair = imaging::generate_toy_pair(prng, hr, hr);
      auto optical = imaging::degrade_optical(pair.optical, rec.attr, prng);
      ds.samples.emplace(rec.id(), train::make_sample(rec, pair.thermal, optical));
      ds.manifest.records.push_back(rec);
    }
  return ds;
}

}  // namespace gdnet::testing
