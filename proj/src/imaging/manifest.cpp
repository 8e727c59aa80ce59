#include "gdnet/imaging/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "gdnet/core/error.hpp"
#include "json.hpp"

namespace gdnet::imaging {

using nlohmann::json;

std::string ManifestRecord::id() const { return std::filesystem::path(thermal).stem().string(); }

std::filesystem::path DatasetManifest::resolve(const std::string& p) const {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

std::vector<ManifestRecord> DatasetManifest::with_attr(Attribute a) const {
  std::vector<ManifestRecord> out;
  for (const auto& r : records)
    if (r.attr == a) out.push_back(r);
  return out;
}

namespace {

const std::set<std::string> kKeys = {"optical", "thermal", "attr", "mode", "scale", "seed"};

ManifestRecord parse_record(const std::string& line, std::size_t offset) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("manifest: invalid JSON: ") + e.what(), offset + (e.byte > 0 ? e.byte - 1 : 0));
  }
  if (!j.is_object()) throw ParseError("manifest: record must be a JSON object", offset);
  for (const auto& [k, v] : j.items())
    if (!kKeys.count(k)) throw ParseError("manifest: unknown key '" + k + "'", offset);
  for (const auto& k : kKeys)
    if (!j.contains(k)) throw ParseError("manifest: missing key '" + k + "'", offset);
  ManifestRecord r;
  try {
    r.optical = j.at("optical").get<std::string>();
    r.thermal = j.at("thermal").get<std::string>();
    r.attr = parse_attribute(j.at("attr").get<std::string>());
    r.mode = parse_mode(j.at("mode").get<std::string>());
    r.scale = j.at("scale").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest: bad field type: ") + e.what(), offset);
  } catch (const ContractError& e) {
    throw ParseError(std::string("manifest: ") + e.what(), offset);
  }
  if (r.scale != 4 && r.scale != 8) throw ParseError("manifest: scale must be 4 or 8", offset);
  return r;
}

}  // namespace

DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
  DatasetManifest m;
  m.base_dir = base_dir;
  std::set<std::uint64_t> seeds;
  std::size_t offset = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t here = offset;
    offset += line.size() + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto r = parse_record(line, here);
    if (!seeds.insert(r.seed).second) throw ParseError("manifest: duplicate seed " + std::to_string(r.seed), here);
    m.records.push_back(std::move(r));
  }
  return m;
}

DatasetManifest read_manifest(const std::filesystem::path& path, bool check_files) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  DatasetManifest m = parse_manifest(ss.str(), path.parent_path());
  if (check_files)
    for (const auto& r : m.records)
      for (const auto& p : {r.optical, r.thermal})
        if (!std::filesystem::exists(m.resolve(p))) throw IoError("manifest references missing file " + p);
  return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  for (const auto& r : m.records) {
    json j = {{"optical", r.optical}, {"thermal", r.thermal}, {"attr", to_string(r.attr)},
              {"mode", to_string(r.mode)}, {"scale", r.scale}, {"seed", r.seed}};
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace gdnet::imaging
