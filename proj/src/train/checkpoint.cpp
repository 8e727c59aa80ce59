#include "gdnet/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "gdnet/core/error.hpp"

namespace gdnet::train {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

class Writer {
 public:
  template <typename V>
  void put(V v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof(V));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const char*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }
  std::vector<char> bytes;
};

class Reader {
 public:
  explicit Reader(const std::vector<char>& b) : bytes_(b) {}
  template <typename V>
  V get(const char* what) {
    V v;
    take(&v, sizeof(V), what);
    return v;
  }
  void take(void* dst, std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n)
      throw ParseError(std::string("checkpoint truncated while reading ") + what, pos_);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<char> encode_checkpoint(const Checkpoint& ck) {
  Writer w;
  w.put_bytes(kCheckpointMagic, 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ck.config_json.size()));
  w.put_bytes(ck.config_json.data(), ck.config_json.size());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ck.records.size()));
  for (const auto& r : ck.records) {
    if (static_cast<std::int64_t>(r.values.size()) != core::numel_of(r.shape))
      throw ContractError("checkpoint record '" + r.name + "' payload does not match its shape");
    w.put<std::uint32_t>(static_cast<std::uint32_t>(r.name.size()));
    w.put_bytes(r.name.data(), r.name.size());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(r.shape.size()));
    for (auto d : r.shape) w.put<std::uint64_t>(static_cast<std::uint64_t>(d));
    w.put_bytes(r.values.data(), r.values.size() * sizeof(float));
  }
  return std::move(w.bytes);
}

Checkpoint decode_checkpoint(const std::vector<char>& bytes) {
  Reader r(bytes);
  char magic[4];
  r.take(magic, 4, "magic");
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw ParseError("not a checkpoint (bad magic)", 0);
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion)
    throw ParseError("unsupported checkpoint version " + std::to_string(version), 4);
  Checkpoint ck;
  const auto clen = r.get<std::uint32_t>("config length");
  ck.config_json.resize(clen);
  r.take(ck.config_json.data(), clen, "config");
  const auto count = r.get<std::uint32_t>("record count");
  std::set<std::string> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t start = r.pos();
    CheckpointRecord rec;
    rec.name.resize(r.get<std::uint32_t>("name length"));
    r.take(rec.name.data(), rec.name.size(), "name");
    if (!seen.insert(rec.name).second) throw ParseError("duplicate checkpoint record '" + rec.name + "'", start);
    const auto rank = r.get<std::uint32_t>("rank");
    if (rank > 8) throw ParseError("implausible rank " + std::to_string(rank) + " for '" + rec.name + "'", start);
    std::uint64_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const auto d = r.get<std::uint64_t>("dims");
      rec.shape.push_back(static_cast<std::int64_t>(d));
      n *= d;
    }
    if (n > r.remaining() / sizeof(float))
      throw ParseError("checkpoint truncated in payload of '" + rec.name + "'", r.pos());
    rec.values.resize(static_cast<std::size_t>(n));
    r.take(rec.values.data(), rec.values.size() * sizeof(float), "payload");
    ck.records.push_back(std::move(rec));
  }
  if (r.remaining() != 0) throw ParseError("trailing bytes after the last checkpoint record", r.pos());
  return ck;
}

template <typename T>
Checkpoint snapshot(const core::ParameterStore<T>& store, const std::string& config_json) {
  Checkpoint ck;
  ck.config_json = config_json;
  for (const auto* p : store.all()) {
    const auto d = p->value.data();
    ck.records.push_back({p->name, p->shape(), std::vector<float>(d.begin(), d.end())});
  }
  return ck;
}

template <typename T>
std::size_t restore(const Checkpoint& ck, core::ParameterStore<T>& store, const std::string& prefix) {
  // offsets are recomputed so errors point into the encoded file
  std::size_t offset = 4 + 4 + 4 + ck.config_json.size() + 4;
  std::set<std::string> restored;
  std::vector<std::pair<core::Parameter<T>*, const CheckpointRecord*>> plan;
  for (const auto& rec : ck.records) {
    const std::size_t at = offset;
    offset += 4 + rec.name.size() + 4 + 8 * rec.shape.size() + 4 * rec.values.size();
    auto* p = store.find(rec.name);
    if (!p) throw ParseError("checkpoint parameter '" + rec.name + "' does not exist in the model", at);
    if (rec.name.compare(0, prefix.size(), prefix) != 0) continue;
    if (p->shape() != rec.shape)
      throw ParseError("checkpoint parameter '" + rec.name + "' has shape " + core::shape_str(rec.shape) +
                           ", model expects " + core::shape_str(p->shape()),
                       at);
    plan.emplace_back(p, &rec);
    restored.insert(rec.name);
  }
  for (const auto* p : store.all())
    if (p->name.compare(0, prefix.size(), prefix) == 0 && !restored.count(p->name))
      throw ParseError("checkpoint is missing parameter '" + p->name + "'", offset);
  for (auto& [p, rec] : plan) {
    auto dst = p->value.mutable_data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(rec->values[i]);
  }
  return plan.size();
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const auto bytes = encode_checkpoint(ck);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write checkpoint " + path.string());
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.reason(), e.offset());
  }
}

template Checkpoint snapshot(const core::ParameterStore<float>&, const std::string&);
template Checkpoint snapshot(const core::ParameterStore<double>&, const std::string&);
template std::size_t restore(const Checkpoint&, core::ParameterStore<float>&, const std::string&);
template std::size_t restore(const Checkpoint&, core::ParameterStore<double>&, const std::string&);

}  // namespace gdnet::train
