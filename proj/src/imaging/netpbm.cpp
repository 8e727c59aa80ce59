#include "gdnet/imaging/netpbm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include "gdnet/core/error.hpp"

namespace gdnet::imaging {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> b) : bytes_(b) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int number(const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) throw ParseError(std::string("netpbm: truncated header before ") + what, pos_);
    if (!std::isdigit(bytes_[pos_])) throw ParseError(std::string("netpbm: expected ") + what, pos_);
    const std::size_t start = pos_;
    long long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000'000) throw ParseError(std::string("netpbm: ") + what + " too large", start);
      ++pos_;
    }
    if (v <= 0) throw ParseError(std::string("netpbm: ") + what + " must be positive", start);
    return static_cast<int>(v);
  }

  std::size_t pos_ = 0;
  std::span<const std::uint8_t> bytes_;
};

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

std::vector<std::uint8_t> header_bytes(const char* magic, int w, int h, int maxval) {
  const std::string s = std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n" +
                        std::to_string(maxval) + "\n";
  return {s.begin(), s.end()};
}

template <typename Out>
void decode_samples(std::span<const std::uint8_t> bytes, const NetpbmHeader& hdr, std::size_t count, Out* out) {
  const std::size_t need = count * static_cast<std::size_t>(hdr.bytes_per_sample());
  if (bytes.size() - hdr.data_offset < need)
    throw ParseError("netpbm: truncated payload, expected " + std::to_string(need) + " bytes", bytes.size());
  const double inv = 1.0 / hdr.maxval;
  const std::uint8_t* p = bytes.data() + hdr.data_offset;
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned v = hdr.bytes_per_sample() == 2 ? (static_cast<unsigned>(p[2 * i]) << 8) | p[2 * i + 1] : p[i];
    if (v > static_cast<unsigned>(hdr.maxval))
      throw ParseError("netpbm: sample exceeds maxval", hdr.data_offset + i * static_cast<std::size_t>(hdr.bytes_per_sample()));
    out[i] = static_cast<float>(v * inv);
  }
}

}  // namespace

NetpbmHeader parse_netpbm_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2) throw ParseError("netpbm: missing magic number", 0);
  if (bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) throw ParseError("netpbm: unsupported magic", 0);
  NetpbmHeader h;
  h.magic = std::string{static_cast<char>(bytes[0]), static_cast<char>(bytes[1])};
  HeaderReader r(bytes);
  r.pos_ = 2;
  if (r.pos_ >= bytes.size() || !(std::isspace(bytes[r.pos_]) || bytes[r.pos_] == '#'))
    throw ParseError("netpbm: expected whitespace after magic", r.pos_);
  h.width = r.number("width");
  h.height = r.number("height");
  h.maxval = r.number("maxval");
  if (h.maxval > 65535) throw ParseError("netpbm: maxval above 65535", r.pos_ - 1);
  if (r.pos_ >= bytes.size() || !std::isspace(bytes[r.pos_]))
    throw ParseError("netpbm: expected single whitespace before payload", r.pos_);
  h.data_offset = r.pos_ + 1;
  return h;
}

ImagePlane decode_pgm(std::span<const std::uint8_t> bytes) {
  const auto hdr = parse_netpbm_header(bytes);
  if (hdr.magic != "P5") throw ParseError("netpbm: expected a P5 graymap, found " + hdr.magic, 0);
  ImagePlane p(hdr.height, hdr.width);
  decode_samples(bytes, hdr, p.data.size(), p.data.data());
  return p;
}

ImageRGB decode_ppm(std::span<const std::uint8_t> bytes) {
  const auto hdr = parse_netpbm_header(bytes);
  if (hdr.magic != "P6") throw ParseError("netpbm: expected a P6 pixmap, found " + hdr.magic, 0);
  ImageRGB img(hdr.height, hdr.width);
  decode_samples(bytes, hdr, img.data.size(), img.data.data());
  return img;
}

std::vector<std::uint8_t> encode_pgm16(const ImagePlane& p) {
  auto out = header_bytes("P5", p.width, p.height, 65535);
  out.reserve(out.size() + p.data.size() * 2);
  for (float v : p.data) {
    const auto q = static_cast<unsigned>(std::lround(std::clamp(v, 0.f, 1.f) * 65535.0));
    out.push_back(static_cast<std::uint8_t>(q >> 8));
    out.push_back(static_cast<std::uint8_t>(q & 0xff));
  }
  return out;
}

std::vector<std::uint8_t> encode_ppm8(const ImageRGB& img) {
  auto out = header_bytes("P6", img.width, img.height, 255);
  out.reserve(out.size() + img.data.size());
  for (float v : img.data) out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.f, 1.f) * 255.0)));
  return out;
}

ImagePlane read_pgm(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  try {
    return decode_pgm(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.reason(), e.offset());
  }
}

ImageRGB read_ppm(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  try {
    return decode_ppm(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.reason(), e.offset());
  }
}

void write_pgm16(const std::filesystem::path& path, const ImagePlane& p) { dump(path, encode_pgm16(p)); }
void write_ppm8(const std::filesystem::path& path, const ImageRGB& img) { dump(path, encode_ppm8(img)); }

float quantize16(float v) {
  return static_cast<float>(static_cast<double>(std::lround(std::clamp(v, 0.f, 1.f) * 65535.0)) * (1.0 / 65535));
}

ImagePlane quantize16(const ImagePlane& p) {
  ImagePlane q = p;
  for (auto& v : q.data) v = quantize16(v);
  return q;
}

float quantize8(float v) {
  return static_cast<float>(static_cast<double>(std::lround(std::clamp(v, 0.f, 1.f) * 255.0)) * (1.0 / 255));
}

ImageRGB quantize8(const ImageRGB& img) {
  ImageRGB q = img;
  for (auto& v : q.data) v = quantize8(v);
  return q;
}

}  // namespace gdnet::imaging
