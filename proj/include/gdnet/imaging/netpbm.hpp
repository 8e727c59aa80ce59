#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gdnet/imaging/image.hpp"

namespace gdnet::imaging {

struct NetpbmHeader {
  std::string magic;  // "P5" or "P6"
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;

  int bytes_per_sample() const { return maxval > 255 ? 2 : 1; }
};

/// Parses a binary NetPBM header. Throws ParseError carrying the byte offset
/// of the first offending byte.
NetpbmHeader parse_netpbm_header(std::span<const std::uint8_t> bytes);

/// Decodes a P5 buffer into [0,1] by dividing by maxval. A P6 buffer is a
/// format mismatch.
ImagePlane decode_pgm(std::span<const std::uint8_t> bytes);
ImageRGB decode_ppm(std::span<const std::uint8_t> bytes);

/// 16-bit big-endian P5, maxval 65535.
std::vector<std::uint8_t> encode_pgm16(const ImagePlane& p);
/// 8-bit P6, maxval 255.
std::vector<std::uint8_t> encode_ppm8(const ImageRGB& img);

ImagePlane read_pgm(const std::filesystem::path& path);
ImageRGB read_ppm(const std::filesystem::path& path);
void write_pgm16(const std::filesystem::path& path, const ImagePlane& p);
void write_ppm8(const std::filesystem::path& path, const ImageRGB& img);

/// Value after a 16-bit write/read round trip.
float quantize16(float v);
ImagePlane quantize16(const ImagePlane& p);
/// Value after an 8-bit write/read round trip.
float quantize8(float v);
ImageRGB quantize8(const ImageRGB& img);

}  // namespace gdnet::imaging
