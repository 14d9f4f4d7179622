#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace ccrseq {

// Minimal PNG codec for the formats this project emits: 8-bit grayscale
// dataset images and 8-bit RGB figures. DEFLATE/CRC32 come from zlib.

std::vector<std::uint8_t> encode_png_gray8(const std::vector<std::uint8_t>& pixels,
                                           int width, int height);
std::vector<std::uint8_t> encode_png_rgb8(const std::vector<std::uint8_t>& pixels,
                                          int width, int height);

void write_png_gray8(const std::filesystem::path& path,
                     const std::vector<std::uint8_t>& pixels, int width, int height);
void write_png_rgb8(const std::filesystem::path& path,
                    const std::vector<std::uint8_t>& pixels, int width, int height);

struct Gray8Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

Gray8Image decode_png_gray8(const std::vector<std::uint8_t>& bytes);
Gray8Image read_png_gray8(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& bytes);

}  // namespace ccrseq
