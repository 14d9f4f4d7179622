#include "ccrseq/png_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ccrseq {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uLong crc =
      crc32(0L, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

std::vector<std::uint8_t> deflate_bytes(const std::vector<std::uint8_t>& raw) {
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> out(bound);
  if (compress2(out.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw std::runtime_error("zlib compress failed");
  out.resize(bound);
  return out;
}

std::vector<std::uint8_t> encode_png(const std::vector<std::uint8_t>& pixels, int width,
                                     int height, int channels) {
  if (width <= 0 || height <= 0 ||
      pixels.size() != static_cast<size_t>(width) * height * channels)
    throw std::invalid_argument("png encode: pixel buffer does not match dimensions");

  // filter byte 0 per scanline
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<size_t>(height) * (1 + static_cast<size_t>(width) * channels));
  const size_t stride = static_cast<size_t>(width) * channels;
  for (int r = 0; r < height; ++r) {
    raw.push_back(0);
    raw.insert(raw.end(), pixels.begin() + static_cast<size_t>(r) * stride,
               pixels.begin() + static_cast<size_t>(r + 1) * stride);
  }

  std::vector<std::uint8_t> png = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(width));
  put_u32(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);                                      // bit depth
  ihdr.push_back(channels == 1 ? 0 : 2);                  // gray or rgb
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  append_chunk(png, "IHDR", ihdr);
  append_chunk(png, "IDAT", deflate_bytes(raw));
  append_chunk(png, "IEND", {});
  return png;
}

}  // namespace

std::vector<std::uint8_t> encode_png_gray8(const std::vector<std::uint8_t>& pixels,
                                           int width, int height) {
  return encode_png(pixels, width, height, 1);
}

std::vector<std::uint8_t> encode_png_rgb8(const std::vector<std::uint8_t>& pixels,
                                          int width, int height) {
  return encode_png(pixels, width, height, 3);
}

void write_png_gray8(const std::filesystem::path& path,
                     const std::vector<std::uint8_t>& pixels, int width, int height) {
  write_file_bytes(path, encode_png_gray8(pixels, width, height));
}

void write_png_rgb8(const std::filesystem::path& path,
                    const std::vector<std::uint8_t>& pixels, int width, int height) {
  write_file_bytes(path, encode_png_rgb8(pixels, width, height));
}

Gray8Image decode_png_gray8(const std::vector<std::uint8_t>& bytes) {
  static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
    throw std::runtime_error("not a PNG file");

  Gray8Image img;
  std::vector<std::uint8_t> idat;
  size_t pos = 8;
  bool saw_ihdr = false;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t len = get_u32(bytes.data() + pos);
    if (pos + 12 + len > bytes.size()) throw std::runtime_error("truncated PNG chunk");
    const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
    const std::uint8_t* data = bytes.data() + pos + 8;
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw std::runtime_error("bad IHDR");
      img.width = static_cast<int>(get_u32(data));
      img.height = static_cast<int>(get_u32(data + 4));
      if (data[8] != 8 || data[9] != 0)
        throw std::runtime_error("unsupported PNG format (need 8-bit grayscale)");
      if (data[12] != 0) throw std::runtime_error("interlaced PNG unsupported");
      saw_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), data, data + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    pos += 12 + len;
  }
  if (!saw_ihdr || img.width <= 0 || img.height <= 0)
    throw std::runtime_error("malformed PNG");

  const size_t stride = static_cast<size_t>(img.width);
  uLongf raw_len = static_cast<uLongf>((stride + 1) * img.height);
  std::vector<std::uint8_t> raw(raw_len);
  if (uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
      raw_len != (stride + 1) * static_cast<size_t>(img.height))
    throw std::runtime_error("PNG inflate failed");

  img.pixels.resize(stride * img.height);
  for (int r = 0; r < img.height; ++r) {
    const std::uint8_t* line = raw.data() + static_cast<size_t>(r) * (stride + 1);
    if (line[0] != 0)
      throw std::runtime_error("unsupported PNG scanline filter");
    std::memcpy(img.pixels.data() + static_cast<size_t>(r) * stride, line + 1, stride);
  }
  return img;
}

Gray8Image read_png_gray8(const std::filesystem::path& path) {
  return decode_png_gray8(read_file_bytes(path));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace ccrseq
