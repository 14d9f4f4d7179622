#include "ccrseq/fonts.hpp"

#include <stdexcept>

#include "ccrseq/charset.hpp"

namespace ccrseq {
namespace fonts {
namespace {

// 5x7 base glyphs, one byte per row, bit 4 = leftmost column.
// Letters use upper-case shapes; the charset is case-insensitive anyway.
constexpr uint8_t kBase[charset::kNumChars][kGlyphH] = {
    {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},  // a
    {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},  // b
    {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E},  // c
    {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C},  // d
    {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F},  // e
    {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},  // f
    {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F},  // g
    {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},  // h
    {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E},  // i
    {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},  // j
    {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11},  // k
    {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},  // l
    {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11},  // m
    {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11},  // n
    {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E},  // o
    {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},  // p
    {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D},  // q
    {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},  // r
    {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E},  // s
    {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},  // t
    {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E},  // u
    {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},  // v
    {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A},  // w
    {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},  // x
    {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04},  // y
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F},  // z
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
    {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
    {0x0E, 0x11, 0x01, 0x06, 0x08, 0x10, 0x1F},  // 2
    {0x1F, 0x01, 0x02, 0x06, 0x01, 0x11, 0x0E},  // 3
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
    {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
    {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
};

// Slant style: larger left-shift on lower rows, so the glyph leans right.
constexpr int kSlantShift[kGlyphH] = {0, 0, 0, 1, 1, 1, 2};

uint16_t styled_row(int style, int glyph, int row) {
  uint16_t base = kBase[glyph][row];
  switch (style) {
    case 0:
      return base;
    case 1:  // bold: smear one pixel to the right
      return static_cast<uint16_t>((base << 1) | base);
    case 2:  // slanted: see kSlantShift
      return static_cast<uint16_t>(base << kSlantShift[row]);
    default:
      throw std::out_of_range("font style out of range");
  }
}

}  // namespace

int glyph_width(int style) {
  switch (style) {
    case 0:
      return 5;
    case 1:
      return 6;
    case 2:
      return 7;
    default:
      throw std::out_of_range("font style out of range");
  }
}

bool glyph_pixel(int style, char c, int row, int col) {
  int glyph = charset::index_of(c);
  if (glyph < 0 || glyph >= charset::kNumChars)
    throw std::invalid_argument("glyph_pixel: character not in charset");
  if (row < 0 || row >= kGlyphH || col < 0 || col >= glyph_width(style)) return false;
  int w = glyph_width(style);
  // Row bits are left-aligned at the style width; bit (w-1-col) selects the column.
  return (styled_row(style, glyph, row) >> (w - 1 - col)) & 1;
}

}  // namespace fonts
}  // namespace ccrseq
