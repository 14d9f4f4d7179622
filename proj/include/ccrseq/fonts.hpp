#pragma once

#include <cstdint>

namespace ccrseq {
namespace fonts {

inline constexpr int kGlyphH = 7;
inline constexpr int kStyleCount = 3;  // plain, bold, slanted

// Widest style (slanted) needs 7 columns.
int glyph_width(int style);
// Pixel of glyph `c` (charset member) in the given style; (0,0) is top-left.
bool glyph_pixel(int style, char c, int row, int col);

}  // namespace fonts
}  // namespace ccrseq
