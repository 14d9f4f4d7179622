#include "ccrseq/plot.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "ccrseq/charset.hpp"
#include "ccrseq/fonts.hpp"
#include "ccrseq/png_io.hpp"
#include "ccrseq/trace.hpp"

namespace ccrseq {
namespace {

struct Rgb {
  std::uint8_t r, g, b;
};

constexpr Rgb kBlack{20, 20, 20};
constexpr Rgb kGrid{220, 220, 220};
constexpr Rgb kPalette[] = {{31, 119, 180}, {214, 39, 40},  {44, 160, 44},
                            {148, 103, 189}, {255, 127, 14}, {23, 190, 207}};
constexpr int kPaletteSize = 6;

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), px_(static_cast<size_t>(w) * h * 3, 255) {}

  void set(int x, int y, Rgb c) {
    if (x < 0 || x >= w_ || y < 0 || y >= h_) return;
    size_t i = (static_cast<size_t>(y) * w_ + x) * 3;
    px_[i] = c.r;
    px_[i + 1] = c.g;
    px_[i + 2] = c.b;
  }

  void line(double x0, double y0, double x1, double y1, Rgb c) {
    const double dx = x1 - x0, dy = y1 - y0;
    const int n = std::max(1, static_cast<int>(std::ceil(std::max(std::abs(dx), std::abs(dy)))));
    for (int i = 0; i <= n; ++i) {
      const double t = static_cast<double>(i) / n;
      const int x = static_cast<int>(std::lround(x0 + t * dx));
      const int y = static_cast<int>(std::lround(y0 + t * dy));
      set(x, y, c);
      set(x + 1, y, c);  // 2px stroke for visibility
    }
  }

  // a-z0-9, space, '.', '-' in the project glyph face; others skipped
  int text(int x, int y, const std::string& s, Rgb c, int scale = 1) {
    const int gw = fonts::glyph_width(0);
    for (char raw : s) {
      char ch = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
      if (ch == ' ') {
        x += (gw - 1) * scale;
        continue;
      }
      if (ch == '.') {
        for (int sy = 0; sy < scale; ++sy)
          for (int sx = 0; sx < scale; ++sx) set(x + sx, y + (fonts::kGlyphH - 1) * scale + sy, c);
        x += 2 * scale + 1;
        continue;
      }
      if (ch == '-') {
        for (int k = 0; k < 3 * scale; ++k)
          for (int sy = 0; sy < scale; ++sy) set(x + k, y + 3 * scale + sy, c);
        x += 4 * scale + 1;
        continue;
      }
      if (charset::index_of(ch) < 0) continue;
      for (int row = 0; row < fonts::kGlyphH; ++row)
        for (int col = 0; col < gw; ++col)
          if (fonts::glyph_pixel(0, ch, row, col))
            for (int sy = 0; sy < scale; ++sy)
              for (int sx = 0; sx < scale; ++sx) set(x + col * scale + sx, y + row * scale + sy, c);
      x += (gw + 1) * scale;
    }
    return x;
  }

  void save(const std::string& path) const { write_png_gray8_rgb(path); }

  int w() const { return w_; }
  int h() const { return h_; }

 private:
  void write_png_gray8_rgb(const std::string& path) const { write_png_rgb8(path, px_, w_, h_); }

  int w_, h_;
  std::vector<std::uint8_t> px_;
};

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

void render_line_chart(const std::string& png_path, const std::string& sidecar_path,
                       const std::string& title, const std::vector<PlotSeries>& series, int width,
                       int height) {
  const int ml = 64, mr = 14, mt = 26, mb = 36;
  Canvas cv(width, height);

  // data range
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool any = false;
  for (const PlotSeries& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!any) {
        x0 = x1 = s.x[i];
        y0 = y1 = s.y[i];
        any = true;
      }
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (x1 - x0 < 1e-12) x1 = x0 + 1;
  if (y1 - y0 < 1e-12) {
    y0 -= 0.05;
    y1 += 0.05;
  } else {
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
  }

  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (width - ml - mr); };
  auto py = [&](double y) { return height - mb - (y - y0) / (y1 - y0) * (height - mt - mb); };

  // grid + ticks
  for (int i = 0; i <= 4; ++i) {
    const double tx = x0 + (x1 - x0) * i / 4.0;
    const double ty = y0 + (y1 - y0) * i / 4.0;
    cv.line(px(tx), mt, px(tx), height - mb, kGrid);
    cv.line(ml, py(ty), width - mr, py(ty), kGrid);
    cv.text(static_cast<int>(px(tx)) - 10, height - mb + 6, fmt_tick(tx), kBlack);
    cv.text(6, static_cast<int>(py(ty)) - 3, fmt_tick(ty), kBlack);
  }
  // axes box
  cv.line(ml, mt, ml, height - mb, kBlack);
  cv.line(ml, height - mb, width - mr, height - mb, kBlack);
  cv.line(width - mr, mt, width - mr, height - mb, kBlack);
  cv.line(ml, mt, width - mr, mt, kBlack);
  cv.text(ml, 8, title, kBlack, 2);

  // series + legend
  int ly = mt + 8;
  for (size_t si = 0; si < series.size(); ++si) {
    const Rgb c = kPalette[si % kPaletteSize];
    const PlotSeries& s = series[si];
    for (size_t i = 1; i < s.x.size(); ++i)
      cv.line(px(s.x[i - 1]), py(s.y[i - 1]), px(s.x[i]), py(s.y[i]), c);
    const int lx = width - mr - 170;
    cv.line(lx, ly + 3, lx + 18, ly + 3, c);
    cv.text(lx + 24, ly, s.label, kBlack);
    ly += 12;
  }

  cv.save(png_path);

  std::ofstream side(sidecar_path, std::ios::binary);
  if (!side) throw std::runtime_error("cannot open plot sidecar: " + sidecar_path);
  side << "#ccr-seq-plot v1\n# figure: " << title << "\n";
  for (const PlotSeries& s : series) {
    side << "# series: " << s.label << " (" << s.x.size() << " points)\n";
    for (size_t i = 0; i < s.x.size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g\t%.17g\n", s.x[i], s.y[i]);
      side << buf;
    }
  }
  if (!side) throw std::runtime_error("plot sidecar write failed: " + sidecar_path);
}

void plot_traces(const std::vector<std::string>& trace_files,
                 const std::vector<std::string>& labels, const std::string& out_prefix) {
  if (trace_files.empty()) throw std::invalid_argument("plot_traces: need at least one trace");
  if (labels.size() != trace_files.size())
    throw std::invalid_argument("plot_traces: one label per trace required");

  std::vector<PlotSeries> acc, uniq;
  for (size_t i = 0; i < trace_files.size(); ++i) {
    std::vector<TraceRecord> trace = read_trace(trace_files[i]);
    PlotSeries clean{labels[i] + " clean", {}, {}};
    PlotSeries pert{labels[i] + " pert", {}, {}};
    PlotSeries u{labels[i], {}, {}};
    for (const TraceRecord& r : trace) {
      clean.x.push_back(static_cast<double>(r.step));
      clean.y.push_back(r.test_clean_acc);
      pert.x.push_back(static_cast<double>(r.step));
      pert.y.push_back(r.test_perturbed_acc);
      u.x.push_back(static_cast<double>(r.step));
      u.y.push_back(r.unique_fraction);
    }
    acc.push_back(std::move(clean));
    acc.push_back(std::move(pert));
    uniq.push_back(std::move(u));
  }
  render_line_chart(out_prefix + "accuracy.png", out_prefix + "accuracy.txt",
                    "test accuracy vs step", acc);
  render_line_chart(out_prefix + "unique_fraction.png", out_prefix + "unique_fraction.txt",
                    "unique prediction fraction vs step", uniq);
}

}  // namespace ccrseq
