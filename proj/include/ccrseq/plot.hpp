#pragma once

// Self-contained raster line charts for training traces. Every figure gets a
// plain-text sidecar with the exact plotted numbers, so tests and tooling
// never have to diff pixels.

#include <string>
#include <vector>

namespace ccrseq {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
};

void render_line_chart(const std::string& png_path, const std::string& sidecar_path,
                       const std::string& title, const std::vector<PlotSeries>& series,
                       int width = 900, int height = 540);

// Emits <out_prefix>accuracy.{png,txt} (test_clean + test_perturbed per
// trace) and <out_prefix>unique_fraction.{png,txt}. Labels pair with traces.
void plot_traces(const std::vector<std::string>& trace_files,
                 const std::vector<std::string>& labels, const std::string& out_prefix);

}  // namespace ccrseq
