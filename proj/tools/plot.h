#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace moba::cli {

// A header-keyed numeric CSV (or TSV, detected from the header). Non-numeric
// cells read as NaN.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  static Table read(const std::filesystem::path& path);
  int column(const std::string& name) const;  // -1 when absent
  std::vector<double> values(const std::string& name) const;
};

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

std::string render_svg(const Chart& chart, int width = 720, int height = 420);
// Tab-separated "series x y" lines; the compared artifact in tests.
std::string series_tsv(const Chart& chart);

// Trailing mean over `window` points.
std::vector<double> running_mean(const std::vector<double>& v, size_t window);

// Builds every chart that the run directory has data for: Elo vs hours
// (probes.csv), reward per camp vs hours (episodes_*.csv) and per-head clip
// fraction (metrics.csv). Writes <name>.svg and <name>.tsv; returns the names.
// Throws ConfigError when no metrics are found or they hold no rows.
std::vector<std::string> plot_run(const std::filesystem::path& run_dir, const std::filesystem::path& out_dir);

}  // namespace moba::cli
