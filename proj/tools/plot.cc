#include "plot.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "moba/common/error.h"
#include "moba/net/network.h"

namespace moba::cli {

namespace fs = std::filesystem;

Table Table::read(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("plot", "cannot open " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) return t;
  const char sep = line.find('\t') != std::string::npos ? '\t' : ',';
  std::stringstream hs(line);
  for (std::string c; std::getline(hs, c, sep);) t.columns.push_back(c);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, sep);) {
      char* end = nullptr;
      double v = std::strtod(c.c_str(), &end);
      row.push_back(end != c.c_str() && *end == '\0' ? v : std::numeric_limits<double>::quiet_NaN());
    }
    row.resize(t.columns.size(), std::numeric_limits<double>::quiet_NaN());
    t.rows.push_back(std::move(row));
  }
  return t;
}

int Table::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
}

std::vector<double> Table::values(const std::string& name) const {
  int c = column(name);
  if (c < 0) throw ConfigError("plot", "missing column " + name);
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

std::vector<double> running_mean(const std::vector<double>& v, size_t window) {
  std::vector<double> out;
  double sum = 0;
  for (size_t i = 0; i < v.size(); ++i) {
    sum += v[i];
    if (i >= window) sum -= v[i - window];
    out.push_back(sum / static_cast<double>(std::min(i + 1, window)));
  }
  return out;
}

std::string render_svg(const Chart& chart, int width, int height) {
  const double ml = 70, mr = 150, mt = 40, mb = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : chart.series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]), x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]), y1 = std::max(y1, s.y[i]);
    }
  if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x1 = x0 + 1;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return mt + (1 - (y - y0) / (y1 - y0)) * ph; };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

  std::ostringstream o;
  o.precision(6);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << chart.title
    << "</text>\n"
    << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double fx = x0 + (x1 - x0) * i / 4, fy = y0 + (y1 - y0) * i / 4;
    o << "<text x=\"" << px(fx) << "\" y=\"" << mt + ph + 16 << "\" text-anchor=\"middle\">" << fx << "</text>\n"
      << "<text x=\"" << ml - 6 << "\" y=\"" << py(fy) + 4 << "\" text-anchor=\"end\">" << fy << "</text>\n";
  }
  o << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">" << chart.x_label
    << "</text>\n"
    << "<text transform=\"translate(16," << mt + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << chart.y_label << "</text>\n";
  for (size_t k = 0; k < chart.series.size(); ++k) {
    const Series& s = chart.series[k];
    const char* color = colors[k % std::size(colors)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) o << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    o << "\"/>\n"
      << "<text x=\"" << ml + pw + 10 << "\" y=\"" << mt + 14 + 16 * k << "\" fill=\"" << color << "\">" << s.name
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string series_tsv(const Chart& chart) {
  std::ostringstream o;
  o.precision(10);
  o << "series\t" << chart.x_label << '\t' << chart.y_label << '\n';
  for (const auto& s : chart.series)
    for (size_t i = 0; i < s.x.size(); ++i) o << s.name << '\t' << s.x[i] << '\t' << s.y[i] << '\n';
  return o.str();
}

namespace {

std::vector<double> hours(const std::vector<double>& seconds) {
  std::vector<double> h;
  for (double s : seconds) h.push_back(s / 3600.0);
  return h;
}

void emit(const fs::path& dir, const std::string& name, const Chart& c, std::vector<std::string>& names) {
  std::ofstream(dir / (name + ".svg")) << render_svg(c);
  std::ofstream(dir / (name + ".tsv")) << series_tsv(c);
  names.push_back(name);
}

}  // namespace

std::vector<std::string> plot_run(const fs::path& run_dir, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<std::string> names;
  const fs::path metrics_path = run_dir / "metrics.csv";
  if (!fs::exists(metrics_path)) throw ConfigError("plot", "no metrics.csv in " + run_dir.string());
  Table metrics = Table::read(metrics_path);
  if (metrics.rows.empty()) throw ConfigError("plot", "metrics.csv has no rows");

  Chart clip{"Clip fraction per head", "training time (hours)", "clip fraction", {}};
  std::vector<double> t = hours(metrics.values("wall_s"));
  for (int k = 0; k < net::kNumHeads; ++k) {
    std::string col = std::string("clip_") + net::head_name(k);
    if (metrics.column(col) >= 0) clip.series.push_back({net::head_name(k), t, metrics.values(col)});
  }
  emit(out_dir, "clip_fraction", clip, names);

  if (fs::exists(run_dir / "probes.csv")) {
    Table probes = Table::read(run_dir / "probes.csv");
    if (!probes.rows.empty()) {
      Chart elo{"Elo vs scripted bot during training", "training time (hours)", "Elo", {}};
      elo.series.push_back({"model", hours(probes.values("wall_s")), probes.values("elo_vs_scripted")});
      emit(out_dir, "elo", elo, names);
    }
  }

  // Per-camp reward, pooled over every actor's episode log and ordered by time.
  std::vector<std::array<double, 3>> eps;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    std::string fn = entry.path().filename().string();
    if (fn.rfind("episodes", 0) != 0 || entry.path().extension() != ".csv") continue;
    Table e = Table::read(entry.path());
    if (e.rows.empty()) continue;
    auto w = e.values("wall_s"), r0 = e.values("reward_0"), r1 = e.values("reward_1");
    for (size_t i = 0; i < w.size(); ++i) eps.push_back({w[i], r0[i], r1[i]});
  }
  if (!eps.empty()) {
    std::sort(eps.begin(), eps.end());
    std::vector<double> w, r0, r1;
    for (auto& e : eps) w.push_back(e[0]), r0.push_back(e[1]), r1.push_back(e[2]);
    const size_t window = std::max<size_t>(1, eps.size() / 50);
    Chart reward{"Episode reward per camp", "training time (hours)", "reward (running mean)", {}};
    reward.series.push_back({"camp1", hours(w), running_mean(r0, window)});
    reward.series.push_back({"camp2", hours(w), running_mean(r1, window)});
    emit(out_dir, "reward", reward, names);
  }
  return names;
}

}  // namespace moba::cli
