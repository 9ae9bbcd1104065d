#include "curious/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "json.hpp"

namespace curious {

namespace fs = std::filesystem;

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                "#bcbd22", "#17becf"};

const char* Color(std::size_t i) {
  return kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
}

std::string Fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Curve {
  std::string label;
  Band band;
};

// One framed plot area with linear axes.
class Panel {
 public:
  Panel(double x, double y, double w, double h, int epochs, double ymin,
        double ymax)
      : x_(x), y_(y), w_(w), h_(h), xmax_(std::max(1, epochs - 1)),
        ymin_(ymin), ymax_(ymax > ymin ? ymax : ymin + 1.0) {}

  double X(double epoch) const { return x_ + w_ * epoch / xmax_; }
  double Y(double v) const {
    const double c = std::clamp(v, ymin_, ymax_);
    return y_ + h_ * (1.0 - (c - ymin_) / (ymax_ - ymin_));
  }

  void Frame(std::ostringstream& svg, const std::string& title) const {
    svg << "<rect x=\"" << Fixed(x_) << "\" y=\"" << Fixed(y_) << "\" width=\""
        << Fixed(w_) << "\" height=\"" << Fixed(h_)
        << "\" fill=\"none\" stroke=\"#333\"/>\n";
    svg << "<text x=\"" << Fixed(x_) << "\" y=\"" << Fixed(y_ - 8)
        << "\" font-size=\"13\">" << Escape(title) << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
      const double v = ymin_ + (ymax_ - ymin_) * k / 4.0;
      svg << "<text x=\"" << Fixed(x_ - 6) << "\" y=\"" << Fixed(Y(v) + 4)
          << "\" font-size=\"10\" text-anchor=\"end\">" << Fixed(v) << "</text>\n";
      svg << "<line x1=\"" << Fixed(x_) << "\" y1=\"" << Fixed(Y(v)) << "\" x2=\""
          << Fixed(x_ + w_) << "\" y2=\"" << Fixed(Y(v))
          << "\" stroke=\"#ddd\"/>\n";
    }
    const int step = std::max(1, static_cast<int>(std::ceil(xmax_ / 4.0)));
    for (int e = 0; e <= static_cast<int>(xmax_); e += step) {
      svg << "<text x=\"" << Fixed(X(e)) << "\" y=\"" << Fixed(y_ + h_ + 14)
          << "\" font-size=\"10\" text-anchor=\"middle\">" << Fixed(e, 0)
          << "</text>\n";
    }
    svg << "<text x=\"" << Fixed(x_ + w_ / 2) << "\" y=\"" << Fixed(y_ + h_ + 28)
        << "\" font-size=\"11\" text-anchor=\"middle\">epoch</text>\n";
  }

  // Band first, then the mean line; NaN points break the line.
  void Draw(std::ostringstream& svg, const Band& band, const char* color) const {
    const std::size_t n = band.mean.size();
    bool has_band = false;
    for (double s : band.std) has_band = has_band || s > 0.0;
    if (has_band) {
      std::ostringstream upper;
      std::ostringstream lower;
      std::vector<std::string> lower_pts;
      for (std::size_t e = 0; e < n; ++e) {
        if (std::isnan(band.mean[e])) continue;
        upper << Fixed(X(e)) << ',' << Fixed(Y(band.mean[e] + band.std[e])) << ' ';
        lower_pts.push_back(Fixed(X(e)) + "," +
                            Fixed(Y(band.mean[e] - band.std[e])));
      }
      std::reverse(lower_pts.begin(), lower_pts.end());
      for (const std::string& p : lower_pts) lower << p << ' ';
      svg << "<polygon points=\"" << upper.str() << lower.str() << "\" fill=\""
          << color << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    }
    std::ostringstream pts;
    auto flush = [&] {
      if (pts.str().empty()) return;
      svg << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\""
          << color << "\" stroke-width=\"1.5\"/>\n";
      pts.str("");
    };
    for (std::size_t e = 0; e < n; ++e) {
      if (std::isnan(band.mean[e])) {
        flush();
        continue;
      }
      pts << Fixed(X(e)) << ',' << Fixed(Y(band.mean[e])) << ' ';
    }
    flush();
  }

  void Legend(std::ostringstream& svg, const std::vector<std::string>& labels) const {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const double y = y_ + 12 + 16 * static_cast<double>(i);
      svg << "<line x1=\"" << Fixed(x_ + w_ + 12) << "\" y1=\"" << Fixed(y - 4)
          << "\" x2=\"" << Fixed(x_ + w_ + 30) << "\" y2=\"" << Fixed(y - 4)
          << "\" stroke=\"" << Color(i) << "\" stroke-width=\"2\"/>\n";
      svg << "<text x=\"" << Fixed(x_ + w_ + 34) << "\" y=\"" << Fixed(y)
          << "\" font-size=\"11\">" << Escape(labels[i]) << "</text>\n";
    }
  }

  double top() const { return y_; }

 private:
  double x_, y_, w_, h_;
  double xmax_;
  double ymin_, ymax_;
};

constexpr double kLeft = 60.0;
constexpr double kPanelWidth = 480.0;
constexpr double kPanelHeight = 200.0;
constexpr double kLegendWidth = 200.0;
constexpr double kPanelGap = 70.0;

std::string Header(double height) {
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
      << Fixed(kLeft + kPanelWidth + kLegendWidth, 0) << "\" height=\""
      << Fixed(height, 0) << "\" font-family=\"sans-serif\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return svg.str();
}

void WriteSvg(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string GroupName(const CellSpec& cell) {
  return std::string(ToString(cell.variant)) + "_d" +
         std::to_string(cell.n_distractors);
}

// Column `module` of every run's [epoch][module] series.
std::vector<std::vector<double>> Column(
    const std::vector<const RunResults*>& runs,
    std::vector<std::vector<double>> RunResults::*series, int module) {
  std::vector<std::vector<double>> out;
  for (const RunResults* r : runs) {
    std::vector<double> column;
    for (const std::vector<double>& row : r->*series) column.push_back(row[module]);
    out.push_back(std::move(column));
  }
  return out;
}

}  // namespace

Band AggregateSeries(const std::vector<std::vector<double>>& series) {
  Band band;
  if (series.empty()) return band;
  std::size_t n = series.front().size();
  for (const auto& s : series) n = std::min(n, s.size());
  for (std::size_t e = 0; e < n; ++e) {
    std::vector<double> values;
    for (const auto& s : series) {
      if (!std::isnan(s[e])) values.push_back(s[e]);
    }
    if (values.empty()) {
      band.mean.push_back(std::nan(""));
      band.std.push_back(0.0);
      continue;
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    band.mean.push_back(mean);
    band.std.push_back(values.size() > 1
                           ? std::sqrt(ss / static_cast<double>(values.size() - 1))
                           : 0.0);
  }
  return band;
}

std::vector<std::string> PlotRuns(const std::vector<RunResults>& runs,
                                  const std::vector<SignificanceRow>& significance,
                                  const std::string& out_dir) {
  if (runs.empty()) throw std::runtime_error("no runs to plot");
  fs::create_directories(out_dir);
  std::map<std::string, std::vector<const RunResults*>> groups;
  for (const RunResults& r : runs) groups[GroupName(r.cell)].push_back(&r);
  std::vector<std::string> written;

  int epochs = 1;
  for (const RunResults& r : runs) epochs = std::max(epochs, r.epochs());

  {
    const double top = 40.0;
    Panel panel(kLeft, top, kPanelWidth, kPanelHeight, epochs, 0.0, 1.0);
    std::ostringstream svg;
    svg << Header(top + kPanelHeight + 60.0);
    panel.Frame(svg, "achievable success rate (mean +- std over seeds)");
    std::vector<std::string> labels;
    std::size_t i = 0;
    for (const auto& [name, members] : groups) {
      std::vector<std::vector<double>> series;
      for (const RunResults* r : members) series.push_back(r->average);
      panel.Draw(svg, AggregateSeries(series), Color(i++));
      labels.push_back(name + " (n=" + std::to_string(members.size()) + ")");
    }
    std::size_t row = 0;
    for (const SignificanceRow& s : significance) {
      if (!s.significant) continue;
      svg << "<circle cx=\"" << Fixed(panel.X(s.epoch)) << "\" cy=\""
          << Fixed(panel.top() + 6 + 6 * static_cast<double>(s.n_distractors % 4))
          << "\" r=\"2\" fill=\"#000\"/>\n";
      ++row;
    }
    if (row > 0) labels.push_back("dots: curious > m-uvfa-random");
    panel.Legend(svg, labels);
    svg << "</svg>\n";
    const fs::path path = fs::path(out_dir) / "success.svg";
    WriteSvg(path, svg.str());
    written.push_back(path.string());
  }

  for (const auto& [name, members] : groups) {
    const std::vector<std::string>& modules = members.front()->modules;
    struct PanelSpec {
      const char* title;
      std::vector<std::vector<double>> RunResults::*series;
      bool symmetric;
    };
    const PanelSpec specs[] = {
        {"success rate per module", &RunResults::success, false},
        {"competence C", &RunResults::competence, false},
        {"learning progress LP", &RunResults::progress, true},
        {"selection probability p_LP", &RunResults::probability, false},
    };
    std::ostringstream svg;
    const double height = 40.0 + 4 * (kPanelHeight + kPanelGap);
    svg << Header(height);
    double top = 40.0;
    for (const PanelSpec& spec : specs) {
      std::vector<Band> bands;
      double lo = 0.0;
      double hi = 1.0;
      for (std::size_t m = 0; m < modules.size(); ++m) {
        bands.push_back(AggregateSeries(
            Column(members, spec.series, static_cast<int>(m))));
        if (spec.symmetric) {
          for (double v : bands.back().mean) {
            if (!std::isnan(v)) hi = std::max(hi, std::abs(v));
          }
        }
      }
      if (spec.symmetric) {
        hi = 0.0;
        for (const Band& b : bands) {
          for (std::size_t e = 0; e < b.mean.size(); ++e) {
            if (!std::isnan(b.mean[e])) {
              hi = std::max(hi, std::abs(b.mean[e]) + b.std[e]);
            }
          }
        }
        hi = std::max(hi, 0.05);
        lo = -hi;
      }
      Panel panel(kLeft, top, kPanelWidth, kPanelHeight, epochs, lo, hi);
      panel.Frame(svg, std::string(spec.title) + " - " + name);
      for (std::size_t m = 0; m < bands.size(); ++m) {
        panel.Draw(svg, bands[m], Color(m));
      }
      panel.Legend(svg, modules);
      top += kPanelHeight + kPanelGap;
    }
    svg << "</svg>\n";
    const fs::path path = fs::path(out_dir) / ("modules_" + name + ".svg");
    WriteSvg(path, svg.str());
    written.push_back(path.string());
  }
  return written;
}

std::vector<std::string> PlotFiles(std::vector<std::string> csv_paths,
                                   const std::string& out_dir) {
  if (csv_paths.empty()) throw std::runtime_error("no result files matched");
  std::sort(csv_paths.begin(), csv_paths.end());
  static const std::regex kName(R"(([a-z-]+)_d(\d+)_s(\d+))");
  std::vector<RunResults> runs;
  for (const std::string& path : csv_paths) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    RunResults r;
    try {
      r = ReadRunCsv(in);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ": " + e.what());
    }
    const fs::path sidecar = fs::path(path).replace_extension(".json");
    std::smatch m;
    const std::string stem = fs::path(path).stem().string();
    if (fs::exists(sidecar)) {
      std::ifstream meta_in(sidecar);
      const nlohmann::json meta = nlohmann::json::parse(meta_in);
      r.cell.variant = ParseVariant(meta.at("variant").get<std::string>());
      r.cell.n_distractors = meta.at("n_distractors").get<int>();
      r.cell.seed = meta.at("seed").get<std::uint64_t>();
    } else if (std::regex_match(stem, m, kName)) {
      r.cell.variant = ParseVariant(m[1]);
      r.cell.n_distractors = std::stoi(m[2]);
      r.cell.seed = std::stoull(m[3]);
    } else {
      throw std::runtime_error(path + ": cannot tell which run this is");
    }
    runs.push_back(std::move(r));
  }

  std::vector<SignificanceRow> significance;
  const fs::path sig_path =
      fs::path(csv_paths.front()).parent_path() / "significance.csv";
  if (fs::exists(sig_path)) {
    std::ifstream in(sig_path);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string f[4];
      for (std::string& field : f) std::getline(ss, field, ',');
      SignificanceRow row;
      row.epoch = std::stoi(f[0]);
      row.n_distractors = std::stoi(f[1]);
      row.p_value = f[2].empty() ? 1.0 : std::stod(f[2]);
      row.significant = f[3] == "1";
      significance.push_back(row);
    }
  }
  return PlotRuns(runs, significance, out_dir);
}

}  // namespace curious
