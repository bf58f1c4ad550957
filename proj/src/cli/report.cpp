#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "internal.hpp"
#include "kman/io.hpp"

namespace kman::cli {

namespace {

std::optional<double> number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::string series_label(const ResultRow& row) {
  std::string label = row.method;
  if (!row.kernel.empty()) label += " " + row.kernel;
  if (!row.source.empty() && row.source != "kman") label += " [" + row.source + "]";
  return label;
}

const std::string& axis_field(const ResultRow& row, const std::string& axis) {
  if (axis == "r") return row.r;
  if (axis == "m") return row.m;
  if (axis == "lambda") return row.lambda;
  throw Error(ErrorKind::InvalidConfig, "unknown plot axis '" + axis + "'");
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "write failed for '" + path.string() + "'");
}

// Maps data coordinates onto the plot area, in log10 space where requested.
struct Axis {
  double lo = 0.0, hi = 1.0;
  bool log = false;
  double px_lo = 0.0, px_hi = 1.0;

  double map(double v) const {
    const double t = log ? std::log10(v) : v;
    return px_lo + (t - lo) / (hi - lo) * (px_hi - px_lo);
  }

  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      const int a = static_cast<int>(std::ceil(lo - 1e-9)), b = static_cast<int>(std::floor(hi + 1e-9));
      const int step = std::max(1, (b - a) / 8 + 1);
      for (int e = a; e <= b; e += step) out.push_back(std::pow(10.0, e));
    } else {
      for (int k = 0; k <= 5; ++k) out.push_back(lo + (hi - lo) * k / 5.0);
    }
    return out;
  }
};

Axis fit_axis(std::vector<double> values, bool log, double px_lo, double px_hi) {
  Axis a;
  a.log = log;
  a.px_lo = px_lo;
  a.px_hi = px_hi;
  if (log) {
    for (auto& v : values) v = std::log10(v);
  }
  if (values.empty()) return a;
  a.lo = *std::min_element(values.begin(), values.end());
  a.hi = *std::max_element(values.begin(), values.end());
  if (log) {
    a.lo = std::floor(a.lo);
    a.hi = std::ceil(a.hi);
  }
  if (a.hi - a.lo < 1e-12) {
    a.lo -= log ? 1.0 : std::max(1.0, std::abs(a.lo) * 0.1);
    a.hi += log ? 1.0 : std::max(1.0, std::abs(a.hi) * 0.1);
  }
  return a;
}

}  // namespace

Plot error_plot(const std::vector<ResultRow>& rows, const std::string& axis) {
  Plot plot;
  plot.name = "error_vs_" + axis;
  plot.x_label = axis == "lambda" ? "regularization lambda" : axis;
  plot.log_x = axis == "lambda";
  std::string metric;
  std::map<std::string, std::map<double, double>> best;
  for (const auto& row : rows) {
    if (!row.error.empty()) continue;
    const auto x = number(axis_field(row, axis));
    const auto y = number(row.value);
    if (!x || !y) continue;
    if (plot.log_x && *x <= 0.0) continue;
    if (metric.empty()) metric = row.metric;
    auto& s = best[series_label(row)];
    auto it = s.find(*x);
    if (it == s.end() || *y < it->second) s[*x] = *y;
  }
  plot.y_label = metric.empty() ? "error" : metric;
  for (const auto& [label, points] : best) {
    Series s{label, {}};
    for (const auto& [x, y] : points) s.points.emplace_back(x, y);
    plot.series.push_back(std::move(s));
  }
  return plot;
}

Plot singular_value_plot(const Vector& singular_values) {
  Plot plot{"singular_values", "index j", "sigma_j / sigma_1", false, true, {}};
  Series s{"singular values", {}};
  if (singular_values.size() > 0 && singular_values(0) > 0.0) {
    for (Eigen::Index j = 0; j < singular_values.size(); ++j) {
      s.points.emplace_back(static_cast<double>(j + 1), singular_values(j) / singular_values(0));
    }
  }
  plot.series.push_back(std::move(s));
  return plot;
}

std::string render_svg(const Plot& plot) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  const double width = 720, height = 460, left = 80, right = 200, top = 30, bottom = 60;

  std::vector<double> xs, ys;
  for (const auto& s : plot.series) {
    for (const auto& [x, y] : s.points) {
      if ((plot.log_x && x <= 0) || (plot.log_y && y <= 0)) continue;
      xs.push_back(x);
      ys.push_back(y);
    }
  }
  const Axis ax = fit_axis(xs, plot.log_x, left, width - right);
  const Axis ay = fit_axis(ys, plot.log_y, height - bottom, top);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << width - left - right
      << "\" height=\"" << height - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ax.ticks()) {
    const double px = ax.map(t);
    svg << "<line x1=\"" << px << "\" y1=\"" << height - bottom << "\" x2=\"" << px << "\" y2=\""
        << height - bottom + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << px << "\" y=\"" << height - bottom + 18 << "\" text-anchor=\"middle\">"
        << fmt(t) << "</text>\n";
  }
  for (double t : ay.ticks()) {
    const double py = ay.map(t);
    svg << "<line x1=\"" << left - 5 << "\" y1=\"" << py << "\" x2=\"" << left << "\" y2=\"" << py
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << left - 8 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">" << fmt(t)
        << "</text>\n";
  }
  svg << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 15
      << "\" text-anchor=\"middle\">" << escape_xml(plot.x_label) << "</text>\n";
  svg << "<text transform=\"translate(18," << (top + height - bottom) / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape_xml(plot.y_label) << "</text>\n";

  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const char* color = palette[k % std::size(palette)];
    svg << "<polyline class=\"series\" data-label=\"" << escape_xml(s.label)
        << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    std::ostringstream dots;
    bool first = true;
    for (const auto& [x, y] : s.points) {
      if ((plot.log_x && x <= 0) || (plot.log_y && y <= 0)) continue;
      svg << (first ? "" : " ") << ax.map(x) << "," << ay.map(y);
      first = false;
      dots << "<circle cx=\"" << ax.map(x) << "\" cy=\"" << ay.map(y) << "\" r=\"2.5\" fill=\"" << color
           << "\"/>\n";
    }
    svg << "\"/>\n" << dots.str();
    const double ly = top + 14 + 18 * static_cast<double>(k);
    svg << "<line x1=\"" << width - right + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << width - right + 32
        << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << width - right + 38 << "\" y=\"" << ly << "\">" << escape_xml(s.label)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string markdown_table(const std::vector<ResultRow>& rows) {
  std::ostringstream md;
  auto line = [&](const ResultRow& r) {
    md << "| " << r.method << " | " << r.r << " | " << r.m << " | " << r.kernel << " | " << r.epsilon
       << " | " << r.lambda << " | " << r.metric << " | " << r.value << " | " << r.train_time_s << " | "
       << r.source << " | " << r.error << " |\n";
  };
  const std::string header =
      "| method | r | m | kernel | epsilon | lambda | metric | value | train_time_s | source | error |\n"
      "|---|---|---|---|---|---|---|---|---|---|---|\n";

  std::map<std::string, const ResultRow*> best;
  for (const auto& row : rows) {
    const auto v = number(row.value);
    if (!row.error.empty() || !v) continue;
    auto& slot = best[row.method];
    if (!slot || *v < *number(slot->value)) slot = &row;
  }
  md << "## Best configuration per method\n\n" << header;
  for (const auto& [method, row] : best) line(*row);
  md << "\n## All results\n\n" << header;
  for (const auto& row : rows) line(row);
  return md.str();
}

ReportOutput cmd_report(const fs::path& csv, const fs::path& out_dir,
                        const std::optional<fs::path>& manifold_dir) {
  const auto rows = read_rows(csv);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create '" + out_dir.string() + "': " + ec.message());

  ReportOutput out;
  for (const char* axis : {"r", "m", "lambda"}) out.plots.push_back(error_plot(rows, axis));
  if (manifold_dir) {
    const Matrix s = io::read_matrix(*manifold_dir / "singular_values.bin");
    out.plots.push_back(singular_value_plot(s.reshaped()));
  }
  for (const auto& plot : out.plots) {
    const fs::path file = out_dir / (plot.name + ".svg");
    write_text(file, render_svg(plot));
    out.files.push_back(file);
  }
  write_text(out_dir / "results.md", markdown_table(rows));
  out.files.push_back(out_dir / "results.md");
  return out;
}

}  // namespace kman::cli
