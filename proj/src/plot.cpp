#include "bierl/plot.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "bierl/errors.hpp"
#include "bierl/harness.hpp"

namespace bierl {

namespace {

std::string group_of(const std::string& path) {
  const std::string stem = std::filesystem::path(path).stem().string();
  const auto pos = stem.rfind("_seed");
  return pos == std::string::npos || pos == 0 ? stem : stem.substr(0, pos);
}

double column_of(const RunRecord& r, const std::string& column) {
  if (column == "return") return r.ret;
  if (column == "pop_mean") return r.pop_mean;
  if (column == "pop_max") return r.pop_max;
  if (column == "sigma") return r.sigma;
  if (column == "alpha") return r.alpha;
  throw ConfigError("cannot plot column '" + column + "'");
}

std::string escape(const std::string& s) {
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

std::string num(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

}  // namespace

std::vector<Curve> load_curves(const std::vector<std::string>& csv_paths, const std::string& column) {
  if (csv_paths.empty()) throw ConfigError("plot needs at least one CSV");
  std::map<std::string, std::vector<std::vector<RunRecord>>> groups;
  std::vector<std::string> order;
  std::vector<std::int64_t> grid;
  for (const auto& path : csv_paths) {
    auto recs = read_run_csv(path);
    if (recs.empty()) throw FormatError("'" + path + "' has no rows");
    std::vector<std::int64_t> its;
    for (const auto& r : recs) its.push_back(r.iteration);
    if (grid.empty())
      grid = its;
    else if (its != grid)
      throw ConfigError("iteration grid of '" + path + "' does not match '" + csv_paths.front() + "'");
    const auto g = group_of(path);
    if (!groups.count(g)) order.push_back(g);
    groups[g].push_back(std::move(recs));
  }

  std::vector<Curve> out;
  for (const auto& g : order) {
    const auto& runs = groups[g];
    Curve c;
    c.label = g;
    c.iterations = grid;
    c.runs = static_cast<int>(runs.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      std::vector<double> v;
      for (const auto& run : runs) v.push_back(column_of(run[i], column));
      const auto s = describe(v);
      c.mean.push_back(s.mean);
      c.std.push_back(s.std);
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::string render_svg(const std::vector<Curve>& curves, const std::string& title, const std::string& y_label) {
  constexpr double W = 720, H = 440, left = 70, right = 170, top = 40, bottom = 50;
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool first = true;
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.iterations.size(); ++i) {
      const double x = static_cast<double>(c.iterations[i]);
      const double lo = c.mean[i] - c.std[i], hi = c.mean[i] + c.std[i];
      if (!std::isfinite(lo) || !std::isfinite(hi)) continue;
      if (first) {
        x0 = x1 = x;
        y0 = lo;
        y1 = hi;
        first = false;
      }
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, lo);
      y1 = std::max(y1, hi);
    }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
    << W << ' ' << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
    << escape(title) << "</text>\n";
  s << "<g stroke=\"black\" stroke-width=\"1\">\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph << "\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph << "\"/>\n";
  s << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x0 + (x1 - x0) * t / 4.0, yv = y0 + (y1 - y0) * t / 4.0;
    s << "<text x=\"" << num(px(xv)) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">" << num(xv)
      << "</text>\n";
    s << "<text x=\"" << left - 6 << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">" << num(yv)
      << "</text>\n";
  }
  s << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">iteration</text>\n";
  s << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << top + ph / 2 << ")\">" << escape(y_label) << "</text>\n</g>\n";

  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& c = curves[k];
    const char* color = palette[k % 6];
    std::ostringstream band, line;
    for (std::size_t i = 0; i < c.iterations.size(); ++i) {
      if (!std::isfinite(c.mean[i])) continue;
      band << num(px(static_cast<double>(c.iterations[i]))) << ',' << num(py(c.mean[i] + c.std[i])) << ' ';
      line << num(px(static_cast<double>(c.iterations[i]))) << ',' << num(py(c.mean[i])) << ' ';
    }
    for (std::size_t i = c.iterations.size(); i-- > 0;) {
      if (!std::isfinite(c.mean[i])) continue;
      band << num(px(static_cast<double>(c.iterations[i]))) << ',' << num(py(c.mean[i] - c.std[i])) << ' ';
    }
    s << "<polygon class=\"band\" data-label=\"" << escape(c.label) << "\" points=\"" << band.str()
      << "\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    s << "<polyline class=\"mean\" data-label=\"" << escape(c.label) << "\" points=\"" << line.str()
      << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    s << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 36 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"3\"/>\n";
    s << "<text x=\"" << left + pw + 42 << "\" y=\"" << ly + 4
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(c.label) << " (" << c.runs << ")</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void plot_curves(const std::vector<std::string>& csv_paths, const std::string& svg_path, const std::string& column) {
  const auto curves = load_curves(csv_paths, column);
  const auto svg = render_svg(curves, "mean " + column + " ± 1 std", column);
  std::ofstream f(svg_path, std::ios::trunc);
  if (!f) throw IoError("cannot write '" + svg_path + "'");
  f << svg;
  if (!f) throw IoError("failed writing '" + svg_path + "'");
}

}  // namespace bierl
