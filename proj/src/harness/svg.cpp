// Copyright 2026 The qcvrp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qcvrp/harness/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qcvrp/common/error.hpp"

namespace qcvrp::harness {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                    "#bcbd22", "#17becf"};
constexpr double kPlot = 520.0;
constexpr double kMargin = 40.0;

std::string fmt(const char* f, double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string num(double x) { return fmt("%.2f", x); }
double sx(double x) { return kMargin + x * kPlot; }
double sy(double y) { return kMargin + (1.0 - y) * kPlot; }

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

}  // namespace

std::string routes_svg(const env::Instance& inst, const env::RouteLog& routes,
                       const std::string& title) {
  const double width = 2 * kMargin + kPlot + 200.0;
  const double height = 2 * kMargin + kPlot;
  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width)
    << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(width) << ' '
    << num(height) << "\">\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\""
    << num(height) << "\" fill=\"white\"/>\n"
    << "<rect x=\"" << num(kMargin) << "\" y=\"" << num(kMargin) << "\" width=\""
    << num(kPlot) << "\" height=\"" << num(kPlot)
    << "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
  if (!title.empty()) {
    o << "<text x=\"" << num(kMargin) << "\" y=\"24\" font-family=\"sans-serif\" "
      << "font-size=\"14\">" << escape(title) << "</text>\n";
  }

  for (std::size_t v = 0; v < routes.positions.size(); ++v) {
    const auto& path = routes.positions[v];
    if (path.size() < 2) continue;
    o << "<polyline fill=\"none\" stroke=\"" << kPalette[v % 10]
      << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (i) o << ' ';
      o << num(sx(path[i].x)) << ',' << num(sy(path[i].y));
    }
    o << "\"/>\n";
  }

  int dmax = 1;
  for (int d : inst.demands) dmax = std::max(dmax, d);
  for (std::size_t c = 0; c < inst.positions.size(); ++c) {
    const double r = 3.0 + 9.0 * inst.demands[c] / dmax;
    o << "<circle cx=\"" << num(sx(inst.positions[c].x)) << "\" cy=\""
      << num(sy(inst.positions[c].y)) << "\" r=\"" << num(r)
      << "\" fill=\"#eeeeee\" stroke=\"black\"/>\n";
  }
  const double half = 8.0;
  o << "<rect x=\"" << num(sx(inst.depot.x) - half) << "\" y=\""
    << num(sy(inst.depot.y) - half) << "\" width=\"" << num(2 * half)
    << "\" height=\"" << num(2 * half) << "\" fill=\"black\"/>\n";

  const double lx = 2 * kMargin + kPlot;
  o << "<text x=\"" << num(lx) << "\" y=\"" << num(kMargin + 12)
    << "\" font-family=\"sans-serif\" font-size=\"12\">depot: square</text>\n";
  double total = 0.0;
  for (std::size_t v = 0; v < routes.positions.size(); ++v) {
    const auto& path = routes.positions[v];
    double d = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) d += env::distance(path[i - 1], path[i]);
    total += d;
    const double y = kMargin + 34 + 20.0 * static_cast<double>(v);
    o << "<line x1=\"" << num(lx) << "\" y1=\"" << num(y - 4) << "\" x2=\""
      << num(lx + 20) << "\" y2=\"" << num(y - 4) << "\" stroke=\""
      << kPalette[v % 10] << "\" stroke-width=\"3\"/>\n"
      << "<text x=\"" << num(lx + 26) << "\" y=\"" << num(y)
      << "\" font-family=\"sans-serif\" font-size=\"12\">vehicle " << v << ": "
      << fmt("%.4f", d) << "</text>\n";
  }
  const double y = kMargin + 34 + 20.0 * static_cast<double>(routes.positions.size());
  o << "<text x=\"" << num(lx) << "\" y=\"" << num(y)
    << "\" font-family=\"sans-serif\" font-size=\"12\">total: " << fmt("%.4f", total)
    << "</text>\n</svg>\n";
  return o.str();
}

void render_routes_svg(const env::Instance& inst, const env::RouteLog& routes,
                       const std::filesystem::path& path, const std::string& title) {
  write_text(path, routes_svg(inst, routes, title));
}

std::string boxplot_svg(const std::map<std::string, BoxplotSummary>& boxes,
                        const std::string& title) {
  const double slot = 120.0, top = 50.0, plot_h = 300.0;
  const double width = 80.0 + slot * std::max<std::size_t>(boxes.size(), 1);
  const double height = top + plot_h + 50.0;
  double lo = 0.0, hi = 1.0;
  bool first = true;
  for (const auto& [_, b] : boxes) {
    double a = b.min, z = b.max;
    for (double x : b.outliers) {
      a = std::min(a, x);
      z = std::max(z, x);
    }
    lo = first ? a : std::min(lo, a);
    hi = first ? z : std::max(hi, z);
    first = false;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  auto y = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width)
    << "\" height=\"" << num(height) << "\">\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\""
    << num(height) << "\" fill=\"white\"/>\n"
    << "<text x=\"10\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">"
    << escape(title) << "</text>\n";
  for (double t : {lo + pad, hi - pad}) {
    o << "<text x=\"4\" y=\"" << num(y(t) + 4)
      << "\" font-family=\"sans-serif\" font-size=\"10\">" << fmt("%.3f", t)
      << "</text>\n";
  }
  std::size_t i = 0;
  for (const auto& [name, b] : boxes) {
    const double cx = 80.0 + slot * (static_cast<double>(i) + 0.5);
    const char* color = kPalette[i % 10];
    o << "<line x1=\"" << num(cx) << "\" y1=\"" << num(y(b.max)) << "\" x2=\""
      << num(cx) << "\" y2=\"" << num(y(b.min)) << "\" stroke=\"black\"/>\n"
      << "<rect x=\"" << num(cx - 30) << "\" y=\"" << num(y(b.q3)) << "\" width=\"60\" "
      << "height=\"" << num(y(b.q1) - y(b.q3)) << "\" fill=\"" << color
      << "\" fill-opacity=\"0.4\" stroke=\"black\"/>\n"
      << "<line x1=\"" << num(cx - 30) << "\" y1=\"" << num(y(b.median))
      << "\" x2=\"" << num(cx + 30) << "\" y2=\"" << num(y(b.median))
      << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    for (double v : {b.min, b.max}) {
      o << "<line x1=\"" << num(cx - 15) << "\" y1=\"" << num(y(v)) << "\" x2=\""
        << num(cx + 15) << "\" y2=\"" << num(y(v)) << "\" stroke=\"black\"/>\n";
    }
    for (double v : b.outliers) {
      o << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(y(v))
        << "\" r=\"3\" fill=\"none\" stroke=\"black\"/>\n";
    }
    o << "<text x=\"" << num(cx) << "\" y=\"" << num(top + plot_h + 25)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << escape(name) << "</text>\n";
    ++i;
  }
  o << "</svg>\n";
  return o.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  f.close();
  if (!f) throw IoError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace qcvrp::harness
