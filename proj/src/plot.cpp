#include "v2x/plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace v2x {

namespace {

double field_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw std::runtime_error(where + ": bad number '" + s + "'");
  return v;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::vector<PrrRow> read_prr_csv(std::istream& is, const std::string& origin) {
  std::vector<PrrRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("scenario,", 0) == 0) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (line.back() == ',') f.emplace_back();
    const std::string where = origin + ":" + std::to_string(lineno);
    if (f.size() != 7) throw std::runtime_error(where + ": expected 7 fields, got " + std::to_string(f.size()));
    PrrRow r;
    r.scenario = f[0];
    r.mode = f[1];
    r.lo_m = field_double(f[2], where);
    r.hi_m = field_double(f[3], where);
    r.prr = field_double(f[4], where);
    if (!f[5].empty()) r.ci95 = field_double(f[5], where);
    r.n_runs = static_cast<int>(field_double(f[6], where));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string render_prr_svg(const std::vector<PrrRow>& rows, const std::string& title) {
  if (rows.empty()) throw std::invalid_argument("render_prr_svg: no rows");
  // Series keyed by first appearance.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const PrrRow*>> series;
  bool multi_scenario = false;
  for (const auto& r : rows)
    if (r.scenario != rows.front().scenario) multi_scenario = true;
  for (const auto& r : rows) {
    const std::string key = multi_scenario ? r.scenario + " " + r.mode : r.mode;
    if (!series.count(key)) order.push_back(key);
    series[key].push_back(&r);
  }

  double x_max = 0.0, y_lo = 1.0, y_hi = 0.0;
  for (const auto& r : rows) {
    x_max = std::max(x_max, r.hi_m);
    y_lo = std::min(y_lo, r.prr - r.ci95.value_or(0.0));
    y_hi = std::max(y_hi, r.prr + r.ci95.value_or(0.0));
  }
  y_lo = std::max(0.0, std::floor(y_lo * 10.0) / 10.0);
  y_hi = std::min(1.0, std::ceil(y_hi * 10.0) / 10.0);
  if (y_hi - y_lo < 0.1) {
    y_hi = std::min(1.0, y_lo + 0.1);
    y_lo = y_hi - 0.1;
  }

  const double W = 720, H = 460, ml = 70, mr = 190, mt = 40, mb = 55;
  const double pw = W - ml - mr, ph = H - mt - mb;
  auto sx = [&](double x) { return ml + pw * x / x_max; };
  auto sy = [&](double y) { return mt + ph * (1.0 - (y - y_lo) / (y_hi - y_lo)); };

  std::ostringstream o;
  char b[256];
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  std::snprintf(b, sizeof b, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" viewBox=\"0 0 %g %g\">\n",
                W, H, W, H);
  o << b << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  if (!title.empty())
    o << "<text x=\"" << ml + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n";
  std::snprintf(b, sizeof b, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n", ml,
                mt, pw, ph);
  o << b;

  const double x_step = x_max > 200 ? 50.0 : 25.0;
  for (double x = 0.0; x <= x_max + 1e-9; x += x_step) {
    std::snprintf(b, sizeof b,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>"
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%g</text>\n",
                  sx(x), mt, sx(x), mt + ph, sx(x), mt + ph + 16, x);
    o << b;
  }
  for (double y = y_lo; y <= y_hi + 1e-9; y += 0.1) {
    std::snprintf(b, sizeof b,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>"
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.1f</text>\n",
                  ml, sy(y), ml + pw, sy(y), ml - 6, sy(y) + 4, y);
    o << b;
  }
  std::snprintf(b, sizeof b, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">distance to learning node (m)</text>\n",
                ml + pw / 2, H - 14);
  o << b;
  std::snprintf(b, sizeof b,
                "<text x=\"18\" y=\"%.1f\" text-anchor=\"middle\" transform=\"rotate(-90 18 %.1f)\">PRR</text>\n",
                mt + ph / 2, mt + ph / 2);
  o << b;

  for (std::size_t k = 0; k < order.size(); ++k) {
    const char* color = kPalette[k % std::size(kPalette)];
    const auto& pts = series[order[k]];
    o << "<g class=\"series\" data-name=\"" << escape(order[k]) << "\">\n<polyline fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"2\" points=\"";
    for (const auto* r : pts) {
      std::snprintf(b, sizeof b, "%.1f,%.1f ", sx(0.5 * (r->lo_m + r->hi_m)), sy(r->prr));
      o << b;
    }
    o << "\"/>\n";
    for (const auto* r : pts) {
      const double cx = sx(0.5 * (r->lo_m + r->hi_m));
      std::snprintf(b, sizeof b, "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"3\" fill=\"%s\"/>\n", cx, sy(r->prr), color);
      o << b;
      if (r->ci95) {
        std::snprintf(b, sizeof b, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\"/>\n", cx,
                      sy(std::max(y_lo, r->prr - *r->ci95)), cx, sy(std::min(y_hi, r->prr + *r->ci95)), color);
        o << b;
      }
    }
    o << "</g>\n";
    const double ly = mt + 14 + 20.0 * static_cast<double>(k);
    std::snprintf(b, sizeof b,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" stroke-width=\"2\"/>"
                  "<text x=\"%.1f\" y=\"%.1f\">",
                  ml + pw + 12, ly, ml + pw + 36, ly, color, ml + pw + 42, ly + 4);
    o << b << escape(order[k]) << "</text>\n";
  }
  o << "</g>\n</svg>\n";
  return o.str();
}

}  // namespace v2x
