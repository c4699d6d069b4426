#include "v2x/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace v2x {

PrrAccumulator::PrrAccumulator(double bin_width_m, double max_range_m) : width_(bin_width_m), max_range_(max_range_m) {
  if (!(bin_width_m > 0.0) || !(max_range_m > 0.0)) throw std::invalid_argument("PrrAccumulator: bad bins");
  const auto n = static_cast<std::size_t>(std::ceil(max_range_m / bin_width_m - 1e-9));
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = static_cast<double>(i) * bin_width_m;
    bins_.push_back({lo, std::min(lo + bin_width_m, max_range_m), 0, 0});
  }
}

void PrrAccumulator::record(double d, bool received) {
  if (d < 0.0 || d >= max_range_) return;
  auto& b = bins_[static_cast<std::size_t>(d / width_)];
  ++b.expected;
  if (received) ++b.received;
}

std::optional<double> PrrAccumulator::pooled(double lo_m, double hi_m) const {
  std::uint64_t rx = 0, ex = 0;
  for (const auto& b : bins_)
    if (b.lo_m >= lo_m - 1e-9 && b.hi_m <= hi_m + 1e-9) {
      rx += b.received;
      ex += b.expected;
    }
  if (ex == 0) return std::nullopt;
  return static_cast<double>(rx) / static_cast<double>(ex);
}

MeanCi mean_ci(std::span<const double> v) {
  MeanCi r;
  r.n = static_cast<int>(v.size());
  if (v.empty()) return r;
  double s = 0.0;
  for (double x : v) s += x;
  r.mean = s / static_cast<double>(v.size());
  if (v.size() >= 2) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    r.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(v.size()));
  }
  return r;
}

std::vector<AggregateBin> aggregate(std::span<const PrrAccumulator> runs) {
  std::vector<AggregateBin> out;
  if (runs.empty()) return out;
  const auto nb = runs.front().bins().size();
  for (std::size_t i = 0; i < nb; ++i) {
    std::vector<double> vals;
    for (const auto& r : runs) {
      if (r.bins().size() != nb) throw std::invalid_argument("aggregate: runs use different binning");
      const auto& b = r.bins()[i];
      if (b.expected > 0) vals.push_back(b.prr());
    }
    if (vals.empty()) continue;
    const auto mc = mean_ci(vals);
    const auto& b0 = runs.front().bins()[i];
    out.push_back({b0.lo_m, b0.hi_m, mc.mean, mc.ci95, mc.n});
  }
  return out;
}

std::string prr_csv_header() { return "scenario,mode,bin_lo_m,bin_hi_m,prr,ci95,n_runs"; }

std::string prr_csv_line(const std::string& scenario, const std::string& mode, const AggregateBin& b) {
  char buf[128];
  std::string ci;
  if (b.ci95) {
    std::snprintf(buf, sizeof buf, "%.6f", *b.ci95);
    ci = buf;
  }
  std::snprintf(buf, sizeof buf, "%g,%g,%.6f", b.lo_m, b.hi_m, b.mean);
  return scenario + "," + mode + "," + buf + "," + ci + "," + std::to_string(b.n_runs);
}

}  // namespace v2x
