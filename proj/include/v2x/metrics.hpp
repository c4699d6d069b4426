#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace v2x {

/// Reception counts in one distance bin [lo_m, hi_m).
struct PrrRecord {
  double lo_m = 0.0;
  double hi_m = 0.0;
  std::uint64_t received = 0;
  std::uint64_t expected = 0;

  double prr() const { return expected == 0 ? 0.0 : static_cast<double>(received) / static_cast<double>(expected); }
};

/// PRR-by-distance for the learning node's transmissions within one run.
class PrrAccumulator {
 public:
  explicit PrrAccumulator(double bin_width_m = 25.0, double max_range_m = 300.0);

  /// One potential receiver of one transmission; ignored beyond max range.
  void record(double distance_m, bool received);
  const std::vector<PrrRecord>& bins() const { return bins_; }
  double max_range() const { return max_range_; }
  double bin_width() const { return width_; }

  /// Pooled received/expected over bins fully inside [lo_m, hi_m); nullopt if nothing expected.
  std::optional<double> pooled(double lo_m, double hi_m) const;

 private:
  double width_;
  double max_range_;
  std::vector<PrrRecord> bins_;
};

struct AggregateBin {
  double lo_m = 0.0;
  double hi_m = 0.0;
  double mean = 0.0;
  std::optional<double> ci95;  // omitted for a single run
  int n_runs = 0;
};

/// Mean PRR per bin across runs with a normal-approximation 95% CI
/// (1.96 * s / sqrt(n)). Bins with nothing expected in any run are dropped.
std::vector<AggregateBin> aggregate(std::span<const PrrAccumulator> runs);

struct MeanCi {
  double mean = 0.0;
  std::optional<double> ci95;
  int n = 0;
};
/// Mean and 95% CI of a per-run statistic.
MeanCi mean_ci(std::span<const double> values);

std::string prr_csv_header();
std::string prr_csv_line(const std::string& scenario, const std::string& mode, const AggregateBin& b);

/// Running mean of center-region CBR samples after warm-up.
class ChannelLoadReport {
 public:
  void add(double cbr) {
    sum_ += cbr;
    ++n_;
  }
  double mean() const { return n_ == 0 ? 0.0 : sum_ / static_cast<double>(n_); }
  std::uint64_t samples() const { return n_; }

 private:
  double sum_ = 0.0;
  std::uint64_t n_ = 0;
};

/// A row of the CBR series CSV (`t_ms,node,cbr`).
struct CbrSample {
  std::int64_t t_ms = 0;
  std::int32_t node = 0;
  double cbr = 0.0;
};

/// Mean CBR over samples at or after `warmup_ms` from nodes accepted by `in_center`.
template <class Pred>
double report_channel_load(std::span<const CbrSample> series, std::int64_t warmup_ms, Pred in_center) {
  ChannelLoadReport r;
  for (const auto& s : series)
    if (s.t_ms >= warmup_ms && in_center(s.node)) r.add(s.cbr);
  return r.mean();
}

}  // namespace v2x
