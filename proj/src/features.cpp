#include "v2x/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace v2x {

int feature_count(FeatureSet fs) { return fs == FeatureSet::Interval ? kIntervalFeatureCount : kDynamicsFeatureCount; }

const char* to_string(FeatureSet fs) { return fs == FeatureSet::Interval ? "interval" : "dynamics"; }

namespace {

double signed_heading_delta(double cur, double prev) {
  double d = std::fmod(cur - prev, 360.0);
  if (d > 180.0) d -= 360.0;
  if (d < -180.0) d += 360.0;
  return d;
}

// Per-packet displacement. A jump larger than any vehicle can cover between
// two packets means the sender wrapped around the segment; fall back to the
// kinematic estimate so the feature range is not blown up by the seam.
double displacement(const SenderDynamics& cur, const SenderDynamics& prev, double dt) {
  const double dx = std::fabs(cur.x - prev.x);
  const double plausible = 60.0 * std::max(dt, 0.1) + 10.0;
  return dx <= plausible ? dx : cur.speed * dt;
}

double to_unit(double v, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  return 2.0 * (v - lo) / (hi - lo) - 1.0;
}

double from_unit(double y, double lo, double hi) {
  if (!(hi > lo)) return lo;
  return lo + (y + 1.0) * 0.5 * (hi - lo);
}

}  // namespace

std::vector<double> raw_features(FeatureSet fs, double dt_prev_s, const SenderDynamics& cur,
                                 const SenderDynamics& prev) {
  if (fs == FeatureSet::Interval) return {dt_prev_s};
  return {dt_prev_s,
          cur.speed,
          cur.heading,
          cur.x,
          cur.speed - prev.speed,
          signed_heading_delta(cur.heading, prev.heading),
          displacement(cur, prev, dt_prev_s)};
}

Vec FeatureScaler::scale(std::span<const double> raw) const {
  if (raw.size() != lo.size()) throw std::invalid_argument("FeatureScaler: feature count mismatch");
  Vec out(static_cast<Eigen::Index>(raw.size()));
  for (std::size_t k = 0; k < raw.size(); ++k)
    out[static_cast<Eigen::Index>(k)] = std::clamp(to_unit(raw[k], lo[k], hi[k]), -1.0, 1.0);
  return out;
}

double FeatureScaler::scale_target(double seconds) const { return to_unit(seconds, target_lo, target_hi); }

double FeatureScaler::unscale_target(double y) const {
  return std::max(from_unit(y, target_lo, target_hi), kMinPredictedInterval);
}

double FeatureScaler::unscale_feature(std::size_t k, double y) const { return from_unit(y, lo.at(k), hi.at(k)); }

FeatureScaler FeatureScaler::fit(std::span<const std::vector<double>> samples, std::span<const double> targets) {
  if (samples.empty() || targets.empty()) throw std::invalid_argument("FeatureScaler::fit: empty corpus");
  FeatureScaler s;
  const std::size_t n = samples.front().size();
  s.lo.assign(n, std::numeric_limits<double>::infinity());
  s.hi.assign(n, -std::numeric_limits<double>::infinity());
  for (const auto& row : samples) {
    if (row.size() != n) throw std::invalid_argument("FeatureScaler::fit: ragged samples");
    for (std::size_t k = 0; k < n; ++k) {
      s.lo[k] = std::min(s.lo[k], row[k]);
      s.hi[k] = std::max(s.hi[k], row[k]);
    }
  }
  const auto [tmin, tmax] = std::minmax_element(targets.begin(), targets.end());
  s.target_lo = *tmin;
  s.target_hi = *tmax;
  return s;
}

}  // namespace v2x
