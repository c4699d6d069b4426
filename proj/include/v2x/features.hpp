#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "v2x/lstm.hpp"
#include "v2x/phy.hpp"

namespace v2x {

/// Which inputs a network consumes. Interval nets see only dt_prev; Dynamics
/// nets (direct CAM) add the sender's kinematics and their per-packet deltas.
enum class FeatureSet : std::uint8_t { Interval = 0, Dynamics = 1 };

inline constexpr int kIntervalFeatureCount = 1;
inline constexpr int kDynamicsFeatureCount = 7;

int feature_count(FeatureSet fs);
const char* to_string(FeatureSet fs);

/// Unscaled feature vector of one packet given the previous one of the same
/// (sender, type) pair. Order: dt_prev, speed, heading, x, d_speed, d_heading, d_x.
std::vector<double> raw_features(FeatureSet fs, double dt_prev_s, const SenderDynamics& cur,
                                 const SenderDynamics& prev);

/// Per-feature min-max scaling to [-1, 1], plus the scalar target range.
/// Frozen at training time and shipped with the weights.
struct FeatureScaler {
  std::vector<double> lo, hi;
  double target_lo = 0.0;
  double target_hi = 1.0;

  /// Scaled inputs, clamped to [-1, 1] (serving may see out-of-range values).
  Vec scale(std::span<const double> raw) const;
  double scale_target(double seconds) const;
  /// Inverse target map, clamped to a 1 ms floor.
  double unscale_target(double y) const;
  /// Unclamped inverse of one input component (for round-trip checks).
  double unscale_feature(std::size_t k, double y) const;

  /// Fits lo/hi over the rows of `samples` and target range over `targets`.
  static FeatureScaler fit(std::span<const std::vector<double>> samples, std::span<const double> targets);
};

inline constexpr double kMinPredictedInterval = 1e-3;

}  // namespace v2x
