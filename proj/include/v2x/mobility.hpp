#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "v2x/rng.hpp"
#include "v2x/sim_time.hpp"

namespace v2x {

using NodeId = std::int32_t;

enum class Boundary { Wrap, Reflect };

struct MobilityConfig {
  double alpha = 0.95;             // Gauss-Markov memory level
  double sampling_period_s = 0.1;
  double mean_speed = 32.5;        // m/s
  double speed_sigma = 1.0;        // stationary std of speed, m/s
  double speed_min = 20.0;
  double speed_max = 45.0;
  double heading_sigma_deg = 0.5;  // per-step heading innovation
  double segment_length_m = 2000.0;
  double density_per_lane_km = 50.0;
  int lanes_per_direction = 3;
  double lane_width_m = 4.0;
  Boundary boundary = Boundary::Wrap;

  /// Throws std::invalid_argument on violated invariants.
  void validate() const;
  int lane_count() const { return 2 * lanes_per_direction; }
};

struct VehicleState {
  NodeId id = 0;
  int lane = 0;          // 0..lanes_per_direction-1 drive +x, the rest drive -x
  double x = 0.0;        // m along the highway
  double y = 0.0;        // m, lane centre
  double speed = 0.0;    // m/s
  double heading = 0.0;  // degrees
  SimTime t{};
};

/// +1 for lanes driving towards +x, -1 otherwise.
int lane_direction(int lane, const MobilityConfig& cfg);
double lane_center_y(int lane, const MobilityConfig& cfg);
double base_heading(int lane, const MobilityConfig& cfg);

/// One Gauss-Markov update over cfg.sampling_period_s.
VehicleState step(const VehicleState& state, const MobilityConfig& cfg, Engine& rng);

/// Places round(density * lanes * km) vehicles uniformly at random along each
/// lane with uniform initial speeds in [speed_min, speed_max].
std::vector<VehicleState> spawn_scenario(const MobilityConfig& cfg, Engine& rng);

/// Planar distance; along-road separation uses the torus metric when the
/// segment wraps (segment_length > 0).
double distance(const VehicleState& a, const VehicleState& b, double wrap_length = 0.0);

/// Signed shortest along-road offset b.x - a.x on a ring of length L.
double wrapped_dx(double ax, double bx, double wrap_length);

/// CSV `t_us,node,lane,x,y,speed,heading`.
std::string mobility_trace_header();
std::string mobility_trace_row(const VehicleState& v);

}  // namespace v2x
