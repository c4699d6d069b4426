#include "v2x/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace v2x {

void MobilityConfig::validate() const {
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("mobility.alpha must be in [0,1]");
  if (sampling_period_s <= 0.0) throw std::invalid_argument("mobility.sampling_period_s must be > 0");
  if (density_per_lane_km <= 0.0) throw std::invalid_argument("mobility.density_per_lane_km must be > 0");
  if (segment_length_m <= 0.0) throw std::invalid_argument("mobility.segment_length_m must be > 0");
  if (lanes_per_direction < 1) throw std::invalid_argument("mobility.lanes_per_direction must be >= 1");
  if (speed_min > speed_max) throw std::invalid_argument("mobility.speed_min > speed_max");
  if (speed_sigma < 0.0 || heading_sigma_deg < 0.0) throw std::invalid_argument("mobility sigmas must be >= 0");
}

int lane_direction(int lane, const MobilityConfig& cfg) {
  return lane < cfg.lanes_per_direction ? 1 : -1;
}

double lane_center_y(int lane, const MobilityConfig& cfg) {
  return (static_cast<double>(lane) + 0.5) * cfg.lane_width_m;
}

double base_heading(int lane, const MobilityConfig& cfg) {
  return lane_direction(lane, cfg) > 0 ? 0.0 : 180.0;
}

VehicleState step(const VehicleState& s, const MobilityConfig& cfg, Engine& rng) {
  VehicleState n = s;
  const double a = cfg.alpha;
  const double innov = std::sqrt(std::max(0.0, 1.0 - a * a));
  const double z_speed = standard_normal(rng);
  const double z_heading = standard_normal(rng);

  n.speed = a * s.speed + (1.0 - a) * cfg.mean_speed + innov * cfg.speed_sigma * z_speed;
  n.speed = std::clamp(n.speed, cfg.speed_min, cfg.speed_max);

  // Heading deviation reverts to the lane heading with the same memory level.
  double dir = lane_direction(s.lane, cfg);
  double base = base_heading(s.lane, cfg);
  double dev = s.heading - base;
  if (dev > 180.0) dev -= 360.0;
  if (dev < -180.0) dev += 360.0;
  dev = a * dev + cfg.heading_sigma_deg * z_heading;
  n.heading = base + dev;

  const double dt = cfg.sampling_period_s;
  n.x = s.x + dir * n.speed * dt;
  const double L = cfg.segment_length_m;
  if (cfg.boundary == Boundary::Wrap) {
    n.x = std::fmod(n.x, L);
    if (n.x < 0.0) n.x += L;
  } else {
    // Reflect: the vehicle turns around at the segment end and keeps its lane.
    if (n.x < 0.0 || n.x > L) {
      n.x = n.x < 0.0 ? -n.x : 2.0 * L - n.x;
      n.x = std::clamp(n.x, 0.0, L);
      n.heading = std::fmod(n.heading + 180.0, 360.0);
    }
  }
  n.t = s.t + SimTime::from_seconds(dt);
  return n;
}

std::vector<VehicleState> spawn_scenario(const MobilityConfig& cfg, Engine& rng) {
  cfg.validate();
  const double km = cfg.segment_length_m / 1000.0;
  const auto per_lane = static_cast<std::size_t>(std::llround(cfg.density_per_lane_km * km));
  std::vector<VehicleState> out;
  out.reserve(per_lane * static_cast<std::size_t>(cfg.lane_count()));
  NodeId next_id = 0;
  for (int lane = 0; lane < cfg.lane_count(); ++lane) {
    // Jittered uniform placement: one vehicle per equal cell, uniform inside
    // the middle of the cell, so same-lane gaps are always positive.
    const double cell = cfg.segment_length_m / static_cast<double>(per_lane);
    for (std::size_t k = 0; k < per_lane; ++k) {
      VehicleState v;
      v.id = next_id++;
      v.lane = lane;
      v.x = (static_cast<double>(k) + uniform_real(rng, 0.1, 0.9)) * cell;
      v.y = lane_center_y(lane, cfg);
      v.speed = uniform_real(rng, cfg.speed_min, cfg.speed_max);
      v.heading = base_heading(lane, cfg);
      out.push_back(v);
    }
  }
  return out;
}

double wrapped_dx(double ax, double bx, double L) {
  double dx = bx - ax;
  if (L > 0.0) {
    if (dx > 0.5 * L) dx -= L;
    else if (dx < -0.5 * L) dx += L;
  }
  return dx;
}

double distance(const VehicleState& a, const VehicleState& b, double wrap_length) {
  return std::hypot(wrapped_dx(a.x, b.x, wrap_length), b.y - a.y);
}

std::string mobility_trace_header() { return "t_us,node,lane,x,y,speed,heading"; }

std::string mobility_trace_row(const VehicleState& v) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%lld,%d,%d,%.3f,%.3f,%.4f,%.4f", static_cast<long long>(v.t.us), v.id,
                v.lane, v.x, v.y, v.speed, v.heading);
  return buf;
}

}  // namespace v2x
