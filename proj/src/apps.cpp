#include "v2x/apps.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace v2x {

void AppConfig::validate() const {
  if (cam_bytes <= 0 || cpm_bytes <= 0 || ldm_bytes <= 0) throw std::invalid_argument("apps: payload sizes must be > 0");
  if (check_period.us <= 0) throw std::invalid_argument("apps.check_period must be > 0");
  if (cam_min_interval > cam_max_interval) throw std::invalid_argument("apps: cam min interval > max interval");
  if (cpm_capable_fraction < 0.0 || cpm_capable_fraction > 1.0)
    throw std::invalid_argument("apps.cpm_capable_fraction must be in [0,1]");
  if (cpm_burst_rate_hz <= 0.0) throw std::invalid_argument("apps.cpm_burst_rate_hz must be > 0");
  if (cpm_burst_frames < 1) throw std::invalid_argument("apps.cpm_burst_frames must be >= 1");
  if (jitter_max.us < 0) throw std::invalid_argument("apps.jitter must be >= 0");
  for (SimTime d : {cam_deadline, cpm_deadline, ldm_deadline})
    if (d.us <= 0) throw std::invalid_argument("apps: deadlines must be > 0");
}

int AppConfig::payload_bytes(PacketType t) const {
  switch (t) {
    case PacketType::Cam: return cam_bytes;
    case PacketType::Cpm: return cpm_bytes;
    case PacketType::Ldm: return ldm_bytes;
  }
  return 0;
}

SimTime AppConfig::deadline_for(PacketType t) const {
  switch (t) {
    case PacketType::Cam: return cam_deadline;
    case PacketType::Cpm: return cpm_deadline;
    case PacketType::Ldm: return ldm_deadline;
  }
  return SimTime{};
}

AppPacketRequest assign_deadline(AppPacketRequest req, const AppConfig& cfg) {
  req.deadline = req.created_at + cfg.deadline_for(req.ptype);
  req.ac = access_category_for(req.ptype);
  return req;
}

AppPacketRequest make_request(NodeId node, PacketType type, SimTime now, const AppConfig& cfg) {
  AppPacketRequest r;
  r.node = node;
  r.ptype = type;
  r.payload_bytes = cfg.payload_bytes(type);
  r.created_at = now;
  return assign_deadline(r, cfg);
}

namespace {

double heading_delta(double a, double b) {
  double d = std::fmod(std::fabs(a - b), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

}  // namespace

std::optional<AppPacketRequest> cam_check(CamTriggerState& st, const VehicleState& v, SimTime now,
                                          const AppConfig& cfg, double wrap_length) {
  bool fire = false;
  if (!st.last_cam_time || st.mode == CamMode::Periodic10Hz) {
    fire = true;
  } else {
    const SimTime since = now - *st.last_cam_time;
    if (since >= cfg.cam_max_interval) {
      fire = true;
    } else if (since >= cfg.cam_min_interval) {
      const double dpos = std::fabs(wrapped_dx(st.last_cam_pos, v.x, wrap_length));
      // Thresholds are inclusive; the tolerance keeps exact multiples (4 m in
      // 100 ms at 40 m/s) from missing by a rounding error.
      constexpr double eps = 1e-9;
      fire = dpos >= cfg.cam_pos_threshold_m - eps ||
             heading_delta(v.heading, st.last_cam_heading) >= cfg.cam_heading_threshold_deg - eps ||
             std::fabs(v.speed - st.last_cam_speed) >= cfg.cam_speed_threshold_mps - eps;
    }
  }
  if (!fire) return std::nullopt;
  st.last_cam_pos = v.x;
  st.last_cam_heading = v.heading;
  st.last_cam_speed = v.speed;
  st.last_cam_time = now;
  return make_request(v.id, PacketType::Cam, now, cfg);
}

double cpm_onset_probability(const AppConfig& cfg) {
  // Cycle = burst ticks + geometric idle ticks; mean idle ticks (1-p)/p.
  const double cycle_ticks = 1.0 / (cfg.cpm_burst_rate_hz * cfg.check_period.to_seconds());
  const double idle_ticks = cycle_ticks - static_cast<double>(cfg.cpm_burst_frames);
  if (idle_ticks <= 0.0) return 1.0;
  return 1.0 / (idle_ticks + 1.0);
}

std::optional<AppPacketRequest> cpm_tick(CpmBurstState& st, Engine& rng, SimTime now, NodeId node,
                                         const AppConfig& cfg) {
  if (!st.capable) return std::nullopt;
  if (!st.burst_active) {
    if (uniform_real(rng, 0.0, 1.0) >= cpm_onset_probability(cfg)) return std::nullopt;
    st.burst_active = true;
    st.frames_remaining = cfg.cpm_burst_frames;
    st.next_fire = now;
  }
  if (now < st.next_fire) return std::nullopt;
  --st.frames_remaining;
  st.next_fire = now + cfg.check_period;
  if (st.frames_remaining == 0) st.burst_active = false;
  return make_request(node, PacketType::Cpm, now, cfg);
}

bool cpm_capable(NodeId node, std::uint64_t seed, double fraction) {
  const std::uint64_t h = derive_seed(seed, "cpm-capable", static_cast<std::uint64_t>(node));
  return static_cast<double>(h >> 11) * 0x1.0p-53 < fraction;
}

std::optional<AppPacketRequest> ldm_tick(const LdmState& st, SimTime now, NodeId node, const AppConfig& cfg) {
  if (!st.enabled || now < st.phase) return std::nullopt;
  if ((now - st.phase).us % cfg.ldm_period.us != 0) return std::nullopt;
  return make_request(node, PacketType::Ldm, now, cfg);
}

SimTime draw_jitter(Engine& rng, const AppConfig& cfg) {
  return SimTime{uniform_int(rng, 0, cfg.jitter_max.us)};
}

std::string packet_log_header() { return "t_us,sender,ptype,payload,speed,heading,x"; }

}  // namespace v2x
