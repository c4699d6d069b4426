#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "v2x/mac.hpp"
#include "v2x/mobility.hpp"
#include "v2x/phy.hpp"
#include "v2x/rng.hpp"

namespace v2x {

enum class CamMode { Periodic10Hz, Triggered };

struct AppConfig {
  CamMode cam_mode = CamMode::Periodic10Hz;
  bool cpm_enabled = false;
  bool ldm_enabled = false;
  int cam_bytes = 300;
  int cpm_bytes = 500;
  int ldm_bytes = 750;
  SimTime check_period = SimTime::millis(100);
  SimTime cam_min_interval = SimTime::millis(100);
  SimTime cam_max_interval = SimTime::millis(1000);
  double cam_pos_threshold_m = 4.0;
  double cam_heading_threshold_deg = 4.0;
  double cam_speed_threshold_mps = 0.5;
  double cpm_capable_fraction = 0.5;
  double cpm_burst_rate_hz = 0.5;  // long-run bursts per second on a capable node
  int cpm_burst_frames = 5;
  SimTime ldm_period = SimTime::seconds(1);
  SimTime jitter_max = SimTime::micros(500);
  SimTime cam_deadline = SimTime::millis(100);
  SimTime cpm_deadline = SimTime::millis(100);
  SimTime ldm_deadline = SimTime::millis(500);

  void validate() const;
  int payload_bytes(PacketType t) const;
  SimTime deadline_for(PacketType t) const;
};

struct AppPacketRequest {
  std::uint64_t id = 0;
  NodeId node = -1;
  PacketType ptype = PacketType::Cam;
  int payload_bytes = 0;
  SimTime created_at{};
  SimTime deadline{};
  AcName ac = AcName::BestEffort;

  MacPacket to_mac_packet() const { return MacPacket{id, ptype, payload_bytes, created_at, deadline, ac}; }
};

/// Fills in deadline and access category for the request's packet type.
AppPacketRequest assign_deadline(AppPacketRequest req, const AppConfig& cfg);

/// Builds a fully-formed request for `type` created at `now`.
AppPacketRequest make_request(NodeId node, PacketType type, SimTime now, const AppConfig& cfg);

struct CamTriggerState {
  double last_cam_pos = 0.0;
  double last_cam_heading = 0.0;
  double last_cam_speed = 0.0;
  std::optional<SimTime> last_cam_time;
  CamMode mode = CamMode::Periodic10Hz;
};

/// Evaluated on every check tick. Periodic mode fires every tick; triggered
/// mode fires on a dynamics threshold once the minimum interval elapsed, and
/// unconditionally at the maximum interval. Snapshots dynamics on fire.
std::optional<AppPacketRequest> cam_check(CamTriggerState& state, const VehicleState& vehicle, SimTime now,
                                          const AppConfig& cfg, double wrap_length = 0.0);

struct CpmBurstState {
  bool capable = false;
  bool burst_active = false;
  int frames_remaining = 0;
  SimTime next_fire{};
};

/// Onset probability per idle check tick that makes the long-run burst rate
/// equal cfg.cpm_burst_rate_hz given that a burst occupies cpm_burst_frames ticks.
double cpm_onset_probability(const AppConfig& cfg);

/// One CPM check tick; emits a 500 B frame for each tick of an active burst.
std::optional<AppPacketRequest> cpm_tick(CpmBurstState& state, Engine& rng, SimTime now, NodeId node,
                                         const AppConfig& cfg);

/// Deterministic 50% (by default) capability split from node id and seed.
bool cpm_capable(NodeId node, std::uint64_t seed, double fraction);

struct LdmState {
  bool enabled = false;
  SimTime phase{};  // first emission, uniform in [0, period)
};

/// LDM fires at phase + k*period; returns the request when `now` is such an instant.
std::optional<AppPacketRequest> ldm_tick(const LdmState& state, SimTime now, NodeId node, const AppConfig& cfg);

/// Uniform generation jitter in [0, jitter_max].
SimTime draw_jitter(Engine& rng, const AppConfig& cfg);

/// CSV header of the packet log used as the predictor training corpus.
std::string packet_log_header();

}  // namespace v2x
