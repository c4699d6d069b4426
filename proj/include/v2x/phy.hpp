#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "v2x/mobility.hpp"
#include "v2x/sim_time.hpp"

namespace v2x {

enum class PacketType : std::uint8_t { Cam = 0, Cpm = 1, Ldm = 2 };
inline constexpr int kPacketTypeCount = 3;

const char* to_string(PacketType t);
PacketType packet_type_from_string(const std::string& s);

struct PhyConfig {
  double tx_power_dbm = 20.0;
  double path_loss_exponent = 2.8;
  double ref_loss_db_at_1m = 47.86;
  double preamble_threshold_dbm = -95.0;
  double noise_floor_dbm = -99.0;
  double capture_sinr_db = 4.0;
  double data_rate_bps = 6e6;
  std::int64_t preamble_us = 40;
  int overhead_bytes = 36;
  /// Frames arriving weaker than this are not tracked at a node at all
  /// (neither for carrier sense nor as interferers).
  double interference_floor_dbm = -105.0;

  void validate() const;
  /// Distance at which rx power equals `dbm` (inverse of rx_power_dbm).
  double range_for_power_m(double dbm) const;
};

double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);

/// Log-distance path loss; distances below 1 m are clamped to 1 m.
double rx_power_dbm(double distance_m, const PhyConfig& cfg);
double rx_power_mw(double distance_m, const PhyConfig& cfg);

/// Frame duration: preamble + 8*(bytes + overhead)/rate, rounded up to 1 us.
SimTime airtime(int total_bytes, const PhyConfig& cfg);

/// Dynamics carried by a CAM (and logged for every frame).
struct SenderDynamics {
  double speed = 0.0;
  double heading = 0.0;
  double x = 0.0;
};

struct Frame {
  std::uint64_t id = 0;
  NodeId sender = -1;
  PacketType ptype = PacketType::Cam;
  int payload_bytes = 0;
  int piggyback_bytes = 0;
  SimTime tx_start{};
  SimTime air_time{};
  double tx_pos = 0.0;
  SenderDynamics dynamics{};
  SimTime created_at{};
  std::vector<std::uint8_t> piggyback;  // encoded block, size == piggyback_bytes

  SimTime tx_end() const { return tx_start + air_time; }
};

enum class RxOutcome { Received, LostCollision, BelowThreshold };
const char* to_string(RxOutcome o);

/// A frame overlapping the one being resolved, as seen at the receiver.
struct Overlap {
  SimTime start{};
  SimTime end{};
  double power_dbm = 0.0;
};

/// Pure capture rule: the frame survives iff its power clears the preamble
/// threshold and its SINR against the strongest overlapping interferer plus
/// noise clears capture_sinr_db. A receiver that transmits during the frame is
/// modelled as an overlap of infinite power.
RxOutcome resolve_reception(double signal_dbm, SimTime start, SimTime end, std::span<const Overlap> concurrent,
                            const PhyConfig& cfg);

/// Carrier sense: true iff the summed in-flight power reaches the preamble
/// detection threshold.
bool carrier_sensed(std::span<const double> inflight_powers_dbm, const PhyConfig& cfg);

}  // namespace v2x
