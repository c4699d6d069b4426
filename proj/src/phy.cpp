#include "v2x/phy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace v2x {

const char* to_string(PacketType t) {
  switch (t) {
    case PacketType::Cam: return "CAM";
    case PacketType::Cpm: return "CPM";
    case PacketType::Ldm: return "LDM";
  }
  return "?";
}

PacketType packet_type_from_string(const std::string& s) {
  if (s == "CAM") return PacketType::Cam;
  if (s == "CPM") return PacketType::Cpm;
  if (s == "LDM") return PacketType::Ldm;
  throw std::invalid_argument("unknown packet type '" + s + "'");
}

const char* to_string(RxOutcome o) {
  switch (o) {
    case RxOutcome::Received: return "received";
    case RxOutcome::LostCollision: return "lost_collision";
    case RxOutcome::BelowThreshold: return "below_threshold";
  }
  return "?";
}

void PhyConfig::validate() const {
  if (!(preamble_threshold_dbm > noise_floor_dbm))
    throw std::invalid_argument("phy.preamble_threshold_dbm must exceed phy.noise_floor_dbm");
  if (!(data_rate_bps > 0.0)) throw std::invalid_argument("phy.data_rate_bps must be > 0");
  if (path_loss_exponent <= 0.0) throw std::invalid_argument("phy.path_loss_exponent must be > 0");
  if (preamble_us < 0 || overhead_bytes < 0) throw std::invalid_argument("phy framing constants must be >= 0");
}

double PhyConfig::range_for_power_m(double dbm) const {
  return std::pow(10.0, (tx_power_dbm - ref_loss_db_at_1m - dbm) / (10.0 * path_loss_exponent));
}

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

double mw_to_dbm(double mw) {
  if (mw <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(mw);
}

double rx_power_dbm(double d, const PhyConfig& cfg) {
  d = std::max(d, 1.0);
  return cfg.tx_power_dbm - cfg.ref_loss_db_at_1m - 10.0 * cfg.path_loss_exponent * std::log10(d);
}

double rx_power_mw(double d, const PhyConfig& cfg) {
  d = std::max(d, 1.0);
  return dbm_to_mw(cfg.tx_power_dbm - cfg.ref_loss_db_at_1m) * std::exp(-cfg.path_loss_exponent * std::log(d));
}

SimTime airtime(int total_bytes, const PhyConfig& cfg) {
  if (total_bytes <= 0) throw std::invalid_argument("airtime: total_bytes must be > 0");
  const double bits = 8.0 * static_cast<double>(total_bytes + cfg.overhead_bytes);
  const double us = bits * 1e6 / cfg.data_rate_bps;
  // Guard against 447.99999 style representation error before ceil.
  const auto body = static_cast<std::int64_t>(std::ceil(us - 1e-9));
  return SimTime{cfg.preamble_us + body};
}

RxOutcome resolve_reception(double signal_dbm, SimTime start, SimTime end, std::span<const Overlap> concurrent,
                            const PhyConfig& cfg) {
  if (signal_dbm < cfg.preamble_threshold_dbm) return RxOutcome::BelowThreshold;
  double strongest_mw = 0.0;
  bool overlapped = false;
  for (const Overlap& o : concurrent) {
    if (o.end <= start || o.start >= end) continue;
    overlapped = true;
    strongest_mw = std::max(strongest_mw, dbm_to_mw(o.power_dbm));
  }
  const double sinr_db = signal_dbm - mw_to_dbm(strongest_mw + dbm_to_mw(cfg.noise_floor_dbm));
  if (sinr_db >= cfg.capture_sinr_db) return RxOutcome::Received;
  return overlapped ? RxOutcome::LostCollision : RxOutcome::BelowThreshold;
}

bool carrier_sensed(std::span<const double> inflight_powers_dbm, const PhyConfig& cfg) {
  double sum = 0.0;
  for (double p : inflight_powers_dbm) sum += dbm_to_mw(p);
  return sum > 0.0 && mw_to_dbm(sum) >= cfg.preamble_threshold_dbm - 1e-9;
}

}  // namespace v2x
