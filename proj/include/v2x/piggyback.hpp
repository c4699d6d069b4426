#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "v2x/phy.hpp"

namespace v2x {

/// One neighbor-reception summary carried inside an outgoing frame.
/// Wire layout (little-endian, 9 bytes): id u32 | ptype u8 | age_ms u16 | interval_ms u16.
struct PiggybackEntry {
  NodeId neighbor = 0;
  PacketType ptype = PacketType::Cam;
  std::uint16_t age_ms = 0;       // saturating at 65535
  std::uint16_t interval_ms = 0;  // 0 = unknown, saturating at 65535

  bool operator==(const PiggybackEntry&) const = default;
};

inline constexpr std::size_t kPiggybackEntryBytes = 9;

/// Nearest-millisecond conversion saturating into u16.
std::uint16_t saturating_ms(SimTime d);

/// Encodes the first min(budget, entries.size()) entries.
std::vector<std::uint8_t> encode_piggyback(std::span<const PiggybackEntry> entries, std::size_t budget);

/// nullopt when the block length is not a multiple of the entry size or an
/// entry carries an unknown packet type.
std::optional<std::vector<PiggybackEntry>> decode_piggyback(std::span<const std::uint8_t> block);

/// Last-reception records a node keeps about its own neighbors.
class ReceptionHistory {
 public:
  explicit ReceptionHistory(std::size_t recent_capacity = 128) : capacity_(recent_capacity) {}

  void record(NodeId sender, PacketType t, SimTime tx_start);

  /// Up to `budget` distinct (neighbor, type) records, most recent first,
  /// skipping records older than `max_age`. Ages are relative to `now`.
  std::vector<PiggybackEntry> snapshot(SimTime now, std::size_t budget, SimTime max_age) const;

  std::size_t tracked_pairs() const { return records_.size(); }

 private:
  struct Record {
    SimTime last{};
    SimTime prev{};
    bool has_prev = false;
    bool seen = false;
  };
  static std::uint64_t key(NodeId n, PacketType t) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(n)) << 8) | static_cast<std::uint64_t>(t);
  }

  std::size_t capacity_;
  std::unordered_map<std::uint64_t, Record> records_;
  std::deque<std::uint64_t> recent_;  // newest at the back, may contain duplicates
};

}  // namespace v2x
