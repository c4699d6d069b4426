#include "v2x/piggyback.hpp"

#include <algorithm>
#include <unordered_set>

namespace v2x {

std::uint16_t saturating_ms(SimTime d) {
  if (d.us <= 0) return 0;
  const std::int64_t ms = (d.us + 500) / 1000;
  return static_cast<std::uint16_t>(std::min<std::int64_t>(ms, 0xFFFF));
}

std::vector<std::uint8_t> encode_piggyback(std::span<const PiggybackEntry> entries, std::size_t budget) {
  const std::size_t n = std::min(budget, entries.size());
  std::vector<std::uint8_t> out;
  out.reserve(n * kPiggybackEntryBytes);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = entries[i];
    const auto id = static_cast<std::uint32_t>(e.neighbor);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(id >> (8 * b)));
    out.push_back(static_cast<std::uint8_t>(e.ptype));
    out.push_back(static_cast<std::uint8_t>(e.age_ms));
    out.push_back(static_cast<std::uint8_t>(e.age_ms >> 8));
    out.push_back(static_cast<std::uint8_t>(e.interval_ms));
    out.push_back(static_cast<std::uint8_t>(e.interval_ms >> 8));
  }
  return out;
}

std::optional<std::vector<PiggybackEntry>> decode_piggyback(std::span<const std::uint8_t> block) {
  if (block.size() % kPiggybackEntryBytes != 0) return std::nullopt;
  std::vector<PiggybackEntry> out;
  out.reserve(block.size() / kPiggybackEntryBytes);
  for (std::size_t off = 0; off < block.size(); off += kPiggybackEntryBytes) {
    const auto* p = block.data() + off;
    if (p[4] >= kPacketTypeCount) return std::nullopt;
    PiggybackEntry e;
    const std::uint32_t id = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    e.neighbor = static_cast<NodeId>(id);
    e.ptype = static_cast<PacketType>(p[4]);
    e.age_ms = static_cast<std::uint16_t>(p[5] | (p[6] << 8));
    e.interval_ms = static_cast<std::uint16_t>(p[7] | (p[8] << 8));
    out.push_back(e);
  }
  return out;
}

void ReceptionHistory::record(NodeId sender, PacketType t, SimTime tx_start) {
  const auto k = key(sender, t);
  Record& r = records_[k];
  if (r.seen) {
    r.prev = r.last;
    r.has_prev = true;
  }
  r.seen = true;
  r.last = tx_start;
  recent_.push_back(k);
  if (recent_.size() > capacity_) recent_.pop_front();
}

std::vector<PiggybackEntry> ReceptionHistory::snapshot(SimTime now, std::size_t budget, SimTime max_age) const {
  std::vector<PiggybackEntry> out;
  if (budget == 0) return out;
  std::vector<std::uint64_t> seen;
  seen.reserve(budget);
  for (auto it = recent_.rbegin(); it != recent_.rend() && out.size() < budget; ++it) {
    if (std::find(seen.begin(), seen.end(), *it) != seen.end()) continue;
    seen.push_back(*it);
    const Record& r = records_.at(*it);
    if (now - r.last > max_age) break;  // everything further back is older still
    PiggybackEntry e;
    e.neighbor = static_cast<NodeId>(static_cast<std::uint32_t>(*it >> 8));
    e.ptype = static_cast<PacketType>(*it & 0xFF);
    e.age_ms = saturating_ms(now - r.last);
    e.interval_ms = r.has_prev ? saturating_ms(r.last - r.prev) : 0;
    out.push_back(e);
  }
  return out;
}

}  // namespace v2x
