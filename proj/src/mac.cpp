#include "v2x/mac.hpp"

#include <stdexcept>

namespace v2x {

void MacConfig::validate() const {
  for (const AccessCategory* a : {&best_effort, &background}) {
    if (a->cw_min < 0 || a->cw_min > a->cw_max) throw std::invalid_argument("mac: cw_min must be in [0, cw_max]");
    if (a->aifsn < 1) throw std::invalid_argument("mac: aifsn must be >= 1");
  }
  if (!(best_effort.aifsn < background.aifsn))
    throw std::invalid_argument("mac: BestEffort aifsn must be smaller than Background aifsn");
  if (slot_us <= 0 || sifs_us < 0) throw std::invalid_argument("mac: bad slot/sifs");
  if (queue_cap == 0) throw std::invalid_argument("mac.queue_cap must be >= 1");
}

AcName access_category_for(PacketType t) {
  return t == PacketType::Cam ? AcName::BestEffort : AcName::Background;
}

BackoffState::SlotResult BackoffState::on_slot_boundary(bool slot_idle) {
  if (!slot_idle) {
    frozen = true;
    return SlotResult::Wait;
  }
  frozen = false;
  if (remaining_slots > 0) --remaining_slots;
  return remaining_slots == 0 ? SlotResult::Transmit : SlotResult::Wait;
}

void BackoffState::freeze_at(SimTime origin, SimTime busy_at, SimTime slot) {
  frozen = true;
  if (busy_at <= origin) return;
  const auto counted = static_cast<int>((busy_at - origin).us / slot.us);
  remaining_slots = counted >= remaining_slots ? 0 : remaining_slots - counted;
}

EdcaMac::EdcaMac(MacConfig cfg, std::size_t n_nodes, MacHost& host, std::uint64_t seed)
    : cfg_(cfg), host_(host), nodes_(n_nodes) {
  cfg_.validate();
  rng_.reserve(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) rng_.push_back(make_engine(seed, Stream::Mac, i));
}

int EdcaMac::draw(NodeId node, AcName ac) {
  ++counters_.backoff_draws;
  return BackoffState::draw(cfg_.ac(ac), rng_[idx(node)]).remaining_slots;
}

void EdcaMac::purge_expired(AcState& st, SimTime now) {
  while (!st.queue.empty() && st.queue.front().deadline < now) {
    st.queue.pop_front();
    ++counters_.expired_drops;
  }
}

void EdcaMac::schedule_countdown(NodeId node, AcName ac, SimTime idle_start, SimTime now) {
  AcState& st = nodes_[idx(node)].ac[acx(ac)];
  if (st.backoff < 0) st.backoff = draw(node, ac);
  st.origin = idle_start + cfg_.aifs(ac);
  BackoffState b{st.backoff, false, ac};
  st.attempt_time = max(b.access_time(st.origin, cfg_.slot()), now);
  st.attempt = host_.schedule_mac_attempt(node, ac, st.attempt_time);
}

void EdcaMac::enqueue(NodeId node, const MacPacket& packet, SimTime now) {
  NodeState& ns = nodes_[idx(node)];
  AcState& st = ns.ac[acx(packet.ac)];
  purge_expired(st, now);
  if (st.queue.size() >= cfg_.queue_cap) {
    st.queue.pop_front();
    ++counters_.overflow_drops;
  }
  const bool was_empty = st.queue.empty();
  st.queue.push_back(packet);
  if (!was_empty || st.attempt.valid()) return;

  if (ns.busy) {
    // Medium busy on arrival: contend with a fresh backoff once it clears.
    if (st.backoff < 0) st.backoff = draw(node, packet.ac);
    return;
  }
  if (st.backoff >= 0) {
    schedule_countdown(node, packet.ac, ns.idle_since, now);
    return;
  }
  // Idle medium: transmit as soon as it has been idle for AIFS, no backoff.
  st.origin = ns.idle_since + cfg_.aifs(packet.ac);
  st.attempt_time = max(now, st.origin);
  st.attempt = host_.schedule_mac_attempt(node, packet.ac, st.attempt_time);
}

void EdcaMac::on_busy(NodeId node, SimTime now) {
  NodeState& ns = nodes_[idx(node)];
  if (ns.busy) return;
  ns.busy = true;
  ns.busy_since = now;
  for (int a = 0; a < kAcCount; ++a) {
    AcState& st = ns.ac[static_cast<std::size_t>(a)];
    if (!st.attempt.valid()) continue;
    // An access decided for this very instant cannot have sensed the new frame.
    if (st.attempt_time <= now) continue;
    host_.cancel_event(st.attempt);
    st.attempt = EventHandle{};
    if (st.backoff < 0) {
      st.backoff = draw(node, static_cast<AcName>(a));
    } else {
      BackoffState b{st.backoff, false, static_cast<AcName>(a)};
      b.freeze_at(st.origin, now, cfg_.slot());
      st.backoff = b.remaining_slots;
    }
  }
}

void EdcaMac::on_idle(NodeId node, SimTime now) {
  NodeState& ns = nodes_[idx(node)];
  if (!ns.busy) return;
  ns.busy = false;
  ns.idle_since = now;
  for (int a = 0; a < kAcCount; ++a) {
    AcState& st = ns.ac[static_cast<std::size_t>(a)];
    purge_expired(st, now);
    if (st.queue.empty()) {
      st.backoff = -1;
      continue;
    }
    if (st.attempt.valid()) continue;
    schedule_countdown(node, static_cast<AcName>(a), now, now);
  }
}

void EdcaMac::on_attempt(NodeId node, AcName ac, SimTime now) {
  NodeState& ns = nodes_[idx(node)];
  AcState& st = ns.ac[acx(ac)];
  st.attempt = EventHandle{};

  purge_expired(st, now);
  if (st.queue.empty()) {
    st.backoff = -1;
    return;
  }

  // Internal collision: the higher-priority queue wins the same slot, the
  // loser redraws without widening its window.
  const AcName other = ac == AcName::BestEffort ? AcName::Background : AcName::BestEffort;
  const AcState& ot = ns.ac[acx(other)];
  const bool other_same_slot = ot.attempt.valid() && ot.attempt_time == now && other == AcName::BestEffort;
  if (ns.transmitting || other_same_slot) {
    ++counters_.internal_collisions;
    st.backoff = draw(node, ac);
    if (!ns.busy) schedule_countdown(node, ac, now, now);
    return;
  }
  if (ns.busy && ns.busy_since < now) {
    // Stale grant; the busy transition should have cancelled it.
    throw std::logic_error("MAC access granted while medium busy");
  }

  MacPacket pkt = st.queue.front();
  st.queue.pop_front();
  st.backoff = -1;
  ns.transmitting = true;
  ++counters_.transmissions;
  host_.start_transmission(node, pkt, now);
}

void EdcaMac::on_tx_end(NodeId node, AcName ac, SimTime now) {
  NodeState& ns = nodes_[idx(node)];
  ns.transmitting = false;
  AcState& st = ns.ac[acx(ac)];
  purge_expired(st, now);
  st.backoff = st.queue.empty() ? -1 : draw(node, ac);
}

ChannelLoadMeter::ChannelLoadMeter(std::size_t n_nodes, SimTime window) : nodes_(n_nodes), window_(window) {}

void ChannelLoadMeter::set_busy(NodeId node, SimTime now) {
  State& s = nodes_[static_cast<std::size_t>(node)];
  if (s.busy) return;
  s.busy = true;
  s.busy_since = now;
}

void ChannelLoadMeter::set_idle(NodeId node, SimTime now) {
  State& s = nodes_[static_cast<std::size_t>(node)];
  if (!s.busy) return;
  s.busy = false;
  s.accum += now - max(s.busy_since, window_start_);
}

std::vector<ChannelLoadWindow> ChannelLoadMeter::close_window(SimTime window_end) {
  std::vector<ChannelLoadWindow> out(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    State& s = nodes_[i];
    SimTime busy = s.accum;
    if (s.busy) busy += window_end - max(s.busy_since, window_start_);
    out[i] = ChannelLoadWindow{window_start_, busy, window_end - window_start_};
    s.accum = SimTime{};
  }
  window_start_ = window_end;
  return out;
}

double cbr(const ChannelLoadWindow& window) { return window.cbr(); }

std::string cbr_series_header() { return "t_ms,node,cbr"; }

}  // namespace v2x
