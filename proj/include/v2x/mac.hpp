#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "v2x/event_queue.hpp"
#include "v2x/phy.hpp"
#include "v2x/rng.hpp"

namespace v2x {

enum class AcName : std::uint8_t { BestEffort = 0, Background = 1 };
inline constexpr int kAcCount = 2;

struct AccessCategory {
  AcName name = AcName::BestEffort;
  int aifsn = 6;
  int cw_min = 15;
  int cw_max = 1023;
};

struct MacConfig {
  std::int64_t slot_us = 13;
  std::int64_t sifs_us = 32;
  AccessCategory best_effort{AcName::BestEffort, 6, 15, 1023};
  AccessCategory background{AcName::Background, 9, 15, 1023};
  std::size_t queue_cap = 32;

  void validate() const;
  const AccessCategory& ac(AcName n) const { return n == AcName::BestEffort ? best_effort : background; }
  SimTime aifs(AcName n) const { return SimTime{sifs_us + ac(n).aifsn * slot_us}; }
  SimTime slot() const { return SimTime{slot_us}; }
};

AcName access_category_for(PacketType t);

/// Slotted backoff counter. Broadcast traffic never widens the contention
/// window, so every draw is uniform over [0, cw_min].
struct BackoffState {
  int remaining_slots = 0;
  bool frozen = false;
  AcName ac = AcName::BestEffort;

  enum class SlotResult { Wait, Transmit };

  template <class Eng>
  static BackoffState draw(const AccessCategory& ac, Eng& rng) {
    BackoffState b;
    b.ac = ac.name;
    b.remaining_slots = static_cast<int>(uniform_int(rng, 0, ac.cw_min));
    return b;
  }

  /// Called at the end of every slot once AIFS has elapsed. A busy slot
  /// freezes the counter; an idle slot decrements it; reaching zero grants
  /// access at this slot edge.
  SlotResult on_slot_boundary(bool slot_idle);

  /// Closed form of repeated on_slot_boundary(true) starting at `origin`
  /// (the instant AIFS completed): access instant origin + remaining*slot.
  SimTime access_time(SimTime origin, SimTime slot) const { return origin + slot * remaining_slots; }

  /// Counter after the medium turned busy at `busy_at`, having counted down
  /// idle slots since `origin`.
  void freeze_at(SimTime origin, SimTime busy_at, SimTime slot);
};

/// A MAC service data unit waiting for channel access.
struct MacPacket {
  std::uint64_t request_id = 0;
  PacketType ptype = PacketType::Cam;
  int payload_bytes = 0;
  SimTime created_at{};
  SimTime deadline{};
  AcName ac = AcName::BestEffort;
};

/// Callbacks the MAC uses to drive the simulation.
class MacHost {
 public:
  virtual ~MacHost() = default;
  virtual EventHandle schedule_mac_attempt(NodeId node, AcName ac, SimTime at) = 0;
  virtual void cancel_event(EventHandle h) = 0;
  virtual void start_transmission(NodeId node, const MacPacket& packet, SimTime now) = 0;
};

struct MacCounters {
  std::uint64_t transmissions = 0;
  std::uint64_t overflow_drops = 0;
  std::uint64_t expired_drops = 0;
  std::uint64_t internal_collisions = 0;
  std::uint64_t backoff_draws = 0;
};

/// CSMA/CA broadcast MAC with two EDCA queues per node. The medium reports
/// busy/idle transitions (carrier sense or own transmission); countdowns are
/// fast-forwarded analytically between transitions.
class EdcaMac {
 public:
  EdcaMac(MacConfig cfg, std::size_t n_nodes, MacHost& host, std::uint64_t seed);

  void enqueue(NodeId node, const MacPacket& packet, SimTime now);
  void on_attempt(NodeId node, AcName ac, SimTime now);
  void on_busy(NodeId node, SimTime now);
  void on_idle(NodeId node, SimTime now);
  /// Own transmission of `ac` finished; call before the idle notification.
  void on_tx_end(NodeId node, AcName ac, SimTime now);

  bool busy(NodeId node) const { return nodes_[idx(node)].busy; }
  bool transmitting(NodeId node) const { return nodes_[idx(node)].transmitting; }
  std::size_t queue_length(NodeId node, AcName ac) const { return nodes_[idx(node)].ac[acx(ac)].queue.size(); }
  int backoff(NodeId node, AcName ac) const { return nodes_[idx(node)].ac[acx(ac)].backoff; }
  const MacCounters& counters() const { return counters_; }
  const MacConfig& config() const { return cfg_; }

 private:
  struct AcState {
    std::deque<MacPacket> queue;
    int backoff = -1;  // -1: no backoff drawn (direct access allowed)
    EventHandle attempt{};
    SimTime attempt_time{};
    SimTime origin{};  // instant AIFS completes for the current idle period
  };
  struct NodeState {
    std::array<AcState, kAcCount> ac;
    bool busy = false;
    bool transmitting = false;
    SimTime busy_since{};
    SimTime idle_since{};
  };

  static std::size_t idx(NodeId n) { return static_cast<std::size_t>(n); }
  static std::size_t acx(AcName a) { return static_cast<std::size_t>(a); }
  int draw(NodeId node, AcName ac);
  void schedule_countdown(NodeId node, AcName ac, SimTime idle_start, SimTime now);
  void purge_expired(AcState& st, SimTime now);

  MacConfig cfg_;
  MacHost& host_;
  std::vector<NodeState> nodes_;
  std::vector<Engine> rng_;
  MacCounters counters_;
};

/// Busy time accumulated over one CBR window.
struct ChannelLoadWindow {
  SimTime window_start{};
  SimTime busy{};
  SimTime window{SimTime::millis(100)};

  double cbr() const { return static_cast<double>(busy.us) / static_cast<double>(window.us); }
};

/// Per-node busy-time accounting in fixed 100 ms windows.
class ChannelLoadMeter {
 public:
  explicit ChannelLoadMeter(std::size_t n_nodes, SimTime window = SimTime::millis(100));

  void set_busy(NodeId node, SimTime now);
  void set_idle(NodeId node, SimTime now);
  /// Closes the window ending at `window_end` for every node.
  std::vector<ChannelLoadWindow> close_window(SimTime window_end);
  SimTime window_length() const { return window_; }

 private:
  struct State {
    bool busy = false;
    SimTime busy_since{};
    SimTime accum{};
  };
  std::vector<State> nodes_;
  SimTime window_;
  SimTime window_start_{};
};

/// CBR of a completed window.
double cbr(const ChannelLoadWindow& window);

std::string cbr_series_header();

}  // namespace v2x
