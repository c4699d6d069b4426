#pragma once

#include <concepts>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "v2x/sim_time.hpp"

namespace v2x {

/// Returned by EventQueue::schedule; allows cancellation before dispatch.
struct EventHandle {
  std::uint64_t sequence{kInvalid};
  static constexpr std::uint64_t kInvalid = ~std::uint64_t{0};
  constexpr bool valid() const { return sequence != kInvalid; }
};

struct RunStatistics {
  std::uint64_t scheduled{0};
  std::uint64_t cancelled{0};
  std::uint64_t dispatched{0};
  std::uint64_t digest{0xcbf29ce484222325ULL};  // FNV-1a over (time, sequence, payload digest)
};

/// Payload types may opt into the dispatch digest by providing an ADL-visible
/// `event_digest(const Payload&) -> std::uint64_t`.
template <class P>
concept DigestablePayload = requires(const P& p) {
  { event_digest(p) } -> std::convertible_to<std::uint64_t>;
};

/// Deterministic priority queue of timestamped events. Events with equal time
/// are dispatched in ascending sequence number, i.e. in scheduling order.
template <class Payload>
class EventQueue {
 public:
  EventHandle schedule(SimTime at, Payload payload) {
    if (at < now_) {
      throw std::logic_error("event scheduled in the past: t=" + std::to_string(at.us) +
                             "us, now=" + std::to_string(now_.us) + "us");
    }
    const std::uint64_t seq = next_seq_++;
    heap_.push(Entry{at, seq, std::move(payload)});
    alive_.push_back(1);
    ++pending_;
    ++stats_.scheduled;
    return EventHandle{seq};
  }

  /// Returns false when the handle is stale (already dispatched or cancelled).
  bool cancel(EventHandle h) {
    if (!h.valid() || h.sequence >= alive_.size() || !alive_[h.sequence]) return false;
    alive_[h.sequence] = 0;
    --pending_;
    ++stats_.cancelled;
    return true;
  }

  bool is_pending(EventHandle h) const {
    return h.valid() && h.sequence < alive_.size() && alive_[h.sequence];
  }

  SimTime now() const { return now_; }
  std::size_t size() const { return pending_; }
  bool empty() const { return pending_ == 0; }
  const RunStatistics& statistics() const { return stats_; }

  /// Dispatches every pending event with time <= t_end in (time, sequence)
  /// order, then advances the clock to t_end.
  template <class Dispatch>
  RunStatistics run_until(SimTime t_end, Dispatch&& dispatch) {
    while (!heap_.empty() && heap_.top().time <= t_end) {
      Entry e = heap_.top();
      heap_.pop();
      if (!alive_[e.sequence]) continue;
      alive_[e.sequence] = 0;
      --pending_;
      now_ = e.time;
      ++stats_.dispatched;
      mix(static_cast<std::uint64_t>(e.time.us));
      mix(e.sequence);
      if constexpr (DigestablePayload<Payload>) mix(event_digest(e.payload));
      dispatch(e.payload);
    }
    if (now_ < t_end) now_ = t_end;
    return stats_;
  }

 private:
  struct Entry {
    SimTime time;
    std::uint64_t sequence;
    Payload payload;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.sequence > b.sequence;
    }
  };

  void mix(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      stats_.digest ^= (v >> (8 * i)) & 0xffu;
      stats_.digest *= 0x100000001b3ULL;
    }
  }

  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  std::vector<std::uint8_t> alive_;
  std::uint64_t next_seq_{0};
  std::size_t pending_{0};
  SimTime now_{};
  RunStatistics stats_{};
};

}  // namespace v2x
