#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "v2x/apps.hpp"
#include "v2x/piggyback.hpp"
#include "v2x/predictor.hpp"

namespace v2x {

enum class LearningMode { None, VisibleOnly, HiddenOnly, VisibleAndHidden };

const char* to_string(LearningMode m);
LearningMode learning_mode_from_string(const std::string& s);
bool mode_tracks(LearningMode m, NeighborClass c);

enum class EvidenceSource : std::uint8_t { Direct, Piggyback };

struct NeighborRecord {
  NodeId id = -1;
  NeighborClass cls = NeighborClass::Visible;
  SimTime last_evidence{};
  EvidenceSource source = EvidenceSource::Direct;
};

/// Evidence the learning node has about every neighbor. Visible iff heard
/// directly within TTL; hidden iff only reported via piggyback within TTL.
class NeighborTable {
 public:
  void note_direct(NodeId id, SimTime t);
  void note_piggyback(NodeId id, SimTime t);
  bool heard_directly(NodeId id, SimTime now, SimTime ttl) const;
  std::optional<NeighborRecord> classify(NodeId id, SimTime now, SimTime ttl) const;
  /// All neighbors with live evidence, ordered by id.
  std::vector<NeighborRecord> snapshot(SimTime now, SimTime ttl) const;
  void purge(SimTime now, SimTime ttl);
  std::size_t size() const { return entries_.size(); }

 private:
  struct Evidence {
    std::optional<SimTime> direct;
    std::optional<SimTime> piggyback;
  };
  std::map<NodeId, Evidence> entries_;
};

/// Keeps up to `cap` class-eligible neighbors: hidden first, then visible,
/// each group by most recent evidence (ties by id).
std::vector<NeighborRecord> classify_and_select(std::span<const NeighborRecord> evidence, LearningMode mode,
                                                std::size_t cap);

struct GapSearchResult {
  SimTime chosen_tx{};
  std::int64_t predicted_overlap_us = 0;
  std::int64_t deferred_by_us = 0;
  bool no_gap = false;
};

/// Busy interval [start, end) in microseconds.
struct BusyInterval {
  std::int64_t start = 0;
  std::int64_t end = 0;
};

/// Total overlap of [c, c + own) with every interval (intervals may overlap
/// each other; each counts separately).
std::int64_t overlap_at(std::span<const BusyInterval> busy, std::int64_t c, std::int64_t own);

/// Earliest start in [lo, hi] minimizing overlap_at. Requires lo <= hi.
std::pair<std::int64_t, std::int64_t> min_overlap_start(std::span<const BusyInterval> busy, std::int64_t lo,
                                                        std::int64_t hi, std::int64_t own);

/// Picks the start in [created, min(deadline, window_end) - own_air] with
/// least overlap against the timeline inflated by +-guard. Degrades to an
/// immediate send flagged no_gap when nothing fits or every candidate is
/// fully covered.
GapSearchResult find_gap(const PredictedTimeline& timeline, const AppPacketRequest& req, SimTime own_air,
                         SimTime guard);

/// Entries of the classes the mode uses.
PredictedTimeline filter_timeline(const PredictedTimeline& tl, LearningMode mode);

struct SchedulingLogRow {
  SimTime t{};
  PacketType ptype = PacketType::Cam;
  std::int64_t deferred_by_us = 0;
  std::int64_t predicted_overlap_us = 0;
  bool no_gap = false;
};
std::string scheduling_log_header();
std::string scheduling_log_line(const SchedulingLogRow& r);

struct SchedulerConfig {
  LearningMode mode = LearningMode::None;
  std::size_t capacity = 100;
  SimTime guard = SimTime::micros(2500);
  SimTime ttl = SimTime::millis(1500);

  void validate() const;
};

struct LearningNodeCounters {
  std::uint64_t dispatched = 0;
  std::uint64_t deferred = 0;
  std::uint64_t no_gap_events = 0;
  std::uint64_t malformed_piggyback = 0;
  std::uint64_t hidden_reports = 0;
  std::uint64_t inquiries = 0;
  std::uint64_t timeline_entries = 0;
};

/// The learning node's application scheduler: owns the neighbor table, the
/// main predictor and the current predicted timeline.
class LearningNode {
 public:
  LearningNode(NodeId self, SchedulerConfig cfg, PredictorConfig pcfg, std::shared_ptr<const WeightFile> weights);

  /// A frame decoded directly at `now` (its end of reception).
  void on_reception(const Frame& frame, SimTime now);
  /// Rebuilds the tracked set and the timeline for [window_start, +window).
  void on_inquiry(SimTime window_start);
  /// Chooses the generation instant for `req`; mode None returns created_at.
  GapSearchResult dispatch(const AppPacketRequest& req, SimTime own_air);

  NodeId id() const { return self_; }
  LearningMode mode() const { return cfg_.mode; }
  const PredictedTimeline& timeline() const { return timeline_; }
  const MainPredictor& predictor() const { return predictor_; }
  const NeighborTable& table() const { return table_; }
  const std::set<NodeId>& tracked() const { return tracked_; }
  const LearningNodeCounters& counters() const { return counters_; }
  const std::vector<SchedulingLogRow>& log() const { return log_; }

 private:
  bool admit(NodeId id, NeighborClass cls);

  NodeId self_;
  SchedulerConfig cfg_;
  NeighborTable table_;
  MainPredictor predictor_;
  PredictedTimeline timeline_;
  std::set<NodeId> tracked_;
  LearningNodeCounters counters_;
  std::vector<SchedulingLogRow> log_;
};

}  // namespace v2x
