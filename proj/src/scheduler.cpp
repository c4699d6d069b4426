#include "v2x/scheduler.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace v2x {

const char* to_string(LearningMode m) {
  switch (m) {
    case LearningMode::None: return "None";
    case LearningMode::VisibleOnly: return "VisibleOnly";
    case LearningMode::HiddenOnly: return "HiddenOnly";
    case LearningMode::VisibleAndHidden: return "VisibleAndHidden";
  }
  return "?";
}

LearningMode learning_mode_from_string(const std::string& s) {
  for (auto m : {LearningMode::None, LearningMode::VisibleOnly, LearningMode::HiddenOnly, LearningMode::VisibleAndHidden})
    if (s == to_string(m)) return m;
  throw std::invalid_argument("unknown learning mode '" + s + "'");
}

bool mode_tracks(LearningMode m, NeighborClass c) {
  switch (m) {
    case LearningMode::None: return false;
    case LearningMode::VisibleOnly: return c == NeighborClass::Visible;
    case LearningMode::HiddenOnly: return c == NeighborClass::Hidden;
    case LearningMode::VisibleAndHidden: return true;
  }
  return false;
}

// --- neighbor table ---------------------------------------------------------

void NeighborTable::note_direct(NodeId id, SimTime t) { entries_[id].direct = t; }
void NeighborTable::note_piggyback(NodeId id, SimTime t) { entries_[id].piggyback = t; }

bool NeighborTable::heard_directly(NodeId id, SimTime now, SimTime ttl) const {
  auto it = entries_.find(id);
  return it != entries_.end() && it->second.direct && now - *it->second.direct <= ttl;
}

std::optional<NeighborRecord> NeighborTable::classify(NodeId id, SimTime now, SimTime ttl) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  const Evidence& e = it->second;
  if (e.direct && now - *e.direct <= ttl) return NeighborRecord{id, NeighborClass::Visible, *e.direct, EvidenceSource::Direct};
  if (e.piggyback && now - *e.piggyback <= ttl)
    return NeighborRecord{id, NeighborClass::Hidden, *e.piggyback, EvidenceSource::Piggyback};
  return std::nullopt;
}

std::vector<NeighborRecord> NeighborTable::snapshot(SimTime now, SimTime ttl) const {
  std::vector<NeighborRecord> out;
  out.reserve(entries_.size());
  for (const auto& [id, e] : entries_)
    if (auto r = classify(id, now, ttl)) out.push_back(*r);
  return out;
}

void NeighborTable::purge(SimTime now, SimTime ttl) {
  std::erase_if(entries_, [&](const auto& kv) {
    const Evidence& e = kv.second;
    const bool d = e.direct && now - *e.direct <= ttl;
    const bool p = e.piggyback && now - *e.piggyback <= ttl;
    return !d && !p;
  });
}

std::vector<NeighborRecord> classify_and_select(std::span<const NeighborRecord> evidence, LearningMode mode,
                                                std::size_t cap) {
  std::vector<NeighborRecord> hidden, visible;
  for (const auto& r : evidence) {
    if (!mode_tracks(mode, r.cls)) continue;
    (r.cls == NeighborClass::Hidden ? hidden : visible).push_back(r);
  }
  auto by_recency = [](const NeighborRecord& a, const NeighborRecord& b) {
    if (a.last_evidence != b.last_evidence) return a.last_evidence > b.last_evidence;
    return a.id < b.id;
  };
  std::sort(hidden.begin(), hidden.end(), by_recency);
  std::sort(visible.begin(), visible.end(), by_recency);
  std::vector<NeighborRecord> out;
  for (auto* group : {&hidden, &visible})
    for (const auto& r : *group) {
      if (out.size() >= cap) return out;
      out.push_back(r);
    }
  return out;
}

// --- gap search -------------------------------------------------------------

std::int64_t overlap_at(std::span<const BusyInterval> busy, std::int64_t c, std::int64_t own) {
  std::int64_t total = 0;
  const std::int64_t e = c + own;
  for (const auto& b : busy) {
    const std::int64_t lo = std::max(c, b.start);
    const std::int64_t hi = std::min(e, b.end);
    if (hi > lo) total += hi - lo;
  }
  return total;
}

std::pair<std::int64_t, std::int64_t> min_overlap_start(std::span<const BusyInterval> busy, std::int64_t lo,
                                                        std::int64_t hi, std::int64_t own) {
  // overlap_at is piecewise linear in c with kinks only where c or c + own
  // crosses an interval edge, so its minimum over [lo, hi] (and the earliest
  // minimizer) lies on lo, hi or one of those kinks.
  std::vector<std::int64_t> cand{lo, hi};
  cand.reserve(2 + 4 * busy.size());
  for (const auto& b : busy)
    for (std::int64_t c : {b.start - own, b.start, b.end - own, b.end})
      if (c > lo && c < hi) cand.push_back(c);
  std::sort(cand.begin(), cand.end());
  std::int64_t best_c = lo;
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  for (std::int64_t c : cand) {
    const std::int64_t ov = overlap_at(busy, c, own);
    if (ov < best) {
      best = ov;
      best_c = c;
      if (ov == 0) break;
    }
  }
  return {best_c, best};
}

GapSearchResult find_gap(const PredictedTimeline& tl, const AppPacketRequest& req, SimTime own_air, SimTime guard) {
  const std::int64_t own = own_air.us;
  const std::int64_t lo = req.created_at.us;
  const std::int64_t hi = std::min(req.deadline.us, tl.window_end().us) - own;

  std::vector<BusyInterval> busy;
  busy.reserve(tl.entries.size());
  for (const auto& e : tl.entries) busy.push_back({e.predicted_tx.us - guard.us, e.end().us + guard.us});

  GapSearchResult r;
  if (hi < lo) {
    r.chosen_tx = req.created_at;
    r.predicted_overlap_us = overlap_at(busy, lo, own);
    r.no_gap = true;
    return r;
  }
  const auto [c, ov] = min_overlap_start(busy, lo, hi, own);
  if (ov >= own && own > 0) {
    // Saturated: no candidate has any predicted idle time.
    r.chosen_tx = req.created_at;
    r.predicted_overlap_us = overlap_at(busy, lo, own);
    r.no_gap = true;
    return r;
  }
  r.chosen_tx = SimTime{c};
  r.predicted_overlap_us = ov;
  r.deferred_by_us = c - lo;
  return r;
}

PredictedTimeline filter_timeline(const PredictedTimeline& tl, LearningMode mode) {
  PredictedTimeline out;
  out.window_start = tl.window_start;
  out.window = tl.window;
  for (const auto& e : tl.entries)
    if (mode_tracks(mode, e.cls)) out.entries.push_back(e);
  return out;
}

std::string scheduling_log_header() { return "t_us,ptype,deferred_by_us,predicted_overlap_us,no_gap_flag"; }

std::string scheduling_log_line(const SchedulingLogRow& r) {
  return std::to_string(r.t.us) + "," + to_string(r.ptype) + "," + std::to_string(r.deferred_by_us) + "," +
         std::to_string(r.predicted_overlap_us) + "," + (r.no_gap ? "1" : "0");
}

void SchedulerConfig::validate() const {
  if (capacity < 1) throw std::invalid_argument("scheduler.capacity must be >= 1");
  if (guard.us < 0) throw std::invalid_argument("scheduler.guard must be >= 0");
  if (ttl.us <= 0) throw std::invalid_argument("scheduler.ttl must be > 0");
}

// --- learning node -------------------------------------------------------------

namespace {

PredictorConfig with_ttl(PredictorConfig p, SimTime ttl) {
  p.ttl = ttl;
  return p;
}

}  // namespace

LearningNode::LearningNode(NodeId self, SchedulerConfig cfg, PredictorConfig pcfg,
                           std::shared_ptr<const WeightFile> weights)
    : self_(self), cfg_(cfg), predictor_(with_ttl(pcfg, cfg.ttl), std::move(weights)) {
  cfg_.validate();
}

bool LearningNode::admit(NodeId id, NeighborClass cls) {
  if (tracked_.contains(id)) return true;
  if (!mode_tracks(cfg_.mode, cls) || tracked_.size() >= cfg_.capacity) return false;
  tracked_.insert(id);
  return true;
}

void LearningNode::on_reception(const Frame& f, SimTime now) {
  if (cfg_.mode == LearningMode::None) return;
  table_.note_direct(f.sender, now);
  if (admit(f.sender, NeighborClass::Visible)) {
    predictor_.on_direct(f.sender, f.ptype, f.tx_start, f.dynamics, now);
    predictor_.set_class(f.sender, NeighborClass::Visible);
  }
  if (f.piggyback.empty()) return;
  const auto entries = decode_piggyback(f.piggyback);
  if (!entries) {
    ++counters_.malformed_piggyback;
    return;
  }
  for (const auto& e : *entries) {
    if (e.neighbor == self_ || table_.heard_directly(e.neighbor, now, cfg_.ttl)) continue;
    ++counters_.hidden_reports;
    table_.note_piggyback(e.neighbor, now);
    if (!admit(e.neighbor, NeighborClass::Hidden)) continue;
    const SimTime last_tx = f.tx_start - SimTime::millis(e.age_ms);
    predictor_.on_hidden(e.neighbor, e.ptype, last_tx, e.interval_ms / 1000.0, now);
  }
}

void LearningNode::on_inquiry(SimTime window_start) {
  ++counters_.inquiries;
  if (cfg_.mode == LearningMode::None) {
    timeline_ = PredictedTimeline{window_start, predictor_.config().window, {}};
    return;
  }
  predictor_.expire(window_start);
  table_.purge(window_start, cfg_.ttl);
  const auto evidence = table_.snapshot(window_start, cfg_.ttl);
  const auto selected = classify_and_select(evidence, cfg_.mode, cfg_.capacity);
  std::set<NodeId> next;
  for (const auto& r : selected) {
    next.insert(r.id);
    predictor_.set_class(r.id, r.cls);
  }
  for (NodeId id : tracked_)
    if (!next.contains(id)) predictor_.erase(id);
  tracked_ = std::move(next);
  timeline_ = filter_timeline(predictor_.inquire(window_start), cfg_.mode);
  counters_.timeline_entries += timeline_.entries.size();
}

GapSearchResult LearningNode::dispatch(const AppPacketRequest& req, SimTime own_air) {
  ++counters_.dispatched;
  GapSearchResult r;
  if (cfg_.mode == LearningMode::None) {
    r.chosen_tx = req.created_at;
  } else {
    r = find_gap(timeline_, req, own_air, cfg_.guard);
  }
  if (r.no_gap) ++counters_.no_gap_events;
  if (r.deferred_by_us > 0) ++counters_.deferred;
  log_.push_back({req.created_at, req.ptype, r.deferred_by_us, r.predicted_overlap_us, r.no_gap});
  return r;
}

}  // namespace v2x
