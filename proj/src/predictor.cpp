#include "v2x/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace v2x {

const char* to_string(NeighborClass c) { return c == NeighborClass::Visible ? "visible" : "hidden"; }

bool is_periodic(PacketType t) { return t != PacketType::Cpm; }

std::int64_t SubPredictor::Slot::observe_period(SimTime tx) {
  const double dt = (tx - last_tx).to_seconds();
  if (periods > 0 && period_s > 0.0) {
    const auto k = std::max<std::int64_t>(1, std::llround(dt / period_s));
    if (std::fabs(dt - static_cast<double>(k) * period_s) <= 0.25 * period_s) {
      periods += k;
      period_s = (tx - anchor).to_seconds() / static_cast<double>(periods);
      return k;
    }
  }
  anchor = last_tx;
  periods = 1;
  period_s = dt;
  return 1;
}

MainPredictor::MainPredictor(PredictorConfig cfg, std::shared_ptr<const WeightFile> weights)
    : cfg_(cfg), weights_(std::move(weights)) {
  if (cfg_.kind == PredictorKind::Recurrent && !weights_)
    throw std::invalid_argument("MainPredictor: recurrent predictor needs a weight file");
  if (cfg_.ttl.us <= 0 || cfg_.window.us <= 0) throw std::invalid_argument("MainPredictor: ttl/window must be > 0");
}

const TypeModel* MainPredictor::model_for(PacketType t, FeatureSet fs) const {
  if (cfg_.kind == PredictorKind::Baseline || !weights_) return nullptr;
  const TypeModel* m = weights_->find(t, fs);
  if ((m == nullptr || m->fallback) && fs == FeatureSet::Dynamics) m = weights_->find(t, FeatureSet::Interval);
  return (m == nullptr || m->fallback) ? nullptr : m;
}

SubPredictor& MainPredictor::get_or_create(NodeId neighbor, NeighborClass cls, SimTime now) {
  auto [it, inserted] = subs_.try_emplace(neighbor);
  SubPredictor& sp = it->second;
  if (inserted) {
    sp.neighbor = neighbor;
    sp.cls = cls;
  }
  sp.ttl_expiry = now + cfg_.ttl;
  return sp;
}

double MainPredictor::predict_interval(SubPredictor::Slot& slot, PacketType t, FeatureSet fs, double dt_prev_s,
                                       const SenderDynamics& cur, const SenderDynamics& prev) {
  ++predictions_;
  const double dt = std::min(dt_prev_s, cfg_.max_interval_s);
  const TypeModel* m = model_for(t, fs);
  if (m == nullptr) return std::max(dt, kMinPredictedInterval);
  const FeatureSet used = m->features;
  if (!slot.state_ready || slot.active != used) {
    slot.state = m->net.initial_state();
    slot.active = used;
    slot.state_ready = true;
  }
  const auto raw = raw_features(used, dt, cur, prev);
  const double y = m->net.step(m->scaler.scale(raw), slot.state);
  return m->scaler.unscale_target(y);
}

void MainPredictor::on_direct(NodeId neighbor, PacketType t, SimTime tx_time, const SenderDynamics& dyn, SimTime now) {
  SubPredictor& sp = get_or_create(neighbor, NeighborClass::Visible, now);
  auto& slot = sp.slot(t);
  if (!slot.seen) {
    slot.seen = true;
    slot.last_tx = tx_time;
    slot.last_dyn = dyn;
    slot.has_dyn = true;
    return;
  }
  if (tx_time <= slot.last_tx) return;
  const double dt = (tx_time - slot.last_tx).to_seconds();
  const FeatureSet fs = t == PacketType::Cam ? FeatureSet::Dynamics : FeatureSet::Interval;
  const SenderDynamics prev = slot.has_dyn ? slot.last_dyn : dyn;
  // A gap spanning several periods means missed frames; the network was
  // trained on consecutive intervals, so it sees the per-period interval.
  const std::int64_t k = cfg_.fixed_rate[static_cast<std::size_t>(t)] ? slot.observe_period(tx_time) : 1;
  slot.interval_s = predict_interval(slot, t, fs, dt / static_cast<double>(k), dyn, prev);
  slot.last_tx = tx_time;
  slot.last_dyn = dyn;
  slot.has_dyn = true;
  slot.merged_reports = 1;
  slot.next_tx = tx_time + SimTime::from_seconds(slot.interval_s);
}

void MainPredictor::on_hidden(NodeId neighbor, PacketType t, SimTime last_tx, double reported_interval_s, SimTime now) {
  SubPredictor& sp = get_or_create(neighbor, NeighborClass::Hidden, now);
  auto& slot = sp.slot(t);
  if (slot.seen) {
    const SimTime gap = last_tx - slot.last_tx;
    if (std::llabs(gap.us) <= cfg_.hidden_dedupe.us) {
      // Another report of the same frame: average the reconstructed time.
      const int n = slot.merged_reports;
      const SimTime refined{slot.last_tx.us + (gap.us / (n + 1))};
      if (slot.next_tx) *slot.next_tx += refined - slot.last_tx;
      slot.last_tx = refined;
      slot.merged_reports = n + 1;
      return;
    }
    if (last_tx < slot.last_tx) return;  // stale report
  }
  double dt = reported_interval_s;
  if (!(dt > 0.0) && slot.seen) dt = (last_tx - slot.last_tx).to_seconds();
  const bool can_predict = dt > 0.0;
  if (slot.seen && cfg_.fixed_rate[static_cast<std::size_t>(t)]) slot.observe_period(last_tx);
  if (can_predict && slot.periods > 0 && slot.period_s > 0.0)
    dt /= static_cast<double>(std::max<std::int64_t>(1, std::llround(dt / slot.period_s)));
  slot.seen = true;
  slot.last_tx = last_tx;
  slot.has_dyn = false;
  slot.merged_reports = 1;
  if (!can_predict) return;
  const SenderDynamics none{};
  slot.interval_s = predict_interval(slot, t, FeatureSet::Interval, dt, none, none);
  slot.next_tx = last_tx + SimTime::from_seconds(slot.interval_s);
}

void MainPredictor::expire(SimTime now) {
  std::erase_if(subs_, [&](const auto& kv) { return kv.second.ttl_expiry < now; });
}

void MainPredictor::erase(NodeId neighbor) { subs_.erase(neighbor); }

void MainPredictor::set_class(NodeId neighbor, NeighborClass cls) {
  if (auto it = subs_.find(neighbor); it != subs_.end()) it->second.cls = cls;
}

const SubPredictor* MainPredictor::find(NodeId neighbor) const {
  auto it = subs_.find(neighbor);
  return it == subs_.end() ? nullptr : &it->second;
}

std::optional<SimTime> MainPredictor::next_prediction(NodeId neighbor, PacketType t) const {
  const SubPredictor* sp = find(neighbor);
  if (sp == nullptr) return std::nullopt;
  return sp->slot(t).next_tx;
}

namespace {

void sort_timeline(PredictedTimeline& tl) {
  std::sort(tl.entries.begin(), tl.entries.end(), [](const TimelineEntry& a, const TimelineEntry& b) {
    if (a.predicted_tx != b.predicted_tx) return a.predicted_tx < b.predicted_tx;
    if (a.neighbor != b.neighbor) return a.neighbor < b.neighbor;
    return a.ptype < b.ptype;
  });
}

// Emits next (rolled forward for periodic types) and any further periodic
// repetitions that still fall inside the window.
// `interval_s` <= 0 disables rolling and repetition.
void emit(PredictedTimeline& tl, NodeId n, PacketType t, SimTime& next, double interval_s, NeighborClass cls,
          const PredictorConfig& cfg) {
  const SimTime ws = tl.window_start;
  const SimTime we = tl.window_end();
  const bool periodic = is_periodic(t) && interval_s > 0.0;
  const SimTime step = max(SimTime::from_seconds(interval_s), SimTime::from_seconds(kMinPredictedInterval));
  if (next < ws) {
    if (!periodic) return;
    const std::int64_t k = (ws - next).us / step.us + (((ws - next).us % step.us) != 0 ? 1 : 0);
    next += step * k;
  }
  const SimTime air = cfg.nominal_air[static_cast<std::size_t>(t)];
  for (SimTime p = next; p < we; p += step) {
    tl.entries.push_back(TimelineEntry{n, t, p, air, cls});
    if (!periodic) break;
  }
}

}  // namespace

PredictedTimeline MainPredictor::inquire(SimTime window_start) {
  PredictedTimeline tl;
  tl.window_start = window_start;
  tl.window = cfg_.window;
  for (auto& [id, sp] : subs_) {
    for (int k = 0; k < kPacketTypeCount; ++k) {
      auto& slot = sp.slots[static_cast<std::size_t>(k)];
      if (!slot.next_tx) continue;
      // Fixed-rate streams roll by their long-run period once one is known,
      // others by the last predicted interval.
      const bool fixed = cfg_.fixed_rate[static_cast<std::size_t>(k)];
      const double step = fixed ? (slot.periods > 0 ? slot.period_s : 0.0) : slot.interval_s;
      emit(tl, id, static_cast<PacketType>(k), *slot.next_tx, step, sp.cls, cfg_);
    }
  }
  sort_timeline(tl);
  return tl;
}

PredictedTimeline baseline_predict(const std::vector<PairHistory>& histories, SimTime window_start,
                                   const PredictorConfig& cfg) {
  PredictedTimeline tl;
  tl.window_start = window_start;
  tl.window = cfg.window;
  for (const auto& h : histories) {
    const auto n = h.tx_times.size();
    if (n < 2) continue;
    const SimTime interval = h.tx_times[n - 1] - h.tx_times[n - 2];
    if (interval.us <= 0) continue;
    SimTime next = h.tx_times[n - 1] + interval;
    emit(tl, h.neighbor, h.ptype, next, interval.to_seconds(), h.cls, cfg);
  }
  sort_timeline(tl);
  return tl;
}

std::vector<PredictionError> evaluate_predictor(const std::vector<PacketLogRow>& rows,
                                                std::shared_ptr<const WeightFile> weights, PredictorKind kind,
                                                double max_interval_s) {
  std::vector<const PacketLogRow*> order;
  order.reserve(rows.size());
  for (const auto& r : rows) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(), [](const PacketLogRow* a, const PacketLogRow* b) { return a->t < b->t; });

  PredictorConfig cfg;
  cfg.kind = kind;
  cfg.ttl = SimTime::seconds(1'000'000);
  cfg.max_interval_s = max_interval_s;
  // The log holds every transmission, so no gap hides a missed frame.
  cfg.fixed_rate.fill(false);
  MainPredictor mp(cfg, std::move(weights));
  std::vector<PredictionError> out;
  for (const PacketLogRow* r : order) {
    if (auto pred = mp.next_prediction(r->sender, r->ptype)) {
      out.push_back({r->sender, r->ptype, std::fabs(static_cast<double>((r->t - *pred).us)) / 1000.0});
    }
    mp.on_direct(r->sender, r->ptype, r->t, r->dynamics, r->t);
  }
  return out;
}

}  // namespace v2x
