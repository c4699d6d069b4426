#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "v2x/features.hpp"
#include "v2x/trainer.hpp"
#include "v2x/weight_file.hpp"

namespace v2x {

enum class NeighborClass : std::uint8_t { Visible = 0, Hidden = 1 };
const char* to_string(NeighborClass c);

enum class PredictorKind { Recurrent, Baseline };

struct TimelineEntry {
  NodeId neighbor = -1;
  PacketType ptype = PacketType::Cam;
  SimTime predicted_tx{};
  SimTime air_time{};
  NeighborClass cls = NeighborClass::Visible;

  SimTime end() const { return predicted_tx + air_time; }
};

/// Predicted transmissions inside [window_start, window_start + window), sorted by start.
struct PredictedTimeline {
  SimTime window_start{};
  SimTime window{SimTime::millis(100)};
  std::vector<TimelineEntry> entries;

  SimTime window_end() const { return window_start + window; }
};

struct PredictorConfig {
  SimTime ttl = SimTime::millis(1500);
  SimTime window = SimTime::millis(100);
  PredictorKind kind = PredictorKind::Recurrent;
  /// Timeline air time per packet type (nominal size, including piggyback).
  std::array<SimTime, kPacketTypeCount> nominal_air{SimTime::micros(488), SimTime::micros(755), SimTime::micros(1088)};
  /// Hidden-node reports closer than this to the known last transmission
  /// describe the same frame and only refine its time.
  SimTime hidden_dedupe = SimTime::millis(25);
  /// Must match the clip used when the weights were trained.
  double max_interval_s = 2.0;
  /// Types generated at a fixed rate, indexed by PacketType. For these a gap
  /// spanning k estimated periods is read as k - 1 missed frames. Triggered
  /// CAMs are not fixed rate: their intervals are multiples of the check
  /// period, so a long gap is usually a genuine interval.
  std::array<bool, kPacketTypeCount> fixed_rate{true, false, true};
};

/// Per-neighbor bundle: one recurrent state per packet type plus TTL.
class SubPredictor {
 public:
  struct Slot {
    bool seen = false;
    SimTime last_tx{};
    SenderDynamics last_dyn{};
    bool has_dyn = false;
    std::optional<SimTime> next_tx;
    double interval_s = 0.0;
    FeatureSet active = FeatureSet::Interval;
    bool state_ready = false;
    LstmState state;
    int merged_reports = 1;
    // Long-run period of a periodic stream: (last_tx - anchor) / periods.
    // Missed frames count as whole periods; an interval that is no near
    // multiple of the estimate restarts it.
    SimTime anchor{};
    std::int64_t periods = 0;
    double period_s = 0.0;

    /// Updates the period estimate with a transmission at `tx` following
    /// `last_tx`; returns the number of periods the gap spans (>= 1).
    std::int64_t observe_period(SimTime tx);
  };

  NodeId neighbor = -1;
  SimTime ttl_expiry{};
  NeighborClass cls = NeighborClass::Visible;
  std::array<Slot, kPacketTypeCount> slots{};

  Slot& slot(PacketType t) { return slots[static_cast<std::size_t>(t)]; }
  const Slot& slot(PacketType t) const { return slots[static_cast<std::size_t>(t)]; }
};

class MainPredictor {
 public:
  /// `weights` may be null only for PredictorKind::Baseline.
  MainPredictor(PredictorConfig cfg, std::shared_ptr<const WeightFile> weights);

  /// Direct reception of a frame transmitted at `tx_time`.
  void on_direct(NodeId neighbor, PacketType t, SimTime tx_time, const SenderDynamics& dyn, SimTime now);
  /// Piggyback evidence: the hidden neighbor transmitted at `last_tx`; the
  /// reporter observed `reported_interval_s` before that (0 = unknown).
  void on_hidden(NodeId neighbor, PacketType t, SimTime last_tx, double reported_interval_s, SimTime now);

  /// Deletes sub-predictors whose TTL passed.
  void expire(SimTime now);
  void erase(NodeId neighbor);
  void set_class(NodeId neighbor, NeighborClass cls);

  bool contains(NodeId neighbor) const { return subs_.contains(neighbor); }
  std::size_t size() const { return subs_.size(); }
  const SubPredictor* find(NodeId neighbor) const;
  std::optional<SimTime> next_prediction(NodeId neighbor, PacketType t) const;

  /// Timeline for [window_start, window_start + window). Periodic types (CAM,
  /// LDM) whose prediction precedes the window are rolled forward, and
  /// repeated inside it, by their long-run period estimate; streams without
  /// one contribute only their next prediction.
  PredictedTimeline inquire(SimTime window_start);

  const PredictorConfig& config() const { return cfg_; }
  std::uint64_t predictions_made() const { return predictions_; }

 private:
  SubPredictor& get_or_create(NodeId neighbor, NeighborClass cls, SimTime now);
  double predict_interval(SubPredictor::Slot& slot, PacketType t, FeatureSet fs, double dt_prev_s,
                          const SenderDynamics& cur, const SenderDynamics& prev);
  const TypeModel* model_for(PacketType t, FeatureSet fs) const;

  PredictorConfig cfg_;
  std::shared_ptr<const WeightFile> weights_;
  std::map<NodeId, SubPredictor> subs_;
  std::uint64_t predictions_ = 0;
};

bool is_periodic(PacketType t);

/// Observed transmission history of one (neighbor, type) pair.
struct PairHistory {
  NodeId neighbor = -1;
  PacketType ptype = PacketType::Cam;
  std::vector<SimTime> tx_times;  // ascending
  NeighborClass cls = NeighborClass::Visible;
};

/// Last-interval persistence: next = last + (last - previous). Pairs with
/// fewer than two observations contribute nothing.
PredictedTimeline baseline_predict(const std::vector<PairHistory>& histories, SimTime window_start,
                                   const PredictorConfig& cfg);

struct PredictionError {
  NodeId neighbor = -1;
  PacketType ptype = PacketType::Cam;
  double abs_error_ms = 0.0;
};

/// Replays a packet log through a predictor in time order and records the
/// error of every prediction that a later packet resolves.
std::vector<PredictionError> evaluate_predictor(const std::vector<PacketLogRow>& rows,
                                                std::shared_ptr<const WeightFile> weights, PredictorKind kind,
                                                double max_interval_s = 2.0);

}  // namespace v2x
