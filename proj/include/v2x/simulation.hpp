#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>

#include "v2x/config.hpp"
#include "v2x/event_queue.hpp"
#include "v2x/metrics.hpp"
#include "v2x/scheduler.hpp"
#include "v2x/weight_file.hpp"

namespace v2x {

/// Optional per-run CSV sinks; null streams are skipped.
struct RunOutputs {
  std::ostream* packet_log = nullptr;
  std::ostream* cbr_series = nullptr;
  std::ostream* scheduling_log = nullptr;
  std::ostream* mobility_trace = nullptr;
};

struct RunResult {
  PrrAccumulator prr;
  double mean_cbr = 0.0;
  std::uint64_t cbr_samples = 0;
  NodeId learning_node = -1;
  std::size_t vehicles = 0;
  LearningNodeCounters learning{};
  MacCounters mac{};
  RunStatistics kernel{};
  std::array<std::uint64_t, kPacketTypeCount> generated{};
  std::array<std::uint64_t, kPacketTypeCount> transmitted{};
  std::uint64_t learning_node_frames = 0;
};

/// One replication of a scenario. `weights` is required for learning modes
/// with the recurrent predictor and ignored otherwise.
RunResult run_simulation(const ScenarioConfig& cfg, std::uint64_t seed, std::shared_ptr<const WeightFile> weights,
                         const RunOutputs& outputs = {});

/// Timeline air time of each packet type as the learning node assumes it:
/// nominal payload plus a full piggyback block where one is carried.
std::array<SimTime, kPacketTypeCount> nominal_airtimes(const ScenarioConfig& cfg);

}  // namespace v2x
