#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "v2x/apps.hpp"
#include "v2x/mac.hpp"
#include "v2x/mobility.hpp"
#include "v2x/phy.hpp"
#include "v2x/predictor.hpp"
#include "v2x/scheduler.hpp"
#include "v2x/trainer.hpp"

namespace v2x {

enum class Traffic { Cam10Hz, CamTrigHigh, CamTrigLow, CamCpm, CamCpmLdm };
inline constexpr Traffic kAllTraffic[] = {Traffic::Cam10Hz, Traffic::CamTrigHigh, Traffic::CamTrigLow, Traffic::CamCpm,
                                          Traffic::CamCpmLdm};
inline constexpr LearningMode kAllModes[] = {LearningMode::None, LearningMode::VisibleOnly, LearningMode::HiddenOnly,
                                             LearningMode::VisibleAndHidden};

const char* to_string(Traffic t);
Traffic traffic_from_string(const std::string& s);

struct OutputPaths {
  std::string packet_log;
  std::string cbr_series;
  std::string scheduling_log;
  std::string mobility_trace;
};

struct ScenarioConfig {
  std::string name = "scenario";
  Traffic traffic = Traffic::Cam10Hz;
  double duration_s = 60.0;
  double warmup_s = 2.0;
  std::uint64_t seed = 1;
  int runs = 10;
  int jobs = 1;

  MobilityConfig mobility{};
  PhyConfig phy{};
  MacConfig mac{};
  AppConfig apps{};
  SchedulerConfig scheduler{};
  PredictorConfig predictor{};
  TrainingConfig training{};

  /// Empty: none (mode None or baseline predictor); "auto": train from a
  /// generated packet log of this scenario; otherwise a weight-file path.
  std::string weight_file;
  double training_log_duration_s = 20.0;

  std::size_t piggyback_budget = 4;
  bool piggyback_all_types = false;

  double prr_bin_m = 25.0;
  double prr_max_m = 300.0;
  /// Receivers this close to a segment end are not counted (reflecting segments).
  double edge_exclusion_m = 0.0;
  /// CBR is averaged over nodes within this along-road distance of the
  /// learning node; 0 averages over every node.
  double center_half_width_m = 500.0;

  OutputPaths outputs{};

  LearningMode mode() const { return scheduler.mode; }
  /// Learning modes with the recurrent predictor need a weight file.
  bool needs_weights() const;
  void validate() const;
};

/// Traffic preset: generators and speed band of each traffic pattern.
void apply_traffic_preset(ScenarioConfig& cfg, Traffic t);

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& origin, std::size_t line, const std::string& msg);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Parses the flat `key = value` format (`#` comments). The `traffic` preset
/// is applied first, the remaining keys override it in file order.
ScenarioConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ScenarioConfig load_config(const std::string& path);

/// Applies the `SEED` environment variable when set.
void apply_seed_override(ScenarioConfig& cfg);

/// Every recognised key, for documentation and tests.
std::vector<std::string> config_keys();

}  // namespace v2x
