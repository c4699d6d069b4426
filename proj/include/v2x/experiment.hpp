#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "v2x/config.hpp"
#include "v2x/metrics.hpp"
#include "v2x/simulation.hpp"
#include "v2x/weight_file.hpp"

namespace v2x {

/// Aggregated outcome of `cfg.runs` replications of one scenario and mode.
struct CellResult {
  std::string scenario;
  LearningMode mode = LearningMode::None;
  std::vector<RunResult> runs;
  std::vector<AggregateBin> bins;
  MeanCi cbr;
  MeanCi prr_200m;  // pooled over the bins in [175, 225) m
};

/// Generates a mode-None packet log of `cfg.training_log_duration_s` seconds
/// for the scenario and trains predictor weights on it.
WeightFile train_for_scenario(const ScenarioConfig& cfg, std::ostream* progress = nullptr);

/// Resolves `cfg.weight_file`: empty gives null, "auto" trains (or reuses a
/// cached file in `cache_dir` when one is given), anything else is loaded.
std::shared_ptr<const WeightFile> resolve_weights(const ScenarioConfig& cfg, const std::filesystem::path& cache_dir,
                                                  std::ostream* progress = nullptr);

/// Runs the replications of one cell. Seeds are cfg.seed + run index; the
/// per-run CSV sinks in `first_run` receive the first replication only.
CellResult run_cell(const ScenarioConfig& cfg, std::shared_ptr<const WeightFile> weights,
                    const RunOutputs& first_run = {});

void write_prr_csv(std::ostream& os, const CellResult& cell);
std::string summary_line(const CellResult& cell);

struct SweepOptions {
  int runs_override = 0;          // 0 keeps each config's value
  double duration_override = 0.0;  // 0 keeps each config's value
  std::ostream* progress = nullptr;
};

/// Runs every `*.conf` file in `config_dir` under the four learning modes and
/// writes `<scenario>_<mode>.csv` per cell into `out_dir`. Returns the paths.
std::vector<std::filesystem::path> sweep(const std::filesystem::path& config_dir, const std::filesystem::path& out_dir,
                                         const SweepOptions& opt = {});

}  // namespace v2x
