#include "v2x/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "v2x/replicate.hpp"
#include "v2x/trainer.hpp"

namespace v2x {

namespace fs = std::filesystem;

WeightFile train_for_scenario(const ScenarioConfig& cfg, std::ostream* progress) {
  ScenarioConfig gen = cfg;
  gen.scheduler.mode = LearningMode::None;
  gen.duration_s = cfg.training_log_duration_s;
  gen.warmup_s = std::min(cfg.warmup_s, 0.5 * gen.duration_s);
  std::stringstream log;
  RunOutputs out;
  out.packet_log = &log;
  run_simulation(gen, cfg.training.seed, nullptr, out);
  const auto rows = read_packet_log(log);
  if (progress) *progress << "training on " << rows.size() << " logged packets\n";
  auto res = train_predictor(rows, cfg.training);
  if (progress)
    for (const auto& r : res.reports)
      *progress << "  " << to_string(r.ptype) << "/" << to_string(r.features)
                << ": " << r.sequences << " sequences, " << r.steps << " steps"
                << (r.fallback ? ", fallback" : "")
                << (r.epoch_loss.empty() ? std::string{} : ", final loss " + std::to_string(r.epoch_loss.back()))
                << '\n';
  return std::move(res.weights);
}

std::shared_ptr<const WeightFile> resolve_weights(const ScenarioConfig& cfg, const fs::path& cache_dir,
                                                  std::ostream* progress) {
  if (cfg.weight_file.empty()) return nullptr;
  if (cfg.weight_file != "auto") return std::make_shared<const WeightFile>(load_weights(cfg.weight_file));
  fs::path cached;
  if (!cache_dir.empty()) {
    cached = cache_dir / (cfg.name + ".weights");
    if (fs::exists(cached)) {
      auto wf = load_weights(cached);
      if (wf.seed == cfg.training.seed) return std::make_shared<const WeightFile>(std::move(wf));
    }
  }
  auto wf = train_for_scenario(cfg, progress);
  if (!cached.empty()) {
    fs::create_directories(cache_dir);
    save_weights(cached, wf);
  }
  return std::make_shared<const WeightFile>(std::move(wf));
}

CellResult run_cell(const ScenarioConfig& cfg, std::shared_ptr<const WeightFile> weights, const RunOutputs& first_run) {
  cfg.validate();
  if (cfg.needs_weights() && !weights)
    throw std::invalid_argument("mode " + std::string(to_string(cfg.mode())) + " needs predictor weights");
  CellResult cell;
  cell.scenario = cfg.name;
  cell.mode = cfg.mode();
  cell.runs = replicate(
      cfg, static_cast<std::size_t>(cfg.runs), cfg.seed,
      [&](const ScenarioConfig& c, std::uint64_t seed) {
        return run_simulation(c, seed, weights, seed == cfg.seed ? first_run : RunOutputs{});
      },
      static_cast<unsigned>(cfg.jobs));
  std::vector<PrrAccumulator> accs;
  std::vector<double> cbr, p200;
  for (const auto& r : cell.runs) {
    accs.push_back(r.prr);
    cbr.push_back(r.mean_cbr);
    if (auto p = r.prr.pooled(175.0, 225.0)) p200.push_back(*p);
  }
  cell.bins = aggregate(accs);
  cell.cbr = mean_ci(cbr);
  cell.prr_200m = mean_ci(p200);
  return cell;
}

void write_prr_csv(std::ostream& os, const CellResult& cell) {
  os << prr_csv_header() << '\n';
  for (const auto& b : cell.bins) os << prr_csv_line(cell.scenario, to_string(cell.mode), b) << '\n';
}

std::string summary_line(const CellResult& cell) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s %s: runs=%zu cbr=%.2f%% prr@200m=%.4f (+/- %.4f)", cell.scenario.c_str(),
                to_string(cell.mode), cell.runs.size(), 100.0 * cell.cbr.mean, cell.prr_200m.mean,
                cell.prr_200m.ci95.value_or(0.0));
  return buf;
}

std::vector<fs::path> sweep(const fs::path& config_dir, const fs::path& out_dir, const SweepOptions& opt) {
  if (!fs::is_directory(config_dir)) throw std::runtime_error("not a directory: " + config_dir.string());
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(config_dir))
    if (e.is_regular_file() && e.path().extension() == ".conf") configs.push_back(e.path());
  std::sort(configs.begin(), configs.end());
  if (configs.empty()) throw std::runtime_error("no .conf files in " + config_dir.string());
  fs::create_directories(out_dir);

  std::vector<fs::path> written;
  for (const auto& path : configs) {
    ScenarioConfig base = load_config(path.string());
    apply_seed_override(base);
    if (opt.runs_override > 0) base.runs = opt.runs_override;
    if (opt.duration_override > 0.0) base.duration_s = opt.duration_override;
    std::shared_ptr<const WeightFile> weights;
    for (LearningMode m : kAllModes) {
      ScenarioConfig cfg = base;
      cfg.scheduler.mode = m;
      if (cfg.needs_weights() && !weights) {
        if (cfg.weight_file.empty()) cfg.weight_file = "auto";
        weights = resolve_weights(cfg, out_dir / "weights", opt.progress);
      }
      const CellResult cell = run_cell(cfg, weights);
      const fs::path out = out_dir / (cfg.name + "_" + to_string(m) + ".csv");
      std::ofstream os(out, std::ios::binary);
      if (!os) throw std::runtime_error("cannot write " + out.string());
      write_prr_csv(os, cell);
      if (opt.progress) *opt.progress << summary_line(cell) << '\n';
      written.push_back(out);
    }
  }
  return written;
}

}  // namespace v2x
