// Command-line front end: simulate, train, eval-predictor, sweep, plot.
#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>

#include "v2x/config.hpp"
#include "v2x/experiment.hpp"
#include "v2x/plot.hpp"
#include "v2x/predictor.hpp"
#include "v2x/trainer.hpp"
#include "v2x/weight_file.hpp"

namespace fs = std::filesystem;
using namespace v2x;

namespace {

std::ofstream open_out(const std::string& path) {
  if (const auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  return os;
}

int cmd_simulate(const std::string& config_path, const std::string& out, std::optional<int> runs,
                 std::optional<double> duration, const std::string& weights_path, const OutputPaths& extra) {
  ScenarioConfig cfg = load_config(config_path);
  apply_seed_override(cfg);
  if (runs) cfg.runs = *runs;
  if (duration) cfg.duration_s = *duration;
  if (!weights_path.empty()) cfg.weight_file = weights_path;
  for (auto [dst, src] : {std::pair{&cfg.outputs.packet_log, &extra.packet_log},
                          std::pair{&cfg.outputs.cbr_series, &extra.cbr_series},
                          std::pair{&cfg.outputs.scheduling_log, &extra.scheduling_log},
                          std::pair{&cfg.outputs.mobility_trace, &extra.mobility_trace}})
    if (!src->empty()) *dst = *src;
  cfg.validate();
  if (cfg.needs_weights() && cfg.weight_file.empty())
    throw std::runtime_error("mode " + std::string(to_string(cfg.mode())) + " needs weight_file (path or 'auto')");

  const fs::path cache = fs::path(out).parent_path() / "weights";
  auto weights = cfg.needs_weights() ? resolve_weights(cfg, cache, &std::cerr) : nullptr;

  std::optional<std::ofstream> pl, cs, sl, mt;
  RunOutputs ro;
  auto bind = [](const std::string& p, std::optional<std::ofstream>& f, std::ostream*& slot) {
    if (p.empty()) return;
    f.emplace(open_out(p));
    slot = &*f;
  };
  bind(cfg.outputs.packet_log, pl, ro.packet_log);
  bind(cfg.outputs.cbr_series, cs, ro.cbr_series);
  bind(cfg.outputs.scheduling_log, sl, ro.scheduling_log);
  bind(cfg.outputs.mobility_trace, mt, ro.mobility_trace);

  const CellResult cell = run_cell(cfg, weights, ro);
  auto os = open_out(out);
  write_prr_csv(os, cell);
  std::cout << summary_line(cell) << '\n';
  const auto& r0 = cell.runs.front();
  std::cout << "vehicles=" << r0.vehicles << " events=" << r0.kernel.dispatched << " ln_frames=" << r0.learning_node_frames
            << " deferred=" << r0.learning.deferred << " no_gap=" << r0.learning.no_gap_events << " hidden_reports=" << r0.learning.hidden_reports
            << " timeline_entries_per_inquiry="
            << (r0.learning.inquiries ? static_cast<double>(r0.learning.timeline_entries) / static_cast<double>(r0.learning.inquiries) : 0.0)
            << '\n';
  return 0;
}

int cmd_train(const std::string& log_path, const std::string& out, TrainingConfig tc) {
  const auto rows = read_packet_log_file(log_path);
  const auto res = train_predictor(rows, tc);
  for (const auto& r : res.reports) {
    std::cout << to_string(r.ptype) << "/" << to_string(r.features) << ": sequences=" << r.sequences
              << " steps=" << r.steps << (r.fallback ? " (fallback)" : "");
    for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) std::printf(" e%zu=%.5f", e + 1, r.epoch_loss[e]);
    std::cout << '\n';
  }
  if (const auto dir = fs::path(out).parent_path(); !dir.empty()) fs::create_directories(dir);
  save_weights(out, res.weights);
  return 0;
}

int cmd_eval(const std::string& weights_path, const std::string& log_path, const std::string& out, bool baseline) {
  const auto rows = read_packet_log_file(log_path);
  std::shared_ptr<const WeightFile> wf;
  if (!baseline) wf = std::make_shared<const WeightFile>(load_weights(weights_path));
  const auto errs = evaluate_predictor(rows, wf, baseline ? PredictorKind::Baseline : PredictorKind::Recurrent);
  auto os = open_out(out);
  os << "neighbor,ptype,abs_error_ms\n";
  std::vector<double> v;
  for (const auto& e : errs) {
    char b[96];
    std::snprintf(b, sizeof b, "%d,%s,%.6f\n", e.neighbor, to_string(e.ptype), e.abs_error_ms);
    os << b;
    v.push_back(e.abs_error_ms);
  }
  if (!v.empty()) {
    std::sort(v.begin(), v.end());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    const double within2 =
        static_cast<double>(std::upper_bound(v.begin(), v.end(), 2.0) - v.begin()) / static_cast<double>(v.size());
    std::printf("predictions=%zu mean_abs_error_ms=%.4f p95_ms=%.4f within_2ms=%.4f\n", v.size(), mean,
                v[static_cast<std::size_t>(0.95 * static_cast<double>(v.size() - 1))], within2);
  } else {
    std::printf("predictions=0\n");
  }
  return 0;
}

int cmd_plot(const std::vector<std::string>& inputs, const std::string& out, const std::string& title) {
  std::vector<PrrRow> rows;
  for (const auto& p : inputs) {
    std::ifstream is(p);
    if (!is) throw std::runtime_error("cannot read " + p);
    auto r = read_prr_csv(is, p);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  auto os = open_out(out);
  os << render_prr_svg(rows, title);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-event simulator of broadcast V2X with a learning scheduler"};
  app.require_subcommand(1);

  std::string config, out, weights;
  std::optional<int> runs;
  std::optional<double> duration;
  OutputPaths extra;
  auto* sim = app.add_subcommand("simulate", "Run the replications of one scenario and write a PRR CSV");
  sim->add_option("config", config, "Scenario config file")->required()->check(CLI::ExistingFile);
  sim->add_option("-o,--output", out, "PRR CSV path")->required();
  sim->add_option("--runs", runs, "Override the number of replications");
  sim->add_option("--duration", duration, "Override the simulated seconds per run");
  sim->add_option("--weights", weights, "Weight file (or 'auto')");
  sim->add_option("--packet-log", extra.packet_log, "Packet log CSV of the first run");
  sim->add_option("--cbr-series", extra.cbr_series, "Per-node CBR series CSV of the first run");
  sim->add_option("--scheduling-log", extra.scheduling_log, "Learning-node scheduling log CSV of the first run");
  sim->add_option("--mobility-trace", extra.mobility_trace, "Mobility trace CSV of the first run");

  std::string log_path;
  TrainingConfig tc;
  auto* train = app.add_subcommand("train", "Train predictor weights from a packet log");
  train->add_option("packet_log", log_path, "Packet log CSV")->required()->check(CLI::ExistingFile);
  train->add_option("-o,--output", out, "Weight file path")->required();
  train->add_option("--epochs", tc.epochs, "Training epochs");
  train->add_option("--seed", tc.seed, "Training seed");
  train->add_option("--lr", tc.learning_rate, "Adam learning rate");
  train->add_option("--max-sequences", tc.max_sequences, "Neighbor sequences per model");

  bool baseline = false;
  auto* eval = app.add_subcommand("eval-predictor", "Replay a packet log and write per-prediction errors");
  eval->add_option("weights", weights, "Weight file")->required();
  eval->add_option("packet_log", log_path, "Packet log CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("-o,--output", out, "Error CSV path")->required();
  eval->add_flag("--baseline", baseline, "Evaluate the last-interval baseline instead");

  std::string config_dir;
  SweepOptions sopt;
  auto* sw = app.add_subcommand("sweep", "Run every scenario config under all four learning modes");
  sw->add_option("config_dir", config_dir, "Directory of .conf files")->required()->check(CLI::ExistingDirectory);
  sw->add_option("-o,--output", out, "Output directory")->required();
  sw->add_option("--runs", sopt.runs_override, "Override replications per cell");
  sw->add_option("--duration", sopt.duration_override, "Override simulated seconds per run");

  std::vector<std::string> csvs;
  std::string title;
  auto* plot = app.add_subcommand("plot", "Render PRR CSVs as an SVG chart");
  plot->add_option("csv", csvs, "PRR CSV files")->required()->check(CLI::ExistingFile);
  plot->add_option("-o,--output", out, "SVG path")->required();
  plot->add_option("--title", title, "Chart title");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) return cmd_simulate(config, out, runs, duration, weights, extra);
    if (*train) return cmd_train(log_path, out, tc);
    if (*eval) return cmd_eval(weights, log_path, out, baseline);
    if (*sw) {
      sopt.progress = &std::cerr;
      const auto files = sweep(config_dir, out, sopt);
      std::cout << "wrote " << files.size() << " CSV files to " << out << '\n';
      return 0;
    }
    if (*plot) return cmd_plot(csvs, out, title);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
