// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "support/oracles.hpp"
#include "support/traces.hpp"
#include "v2x/experiment.hpp"
#include "v2x/mac.hpp"
#include "v2x/piggyback.hpp"
#include "v2x/predictor.hpp"
#include "v2x/scheduler.hpp"

namespace fs = std::filesystem;
using namespace v2x;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------
// Criterion 1: analytic gradients of the full network vs central differences.

Outcome gradients() {
  std::mt19937_64 eng(20240601);
  double worst = 0.0;
  std::size_t checked = 0;
  constexpr int kDraws = 100;
  for (int d = 0; d < kDraws; ++d) {
    RecurrentNet net(NetShape{d % 2 == 0 ? kDynamicsFeatureCount : kIntervalFeatureCount, {40, 50, 60}, 60});
    net.init_random(eng);
    const auto r = oracle::check_gradients(net, eng, 4, 40);
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
  }
  return {worst < 1e-4, fmt("%d draws, %zu parameters checked, max relative error %.3g (< 1e-4)", kDraws, checked, worst)};
}

// ---------------------------------------------------------------------------
// Criterion 2: learning a jittered 10 Hz trace.

Outcome periodic_learning() {
  const auto train = traces::periodic_cam(48, 62.0, 500, 101);
  const auto held_out = traces::periodic_cam(20, 30.0, 500, 202, 100'000, 1000);
  TrainingConfig cfg;
  cfg.seed = 7;
  const auto res = train_predictor(train, cfg);
  auto wf = std::make_shared<const WeightFile>(res.weights);
  const auto lstm = evaluate_predictor(held_out, wf, PredictorKind::Recurrent);
  const auto base = evaluate_predictor(held_out, nullptr, PredictorKind::Baseline);
  auto mean = [](const std::vector<PredictionError>& e) {
    double s = 0.0;
    for (const auto& x : e) s += x.abs_error_ms;
    return e.empty() ? 0.0 : s / static_cast<double>(e.size());
  };
  const auto within = std::count_if(lstm.begin(), lstm.end(), [](const auto& e) { return e.abs_error_ms <= 2.0; });
  const double frac = lstm.empty() ? 0.0 : static_cast<double>(within) / static_cast<double>(lstm.size());
  const double m_lstm = mean(lstm), m_base = mean(base);
  const bool pass = !lstm.empty() && frac >= 0.95 && m_lstm <= 1.10 * m_base;
  return {pass, fmt("%zu held-out predictions, %.2f%% within 2 ms (>= 95%%), mean error %.4f ms vs baseline %.4f ms "
                    "(must be <= %.4f)",
                    lstm.size(), 100.0 * frac, m_lstm, m_base, 1.10 * m_base)};
}

// ---------------------------------------------------------------------------
// Scenario cells shared by criteria 3 to 6.

class Cells {
 public:
  Cells(fs::path config_dir, fs::path weight_dir) : config_dir_(std::move(config_dir)), weight_dir_(std::move(weight_dir)) {}

  const CellResult& get(const std::string& scenario, LearningMode mode) {
    const auto key = scenario + "/" + to_string(mode);
    if (auto it = cells_.find(key); it != cells_.end()) return it->second;
    ScenarioConfig cfg = load_config((config_dir_ / (scenario + ".conf")).string());
    cfg.scheduler.mode = mode;
    std::shared_ptr<const WeightFile> weights;
    if (cfg.needs_weights()) weights = resolve_weights(cfg, weight_dir_, &std::cerr);
    const auto t0 = std::chrono::steady_clock::now();
    auto cell = run_cell(cfg, weights);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << summary_line(cell) << fmt(" [%.0f s]", secs) << '\n';
    return cells_.emplace(key, std::move(cell)).first->second;
  }

 private:
  fs::path config_dir_;
  fs::path weight_dir_;
  std::map<std::string, CellResult> cells_;
};

double gain(Cells& cells, const std::string& scenario) {
  return cells.get(scenario, LearningMode::HiddenOnly).prr_200m.mean - cells.get(scenario, LearningMode::None).prr_200m.mean;
}

// Criterion 3: mean CBR of the mode-None cells against the reported loads.
Outcome channel_load(Cells& cells) {
  const std::pair<const char*, double> target[] = {
      {"Cam10Hz", 65.35}, {"CamTrigHigh", 50.74}, {"CamTrigLow", 35.47}, {"CamCpm", 52.10}, {"CamCpmLdm", 66.90}};
  bool pass = true;
  std::string detail;
  for (const auto& [name, pct] : target) {
    const double got = 100.0 * cells.get(name, LearningMode::None).cbr.mean;
    const bool ok = std::fabs(got - pct) <= 8.0;
    pass = pass && ok;
    detail += fmt("%s %.2f%% (target %.2f +-8)%s; ", name, got, pct, ok ? "" : " OUT");
  }
  return {pass, detail};
}

// Criterion 4: mode ordering at ~200 m in Cam10Hz.
Outcome mode_ordering(Cells& cells) {
  const auto& none = cells.get("Cam10Hz", LearningMode::None).prr_200m;
  const auto& vis = cells.get("Cam10Hz", LearningMode::VisibleOnly).prr_200m;
  const auto& hid = cells.get("Cam10Hz", LearningMode::HiddenOnly).prr_200m;
  const auto& both = cells.get("Cam10Hz", LearningMode::VisibleAndHidden).prr_200m;
  const bool order = hid.mean >= both.mean && both.mean >= none.mean && hid.mean >= vis.mean && vis.mean >= none.mean;
  const double diff = hid.mean - none.mean;
  const double ci_h = hid.ci95.value_or(0.0), ci_n = none.ci95.value_or(0.0);
  const bool separated = hid.mean - ci_h > none.mean + ci_n;
  const bool pass = order && diff >= 0.10 && separated;
  return {pass, fmt("PRR@175-225m None %.4f+-%.4f, VisibleOnly %.4f, HiddenOnly %.4f+-%.4f, VisibleAndHidden %.4f; "
                    "ordering %s, HiddenOnly-None %+.1f pp (>= 10), CIs %s",
                    none.mean, ci_n, vis.mean, hid.mean, ci_h, both.mean, order ? "holds" : "violated", 100.0 * diff,
                    separated ? "disjoint" : "overlap")};
}

// Criterion 5: the gain narrows from low to high load.
Outcome load_trend(Cells& cells) {
  const double lo = gain(cells, "CamTrigLow"), hi = gain(cells, "CamCpmLdm");
  return {lo > hi, fmt("gain CamTrigLow %+.1f pp vs CamCpmLdm %+.1f pp (must be larger)", 100.0 * lo, 100.0 * hi)};
}

// Criterion 6: unpredictable CPM bursts reduce the gain.
Outcome cpm_penalty(Cells& cells) {
  const double cpm = gain(cells, "CamCpm"), trig = gain(cells, "CamTrigHigh");
  return {cpm < trig, fmt("gain CamCpm %+.1f pp vs CamTrigHigh %+.1f pp (must be smaller)", 100.0 * cpm, 100.0 * trig)};
}

// ---------------------------------------------------------------------------
// Criterion 7: oracle equivalences.

Outcome oracles() {
  std::mt19937_64 eng(77);
  int gap_mismatch = 0;
  const SimTime ws = SimTime::seconds(5);
  for (int trial = 0; trial < 1000; ++trial) {
    PredictedTimeline tl;
    tl.window_start = ws;
    const int n = std::uniform_int_distribution<int>(0, 8)(eng);
    std::uniform_int_distribution<std::int64_t> start(ws.us - 3000, ws.us + 100'000), air(200, 6000);
    for (int i = 0; i < n; ++i) tl.entries.push_back({i, PacketType::Cam, SimTime{start(eng)}, SimTime{air(eng)}, NeighborClass::Hidden});
    std::sort(tl.entries.begin(), tl.entries.end(), [](auto& a, auto& b) { return a.predicted_tx < b.predicted_tx; });
    AppConfig app;
    const auto req = make_request(0, PacketType::Cam, ws + SimTime{std::uniform_int_distribution<std::int64_t>(0, 60'000)(eng)}, app);
    const SimTime own{std::uniform_int_distribution<std::int64_t>(300, 1200)(eng)};
    const SimTime guard{std::uniform_int_distribution<std::int64_t>(0, 1500)(eng)};
    const auto r = find_gap(tl, req, own, guard);
    std::vector<oracle::Interval> inflated;
    for (const auto& e : tl.entries) inflated.push_back({e.predicted_tx.us - guard.us, e.end().us + guard.us});
    const std::int64_t hi = std::min(req.deadline.us, tl.window_end().us) - own.us;
    const auto [bc, bov] = oracle::brute_force_gap(inflated, req.created_at.us, hi, own.us);
    const bool ok = bov >= own.us ? r.no_gap : (!r.no_gap && r.chosen_tx.us == bc && r.predicted_overlap_us == bov);
    gap_mismatch += !ok;
  }

  const MacConfig mac;
  auto rng = make_engine(5, Stream::Mac, 0);
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(mac.best_effort.cw_min + 1), 0);
  for (int i = 0; i < 100'000; ++i) ++counts[static_cast<std::size_t>(BackoffState::draw(mac.best_effort, rng).remaining_slots)];
  const double p = oracle::chi_square_uniform_p(counts);

  int codec_mismatch = 0;
  for (int h = 0; h < 10'000; ++h) {
    ReceptionHistory hist;
    const int records = std::uniform_int_distribution<int>(0, 60)(eng);
    std::int64_t t = 0;
    for (int k = 0; k < records; ++k) {
      t += std::uniform_int_distribution<std::int64_t>(0, 40'000)(eng);
      hist.record(std::uniform_int_distribution<NodeId>(0, 1 << 20)(eng),
                  static_cast<PacketType>(std::uniform_int_distribution<int>(0, 2)(eng)), SimTime{t});
    }
    const std::size_t budget = std::uniform_int_distribution<std::size_t>(0, 16)(eng);
    const auto snap = hist.snapshot(SimTime{t + 1000}, budget, SimTime::millis(1500));
    const auto back = decode_piggyback(encode_piggyback(snap, budget));
    codec_mismatch += !back || *back != snap || snap.size() > budget;
  }

  const bool pass = gap_mismatch == 0 && p > 0.01 && codec_mismatch == 0;
  return {pass, fmt("find_gap vs 1 us grid: %d/1000 mismatches; backoff chi-square p = %.4f over 1e5 draws (> 0.01); "
                    "piggyback round trip: %d/10000 mismatches",
                    gap_mismatch, p, codec_mismatch)};
}

// ---------------------------------------------------------------------------
// Criterion 8: sweep reruns are byte-identical.

std::map<std::string, std::string> read_csvs(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".csv") continue;
    std::ifstream is(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    out[e.path().filename().string()] = ss.str();
  }
  return out;
}

Outcome determinism(const fs::path& config_dir, const fs::path& scratch) {
  const fs::path cfg_dir = scratch / "det_configs";
  fs::create_directories(cfg_dir);
  for (const char* name : {"CamCpmLdm", "Cam10Hz"}) {
    std::ifstream in(config_dir / (std::string(name) + ".conf"));
    std::ofstream out(cfg_dir / (std::string(name) + ".conf"));
    out << in.rdbuf() << "\nruns = 2\nduration_s = 4\nwarmup_s = 1\ntraining.log_duration_s = 4\ntraining.epochs = 2\n";
  }
  SweepOptions opt;
  sweep(cfg_dir, scratch / "det_a", opt);
  sweep(cfg_dir, scratch / "det_b", opt);
  const auto a = read_csvs(scratch / "det_a"), b = read_csvs(scratch / "det_b");
  std::size_t bytes = 0;
  for (const auto& [k, v] : a) bytes += v.size();
  const bool pass = !a.empty() && a == b;
  return {pass, fmt("%zu CSVs (%zu bytes) from two sweeps with identical seeds are %s", a.size(), bytes,
                    pass ? "byte-identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::set<int> only;
  std::string config_dir = V2X_SOURCE_DIR "/configs";
  std::string scratch = "acceptance_scratch";
  app.add_option("--only", only, "Run only these criteria (1-8)")->check(CLI::Range(1, 8));
  app.add_option("--configs", config_dir, "Scenario config directory")->check(CLI::ExistingDirectory);
  app.add_option("--scratch", scratch, "Working directory for weights and sweep output");
  CLI11_PARSE(app, argc, argv);

  const fs::path work = fs::absolute(scratch);
  fs::remove_all(work);
  fs::create_directories(work);
  Cells cells(config_dir, work / "weights");

  auto wanted = [&](int k) { return only.empty() || only.contains(k); };
  int failures = 0;
  auto report = [&](int k, const char* title, auto&& fn) {
    if (!wanted(k)) return;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << k << " (" << title << "): " << o.detail << std::endl;
  };

  report(1, "gradient check", gradients);
  report(2, "periodic learning", periodic_learning);
  report(3, "channel load calibration", [&] { return channel_load(cells); });
  report(4, "Cam10Hz mode ordering", [&] { return mode_ordering(cells); });
  report(5, "load-dependent gain", [&] { return load_trend(cells); });
  report(6, "CPM burst penalty", [&] { return cpm_penalty(cells); });
  report(7, "oracle equivalences", oracles);
  report(8, "determinism", [&] { return determinism(config_dir, work); });
  return failures == 0 ? 0 : 1;
}
