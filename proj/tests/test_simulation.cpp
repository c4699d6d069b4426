#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "support/oracles.hpp"
#include "v2x/experiment.hpp"
#include "v2x/simulation.hpp"

using namespace v2x;

namespace {

ScenarioConfig short_run(Traffic t, double seconds = 3.0) {
  ScenarioConfig c;
  apply_traffic_preset(c, t);
  c.duration_s = seconds;
  c.warmup_s = 1.0;
  c.mobility.segment_length_m = 1000.0;
  return c;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    out.push_back(f);
  }
  return out;
}

}  // namespace

TEST(Simulation, SameSeedReproducesTheRun) {
  const auto cfg = short_run(Traffic::CamTrigLow);
  std::ostringstream la, lb;
  const auto a = run_simulation(cfg, 11, nullptr, {.packet_log = &la});
  const auto b = run_simulation(cfg, 11, nullptr, {.packet_log = &lb});
  const auto c = run_simulation(cfg, 12, nullptr);
  EXPECT_EQ(a.kernel.digest, b.kernel.digest);
  EXPECT_EQ(a.kernel.dispatched, b.kernel.dispatched);
  EXPECT_EQ(a.mean_cbr, b.mean_cbr);
  EXPECT_EQ(la.str(), lb.str());
  EXPECT_NE(a.kernel.digest, c.kernel.digest);
}

TEST(Simulation, ChannelLoadGrowsWithDensity) {
  double prev = -1.0;
  for (double density : {5.0, 20.0, 50.0}) {
    auto cfg = short_run(Traffic::Cam10Hz);
    cfg.mobility.density_per_lane_km = density;
    const auto r = run_simulation(cfg, 3, nullptr);
    EXPECT_GT(r.mean_cbr, prev) << density;
    EXPECT_LE(r.mean_cbr, 1.0);
    prev = r.mean_cbr;
  }
}

TEST(Simulation, SparseTrafficIsReceivedAtShortRange) {
  auto cfg = short_run(Traffic::Cam10Hz, 5.0);
  cfg.mobility.density_per_lane_km = 3.0;
  const auto r = run_simulation(cfg, 5, nullptr);
  const auto near = r.prr.pooled(0.0, 100.0);
  ASSERT_TRUE(near);
  EXPECT_GT(*near, 0.97);
}

TEST(Simulation, PrrCountsAreConsistent) {
  const auto r = run_simulation(short_run(Traffic::CamCpm), 4, nullptr);
  std::uint64_t expected = 0;
  for (const auto& b : r.prr.bins()) {
    EXPECT_LE(b.received, b.expected);
    expected += b.expected;
  }
  EXPECT_GT(expected, 0u);
  EXPECT_GT(r.learning_node_frames, 0u);
  for (std::size_t t = 0; t < kPacketTypeCount; ++t) EXPECT_LE(r.transmitted[t], r.generated[t]);
  EXPECT_GT(r.generated[static_cast<std::size_t>(PacketType::Cpm)], 0u);
  EXPECT_EQ(r.vehicles, 300u);
}

TEST(Simulation, LdmPhasesAreUniform) {
  // Sparse traffic keeps MAC queueing delay far below the 100 ms bins, so
  // the logged transmission time of the first LDM reflects its phase.
  auto cfg = short_run(Traffic::CamCpmLdm, 1.2);
  cfg.warmup_s = 0.1;
  cfg.mobility.segment_length_m = 20'000.0;
  cfg.mobility.density_per_lane_km = 3.0;
  std::ostringstream log;
  run_simulation(cfg, 21, nullptr, {.packet_log = &log});
  std::map<int, std::int64_t> first;
  for (const auto& f : csv_rows(log.str()))
    if (f[2] == "LDM" && !first.contains(std::stoi(f[1]))) first[std::stoi(f[1])] = std::stoll(f[0]);
  ASSERT_GT(first.size(), 250u);
  std::vector<std::uint64_t> counts(10, 0);
  for (const auto& [node, t] : first) ++counts[static_cast<std::size_t>((t % 1'000'000) / 100'000)];
  std::string shown;
  for (auto c : counts) shown += std::to_string(c) + " ";
  EXPECT_GT(oracle::chi_square_uniform_p(counts), 0.01) << shown;
}

TEST(Simulation, DeferralsStayWithinDeadlines) {
  auto cfg = short_run(Traffic::CamCpmLdm, 4.0);
  cfg.scheduler.mode = LearningMode::VisibleAndHidden;
  cfg.predictor.kind = PredictorKind::Baseline;
  std::ostringstream sched;
  const auto r = run_simulation(cfg, 2, nullptr, {.scheduling_log = &sched});
  const auto rows = csv_rows(sched.str());
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows.size(), r.learning.dispatched);
  std::size_t deferred = 0;
  for (const auto& f : rows) {
    const auto type = packet_type_from_string(f[1]);
    const std::int64_t d = std::stoll(f[2]);
    EXPECT_GE(d, 0);
    EXPECT_LT(d, cfg.apps.deadline_for(type).us);
    if (f[4] == "1") EXPECT_EQ(d, 0);
    deferred += d > 0;
  }
  EXPECT_GT(deferred, 0u);
  EXPECT_GT(r.learning.timeline_entries, 0u);
}

TEST(Simulation, ModeNoneNeverDefers) {
  std::ostringstream sched;
  const auto r = run_simulation(short_run(Traffic::Cam10Hz), 2, nullptr, {.scheduling_log = &sched});
  EXPECT_EQ(r.learning.deferred, 0u);
  for (const auto& f : csv_rows(sched.str())) EXPECT_EQ(f[2], "0");
}

TEST(Simulation, LearningModesRequireWeightsForRecurrentPredictor) {
  auto cfg = short_run(Traffic::Cam10Hz, 1.5);
  cfg.scheduler.mode = LearningMode::HiddenOnly;
  EXPECT_THROW(run_simulation(cfg, 1, nullptr), std::invalid_argument);
}

TEST(Experiment, CellAggregatesRunsWithConsecutiveSeeds) {
  auto cfg = short_run(Traffic::CamTrigLow, 2.0);
  cfg.runs = 3;
  cfg.name = "probe";
  const auto cell = run_cell(cfg, nullptr);
  ASSERT_EQ(cell.runs.size(), 3u);
  const auto second = run_simulation(cfg, cfg.seed + 1, nullptr);
  EXPECT_EQ(cell.runs[1].kernel.digest, second.kernel.digest);
  EXPECT_EQ(cell.cbr.n, 3);
  ASSERT_FALSE(cell.bins.empty());
  std::ostringstream csv;
  write_prr_csv(csv, cell);
  EXPECT_EQ(csv.str().rfind(prr_csv_header(), 0), 0u);
  EXPECT_NE(summary_line(cell).find("probe None"), std::string::npos);
}

TEST(Experiment, ThreadCountDoesNotChangeResults) {
  auto cfg = short_run(Traffic::CamTrigLow, 2.0);
  cfg.runs = 3;
  cfg.jobs = 1;
  const auto serial = run_cell(cfg, nullptr);
  cfg.jobs = 3;
  const auto parallel = run_cell(cfg, nullptr);
  ASSERT_EQ(serial.runs.size(), parallel.runs.size());
  for (std::size_t i = 0; i < serial.runs.size(); ++i)
    EXPECT_EQ(serial.runs[i].kernel.digest, parallel.runs[i].kernel.digest) << "run " << i;
  std::ostringstream a, b;
  write_prr_csv(a, serial);
  write_prr_csv(b, parallel);
  EXPECT_EQ(a.str(), b.str());
}
