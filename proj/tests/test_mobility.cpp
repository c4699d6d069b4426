#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "v2x/mobility.hpp"

using namespace v2x;

namespace {

VehicleState cruising(double speed, int lane = 0) {
  VehicleState v;
  v.lane = lane;
  v.x = 500.0;
  v.speed = speed;
  v.heading = lane < 3 ? 0.0 : 180.0;
  return v;
}

}  // namespace

TEST(Mobility, PureMemoryKeepsSpeed) {
  MobilityConfig cfg;
  cfg.alpha = 1.0;
  cfg.speed_sigma = 5.0;
  Engine eng(1);
  const auto n = step(cruising(27.3), cfg, eng);
  EXPECT_DOUBLE_EQ(n.speed, 27.3);
}

TEST(Mobility, NoMemoryNoNoiseGivesMeanSpeed) {
  MobilityConfig cfg;
  cfg.alpha = 0.0;
  cfg.speed_sigma = 0.0;
  Engine eng(1);
  EXPECT_DOUBLE_EQ(step(cruising(44.0), cfg, eng).speed, cfg.mean_speed);
}

TEST(Mobility, LongRunMeanAndLagOneAutocorrelation) {
  MobilityConfig cfg;
  cfg.speed_sigma = 3.0;
  Engine eng(11);
  VehicleState v = cruising(32.5);
  std::vector<double> s;
  for (int i = 0; i < 20000; ++i) {
    v = step(v, cfg, eng);
    s.push_back(v.speed);
  }
  const std::vector<double> tail(s.begin() + 10000, s.end());
  const double mean = std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(tail.size());
  EXPECT_NEAR(mean, 32.5, 0.5);

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    den += (s[i] - mean) * (s[i] - mean);
    if (i + 1 < s.size()) num += (s[i] - mean) * (s[i + 1] - mean);
  }
  EXPECT_NEAR(num / den, cfg.alpha, 0.05);
}

TEST(Mobility, SpeedStaysInsideClampBand) {
  MobilityConfig cfg;
  cfg.speed_sigma = 40.0;  // large noise to exercise both bounds
  Engine eng(5);
  VehicleState v = cruising(21.0);
  bool hit_lo = false, hit_hi = false;
  for (int i = 0; i < 5000; ++i) {
    v = step(v, cfg, eng);
    ASSERT_GE(v.speed, 20.0);
    ASSERT_LE(v.speed, 45.0);
    hit_lo |= v.speed == 20.0;
    hit_hi |= v.speed == 45.0;
  }
  EXPECT_TRUE(hit_lo);
  EXPECT_TRUE(hit_hi);
}

TEST(Mobility, DirectionFollowsLaneGroup) {
  MobilityConfig cfg;
  cfg.speed_sigma = 0.0;
  cfg.heading_sigma_deg = 0.0;
  Engine eng(2);
  const auto fwd = step(cruising(30.0, 1), cfg, eng);
  const auto back = step(cruising(30.0, 4), cfg, eng);
  EXPECT_GT(fwd.x, 500.0);
  EXPECT_LT(back.x, 500.0);
  EXPECT_EQ(fwd.lane, 1);
  EXPECT_EQ(fwd.t, SimTime::millis(100));
}

TEST(Mobility, SpawnCountsFollowDensityArithmetic) {
  MobilityConfig cfg;
  Engine eng(3);
  cfg.segment_length_m = 10000.0;
  EXPECT_EQ(spawn_scenario(cfg, eng).size(), 3000u);
  cfg.segment_length_m = 1000.0;
  EXPECT_EQ(spawn_scenario(cfg, eng).size(), 300u);
}

TEST(Mobility, SpawnPlacementHasPositiveSameLaneGaps) {
  MobilityConfig cfg;
  Engine eng(9);
  const auto vs = spawn_scenario(cfg, eng);
  std::map<int, std::vector<double>> by_lane;
  for (const auto& v : vs) {
    by_lane[v.lane].push_back(v.x);
    EXPECT_GE(v.speed, cfg.speed_min);
    EXPECT_LE(v.speed, cfg.speed_max);
    EXPECT_GE(v.x, 0.0);
    EXPECT_LT(v.x, cfg.segment_length_m);
  }
  EXPECT_EQ(by_lane.size(), 6u);
  for (auto& [lane, xs] : by_lane) {
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 1; i < xs.size(); ++i) EXPECT_GT(xs[i] - xs[i - 1], 0.0) << "lane " << lane;
  }
}

TEST(Mobility, BoundariesPreserveVehicleCount) {
  for (Boundary b : {Boundary::Wrap, Boundary::Reflect}) {
    MobilityConfig cfg;
    cfg.boundary = b;
    cfg.segment_length_m = 300.0;
    Engine eng(4);
    auto vs = spawn_scenario(cfg, eng);
    const auto n = vs.size();
    for (int t = 0; t < 200; ++t)
      for (auto& v : vs) v = step(v, cfg, eng);
    EXPECT_EQ(vs.size(), n);
    for (const auto& v : vs) {
      EXPECT_GE(v.x, 0.0);
      EXPECT_LE(v.x, cfg.segment_length_m);
    }
  }
}

TEST(Mobility, DistanceExamples) {
  VehicleState a, b;
  EXPECT_DOUBLE_EQ(distance(a, b), 0.0);
  b.x = 100.0;
  EXPECT_DOUBLE_EQ(distance(a, b), 100.0);
  b.x = 300.0;
  b.y = 4.0;
  EXPECT_NEAR(distance(a, b), 300.027, 1e-3);
  EXPECT_DOUBLE_EQ(distance(a, b), distance(b, a));
}

TEST(Mobility, WrappedDistanceUsesShortestWay) {
  VehicleState a, b;
  a.x = 50.0;
  b.x = 1950.0;
  EXPECT_NEAR(distance(a, b, 2000.0), 100.0, 1e-9);
  EXPECT_NEAR(wrapped_dx(a.x, b.x, 2000.0), -100.0, 1e-9);
}

TEST(Mobility, TraceRowMatchesHeader) {
  VehicleState v = cruising(30.0);
  v.t = SimTime::millis(1500);
  EXPECT_EQ(mobility_trace_header(), "t_us,node,lane,x,y,speed,heading");
  const auto row = mobility_trace_row(v);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 6);
  EXPECT_EQ(row.rfind("1500000,", 0), 0u);
}

TEST(Mobility, ValidateRejectsBadConfig) {
  MobilityConfig cfg;
  cfg.alpha = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = MobilityConfig{};
  cfg.density_per_lane_km = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
