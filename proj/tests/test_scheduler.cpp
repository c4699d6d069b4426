#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "support/oracles.hpp"
#include "v2x/scheduler.hpp"

using namespace v2x;

namespace {

PredictedTimeline timeline(SimTime ws, std::vector<std::pair<std::int64_t, std::int64_t>> busy,
                           NeighborClass cls = NeighborClass::Visible) {
  PredictedTimeline tl;
  tl.window_start = ws;
  NodeId id = 0;
  for (auto [start, air] : busy) tl.entries.push_back({id++, PacketType::Cam, SimTime{start}, SimTime{air}, cls});
  std::sort(tl.entries.begin(), tl.entries.end(),
            [](const auto& a, const auto& b) { return a.predicted_tx < b.predicted_tx; });
  return tl;
}

AppPacketRequest cam_at(SimTime t) { return make_request(0, PacketType::Cam, t, AppConfig{}); }

std::vector<NeighborRecord> population(int hidden, int visible) {
  std::vector<NeighborRecord> out;
  for (int i = 0; i < hidden; ++i)
    out.push_back({i, NeighborClass::Hidden, SimTime::millis(i), EvidenceSource::Piggyback});
  for (int i = 0; i < visible; ++i)
    out.push_back({1000 + i, NeighborClass::Visible, SimTime::millis(i), EvidenceSource::Direct});
  return out;
}

}  // namespace

TEST(Selection, HiddenFirstThenMostRecentVisible) {
  const auto ev = population(60, 80);
  const auto sel = classify_and_select(ev, LearningMode::VisibleAndHidden, 100);
  ASSERT_EQ(sel.size(), 100u);
  EXPECT_EQ(std::count_if(sel.begin(), sel.end(), [](auto& r) { return r.cls == NeighborClass::Hidden; }), 60);
  // The 40 visible picks are the most recent ones: ids 1040..1079.
  for (const auto& r : sel)
    if (r.cls == NeighborClass::Visible) EXPECT_GE(r.id, 1040);
}

TEST(Selection, ModeFiltersClasses) {
  const auto ev = population(10, 10);
  for (const auto& r : classify_and_select(ev, LearningMode::HiddenOnly, 100)) EXPECT_EQ(r.cls, NeighborClass::Hidden);
  for (const auto& r : classify_and_select(ev, LearningMode::VisibleOnly, 100)) EXPECT_EQ(r.cls, NeighborClass::Visible);
  EXPECT_TRUE(classify_and_select(ev, LearningMode::None, 100).empty());
  EXPECT_EQ(classify_and_select(ev, LearningMode::VisibleAndHidden, 500).size(), 20u);
}

TEST(NeighborTableTest, DirectEvidenceOverridesPiggyback) {
  NeighborTable t;
  const SimTime ttl = SimTime::millis(1500);
  t.note_piggyback(5, SimTime::millis(100));
  EXPECT_EQ(t.classify(5, SimTime::millis(200), ttl)->cls, NeighborClass::Hidden);
  t.note_direct(5, SimTime::millis(300));
  EXPECT_EQ(t.classify(5, SimTime::millis(400), ttl)->cls, NeighborClass::Visible);
  EXPECT_EQ(t.classify(5, SimTime::millis(1800), ttl)->cls, NeighborClass::Visible);
  // Direct evidence ages out; a later piggyback report makes it hidden again.
  t.note_piggyback(5, SimTime::millis(1900));
  EXPECT_EQ(t.classify(5, SimTime::millis(2000), ttl)->cls, NeighborClass::Hidden);
  EXPECT_FALSE(t.heard_directly(5, SimTime::millis(2000), ttl));
  t.purge(SimTime::millis(4000), ttl);
  EXPECT_EQ(t.size(), 0u);
}

TEST(FindGap, EmptyTimelineSendsImmediately) {
  const auto tl = timeline(SimTime::seconds(1), {});
  const auto r = find_gap(tl, cam_at(SimTime::seconds(1)), SimTime::micros(488), SimTime::millis(1));
  EXPECT_EQ(r.chosen_tx, SimTime::seconds(1));
  EXPECT_EQ(r.predicted_overlap_us, 0);
  EXPECT_EQ(r.deferred_by_us, 0);
  EXPECT_FALSE(r.no_gap);
}

TEST(FindGap, DefersPastPredictedFramePlusGuard) {
  const SimTime ws = SimTime::seconds(1);
  const auto tl = timeline(ws, {{ws.us, 488}});
  const auto r = find_gap(tl, cam_at(ws), SimTime::micros(488), SimTime::millis(1));
  EXPECT_EQ(r.chosen_tx, ws + SimTime::micros(488) + SimTime::millis(1));
  EXPECT_EQ(r.predicted_overlap_us, 0);
  EXPECT_EQ(r.deferred_by_us, 1488);
}

TEST(FindGap, SaturatedWindowCountsNoGap) {
  const SimTime ws = SimTime::seconds(1);
  std::vector<std::pair<std::int64_t, std::int64_t>> busy;
  for (std::int64_t t = ws.us; t < ws.us + 100'000; t += 1500) busy.push_back({t, 488});
  const auto tl = timeline(ws, busy);
  const auto r = find_gap(tl, cam_at(ws), SimTime::micros(488), SimTime::millis(1));
  EXPECT_TRUE(r.no_gap);
  EXPECT_EQ(r.chosen_tx, ws);
  EXPECT_EQ(r.deferred_by_us, 0);
}

TEST(FindGap, RequestTooLateForWindowDegradesToImmediate) {
  const SimTime ws = SimTime::seconds(1);
  const auto tl = timeline(ws, {{ws.us + 99'800, 488}});
  const auto r = find_gap(tl, cam_at(ws + SimTime::micros(99'700)), SimTime::micros(488), SimTime::millis(1));
  EXPECT_TRUE(r.no_gap);
  EXPECT_EQ(r.chosen_tx, ws + SimTime::micros(99'700));
}

// Oracle equivalence on random timelines, plus deadline safety and
// monotonicity under added busy entries.
TEST(FindGap, MatchesBruteForceGridSearch) {
  std::mt19937_64 eng(12345);
  const SimTime ws = SimTime::seconds(2);
  for (int trial = 0; trial < 300; ++trial) {
    std::uniform_int_distribution<int> count(0, 8);
    std::uniform_int_distribution<std::int64_t> start(ws.us - 3000, ws.us + 100'000);
    std::uniform_int_distribution<std::int64_t> air(200, 6000);
    std::vector<std::pair<std::int64_t, std::int64_t>> busy;
    const int n = count(eng);
    for (int i = 0; i < n; ++i) busy.push_back({start(eng), air(eng)});
    const auto tl = timeline(ws, busy);
    AppPacketRequest req = cam_at(ws + SimTime{std::uniform_int_distribution<std::int64_t>(0, 60'000)(eng)});
    const SimTime own{std::uniform_int_distribution<std::int64_t>(300, 1200)(eng)};
    const SimTime guard{std::uniform_int_distribution<std::int64_t>(0, 1500)(eng)};
    const auto r = find_gap(tl, req, own, guard);

    std::vector<oracle::Interval> inflated;
    for (const auto& e : tl.entries) inflated.push_back({e.predicted_tx.us - guard.us, e.end().us + guard.us});
    const std::int64_t hi = std::min(req.deadline.us, tl.window_end().us) - own.us;
    const auto [bc, bov] = oracle::brute_force_gap(inflated, req.created_at.us, hi, own.us);
    if (bov >= own.us) {
      EXPECT_TRUE(r.no_gap);
      continue;
    }
    ASSERT_FALSE(r.no_gap) << "trial " << trial;
    EXPECT_EQ(r.predicted_overlap_us, bov) << "trial " << trial;
    EXPECT_EQ(r.chosen_tx.us, bc) << "trial " << trial;
    EXPECT_GE(r.chosen_tx, req.created_at);
    EXPECT_LE(r.chosen_tx + own, req.deadline);
    EXPECT_LE(r.deferred_by_us, (req.deadline - req.created_at - own).us);

    auto bigger = tl;
    bigger.entries.push_back({99, PacketType::Cpm, SimTime{start(eng)}, SimTime{air(eng)}, NeighborClass::Hidden});
    const auto r2 = find_gap(bigger, req, own, guard);
    if (!r2.no_gap) EXPECT_GE(r2.predicted_overlap_us, r.predicted_overlap_us);
  }
}

TEST(FindGap, CountingOracleAgreesWithClosedForm) {
  std::mt19937_64 eng(3);
  std::uniform_int_distribution<std::int64_t> pos(0, 500), len(1, 80);
  for (int t = 0; t < 200; ++t) {
    std::vector<oracle::Interval> iv;
    for (int i = 0; i < 4; ++i) {
      const auto s = pos(eng);
      iv.push_back({s, s + len(eng)});
    }
    const auto c = pos(eng), own = len(eng);
    EXPECT_EQ(oracle::overlap_by_counting(iv, c, own), oracle::overlap_closed(iv, c, own));
    std::vector<BusyInterval> b;
    for (auto& i : iv) b.push_back({i.start, i.end});
    EXPECT_EQ(overlap_at(b, c, own), oracle::overlap_closed(iv, c, own));
  }
}

TEST(Filter, ModesKeepOnlyTheirClasses) {
  auto tl = timeline(SimTime::seconds(1), {{1'010'000, 488}}, NeighborClass::Visible);
  tl.entries.push_back({9, PacketType::Cam, SimTime{1'050'000}, SimTime{488}, NeighborClass::Hidden});
  EXPECT_EQ(filter_timeline(tl, LearningMode::HiddenOnly).entries.size(), 1u);
  EXPECT_EQ(filter_timeline(tl, LearningMode::HiddenOnly).entries[0].cls, NeighborClass::Hidden);
  EXPECT_EQ(filter_timeline(tl, LearningMode::VisibleOnly).entries.size(), 1u);
  EXPECT_EQ(filter_timeline(tl, LearningMode::VisibleAndHidden).entries.size(), 2u);
}

namespace {

PredictorConfig baseline() {
  PredictorConfig p;
  p.kind = PredictorKind::Baseline;
  return p;
}

Frame frame_from(NodeId sender, SimTime tx, std::vector<PiggybackEntry> pb = {}) {
  Frame f;
  f.sender = sender;
  f.tx_start = tx;
  f.air_time = SimTime::micros(488);
  f.piggyback = encode_piggyback(pb, pb.size());
  f.piggyback_bytes = static_cast<int>(f.piggyback.size());
  return f;
}

}  // namespace

TEST(LearningNodeTest, ModeNoneNeverDefers) {
  LearningNode ln(0, SchedulerConfig{}, baseline(), nullptr);
  for (int k = 0; k < 10; ++k) ln.on_reception(frame_from(1, SimTime::millis(100 * k)), SimTime::millis(100 * k + 1));
  ln.on_inquiry(SimTime::millis(1000));
  const auto r = ln.dispatch(cam_at(SimTime::millis(1000)), SimTime::micros(488));
  EXPECT_EQ(r.deferred_by_us, 0);
  EXPECT_EQ(r.chosen_tx, SimTime::millis(1000));
  EXPECT_TRUE(ln.timeline().entries.empty());
}

TEST(LearningNodeTest, PiggybackAgeReconstructsLastTransmission) {
  SchedulerConfig cfg;
  cfg.mode = LearningMode::HiddenOnly;
  LearningNode ln(0, cfg, baseline(), nullptr);
  ln.on_reception(frame_from(1, SimTime::seconds(10), {{42, PacketType::Cam, 50, 100}}), SimTime::seconds(10));
  EXPECT_EQ(ln.counters().hidden_reports, 1u);
  EXPECT_EQ(ln.table().classify(42, SimTime::seconds(10), cfg.ttl)->cls, NeighborClass::Hidden);
  EXPECT_EQ(*ln.predictor().next_prediction(42, PacketType::Cam), SimTime::millis(10'050));
  ln.on_inquiry(SimTime::seconds(10));
  ASSERT_EQ(ln.timeline().entries.size(), 1u);
  EXPECT_EQ(ln.timeline().entries[0].neighbor, 42);
  EXPECT_EQ(ln.timeline().entries[0].predicted_tx, SimTime::millis(10'050));
  // HiddenOnly ignores the visible reporter.
  EXPECT_FALSE(ln.tracked().contains(1));
}

TEST(LearningNodeTest, ReportsAboutVisibleNodesAreIgnored) {
  SchedulerConfig cfg;
  cfg.mode = LearningMode::VisibleAndHidden;
  LearningNode ln(0, cfg, baseline(), nullptr);
  ln.on_reception(frame_from(5, SimTime::millis(900)), SimTime::millis(901));
  ln.on_reception(frame_from(1, SimTime::seconds(1), {{5, PacketType::Cam, 20, 100}, {0, PacketType::Cam, 3, 100}}),
                  SimTime::seconds(1));
  EXPECT_EQ(ln.counters().hidden_reports, 0u);
  EXPECT_EQ(ln.table().classify(5, SimTime::seconds(1), cfg.ttl)->cls, NeighborClass::Visible);
}

TEST(LearningNodeTest, MalformedBlockIsDroppedAndCounted) {
  SchedulerConfig cfg;
  cfg.mode = LearningMode::HiddenOnly;
  LearningNode ln(0, cfg, baseline(), nullptr);
  Frame f = frame_from(1, SimTime::seconds(1), {{42, PacketType::Cam, 50, 100}});
  f.piggyback.pop_back();
  ln.on_reception(f, SimTime::seconds(1));
  EXPECT_EQ(ln.counters().malformed_piggyback, 1u);
  EXPECT_EQ(ln.counters().hidden_reports, 0u);
}

TEST(LearningNodeTest, HiddenOnlyDefersAroundHiddenButNotVisibleTraffic) {
  SchedulerConfig cfg;
  cfg.mode = LearningMode::HiddenOnly;
  LearningNode ln(0, cfg, baseline(), nullptr);
  const SimTime ws = SimTime::seconds(3);
  // Visible neighbor 1 transmits periodically right at the window start.
  for (int k = 0; k < 10; ++k) ln.on_reception(frame_from(1, ws - SimTime::millis(100 * (10 - k))), ws - SimTime::millis(100 * (10 - k)));
  ln.on_inquiry(ws);
  EXPECT_EQ(ln.dispatch(cam_at(ws), SimTime::micros(488)).deferred_by_us, 0);
  // A hidden neighbor predicted at the window start forces a deferral.
  ln.on_reception(frame_from(1, ws - SimTime::millis(50), {{77, PacketType::Cam, 50, 100}}), ws - SimTime::millis(49));
  ln.on_inquiry(ws);
  const auto r = ln.dispatch(cam_at(ws), SimTime::micros(488));
  EXPECT_GT(r.deferred_by_us, 0);
  EXPECT_EQ(r.predicted_overlap_us, 0);
  EXPECT_EQ(ln.counters().deferred, 1u);
  EXPECT_EQ(ln.log().size(), 2u);
}

TEST(LearningNodeTest, CapacityLimitsTrackedSet) {
  SchedulerConfig cfg;
  cfg.mode = LearningMode::VisibleAndHidden;
  cfg.capacity = 5;
  LearningNode ln(0, cfg, baseline(), nullptr);
  for (int n = 1; n <= 20; ++n) ln.on_reception(frame_from(n, SimTime::millis(n)), SimTime::millis(n));
  EXPECT_LE(ln.tracked().size(), 5u);
  ln.on_inquiry(SimTime::millis(100));
  EXPECT_EQ(ln.tracked().size(), 5u);
  EXPECT_LE(ln.predictor().size(), 5u);
}

TEST(Piggyback, EmptyHistoryGivesEmptyBlock) {
  ReceptionHistory h;
  const auto snap = h.snapshot(SimTime::seconds(1), 16, SimTime::millis(1500));
  EXPECT_TRUE(snap.empty());
  EXPECT_TRUE(encode_piggyback(snap, 16).empty());
}

TEST(Piggyback, SixteenEntriesAreHundredFortyFourBytes) {
  ReceptionHistory h;
  for (int n = 0; n < 30; ++n) h.record(n, PacketType::Cam, SimTime::millis(n));
  const auto snap = h.snapshot(SimTime::millis(100), 16, SimTime::millis(1500));
  ASSERT_EQ(snap.size(), 16u);
  EXPECT_EQ(snap.front().neighbor, 29);  // most recent first
  EXPECT_EQ(encode_piggyback(snap, 16).size(), 144u);
  EXPECT_EQ(encode_piggyback(snap, 4).size(), 36u);
}

TEST(Piggyback, SnapshotCarriesAgeAndLastInterval) {
  ReceptionHistory h;
  h.record(3, PacketType::Ldm, SimTime::millis(1000));
  h.record(3, PacketType::Ldm, SimTime::millis(2000));
  h.record(3, PacketType::Cam, SimTime::millis(2010));
  h.record(3, PacketType::Cam, SimTime::millis(2010));  // duplicate record collapses
  const auto snap = h.snapshot(SimTime::millis(2050) + SimTime::micros(400), 16, SimTime::millis(1500));
  ASSERT_EQ(snap.size(), 2u);
  EXPECT_EQ(snap[0].ptype, PacketType::Cam);
  EXPECT_EQ(snap[0].age_ms, 40);
  EXPECT_EQ(snap[1].ptype, PacketType::Ldm);
  EXPECT_EQ(snap[1].age_ms, 50);
  EXPECT_EQ(snap[1].interval_ms, 1000);
  // Stale records are skipped.
  EXPECT_TRUE(h.snapshot(SimTime::seconds(10), 16, SimTime::millis(1500)).empty());
}

TEST(Piggyback, FieldsSaturate) {
  EXPECT_EQ(saturating_ms(SimTime::seconds(100)), 65535);
  EXPECT_EQ(saturating_ms(SimTime::micros(1499)), 1);
  EXPECT_EQ(saturating_ms(SimTime::micros(1500)), 2);
  EXPECT_EQ(saturating_ms(SimTime::micros(-3)), 0);
}

TEST(Piggyback, DecodeRejectsMalformedBlocks) {
  const std::vector<PiggybackEntry> e{{1, PacketType::Cam, 1, 2}};
  auto block = encode_piggyback(e, 1);
  block.push_back(0);
  EXPECT_FALSE(decode_piggyback(block));
  block.pop_back();
  block[4] = 9;  // unknown packet type
  EXPECT_FALSE(decode_piggyback(block));
  EXPECT_TRUE(decode_piggyback(std::vector<std::uint8_t>{})->empty());
}

TEST(Piggyback, RoundTripsRandomHistories) {
  std::mt19937_64 eng(99);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<PiggybackEntry> entries(std::uniform_int_distribution<int>(0, 20)(eng));
    for (auto& x : entries) {
      x.neighbor = static_cast<NodeId>(std::uniform_int_distribution<std::int64_t>(0, 0x7fffffff)(eng));
      x.ptype = static_cast<PacketType>(std::uniform_int_distribution<int>(0, 2)(eng));
      x.age_ms = static_cast<std::uint16_t>(eng());
      x.interval_ms = static_cast<std::uint16_t>(eng());
    }
    const std::size_t budget = std::uniform_int_distribution<std::size_t>(0, 16)(eng);
    const auto block = encode_piggyback(entries, budget);
    const std::size_t kept = std::min(budget, entries.size());
    ASSERT_EQ(block.size(), kept * kPiggybackEntryBytes);
    const auto back = decode_piggyback(block);
    ASSERT_TRUE(back);
    EXPECT_EQ(*back, std::vector<PiggybackEntry>(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(kept)));
  }
}

TEST(SchedulingLog, LineFormat) {
  EXPECT_EQ(scheduling_log_header(), "t_us,ptype,deferred_by_us,predicted_overlap_us,no_gap_flag");
  EXPECT_EQ(scheduling_log_line({SimTime{1500}, PacketType::Ldm, 20, 3, true}), "1500,LDM,20,3,1");
}
