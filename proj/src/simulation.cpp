#include "v2x/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <optional>
#include <ostream>

#include "v2x/apps.hpp"
#include "v2x/mac.hpp"
#include "v2x/mobility.hpp"
#include "v2x/piggyback.hpp"
#include "v2x/rng.hpp"

namespace v2x {

namespace {

enum class Ev : std::uint8_t { MobilityTick, CbrWindow, FrameEnd, MacAttempt, AppTick, LdmFire, Generate, LnEnqueue, LnInquiry };

struct SimEvent {
  Ev kind = Ev::MobilityTick;
  std::uint8_t sub = 0;  // access category or packet type
  NodeId node = -1;
  std::int64_t arg = 0;  // frame slot or request creation time
};

std::uint64_t event_digest(const SimEvent& e) {
  return mix64((static_cast<std::uint64_t>(e.kind) << 56) ^ (static_cast<std::uint64_t>(e.sub) << 48) ^
               static_cast<std::uint32_t>(e.node) ^ mix64(static_cast<std::uint64_t>(e.arg)));
}

bool carries_piggyback(PacketType t, const ScenarioConfig& cfg) {
  return cfg.piggyback_budget > 0 && (t == PacketType::Cam || cfg.piggyback_all_types);
}

class World final : public MacHost {
 public:
  World(const ScenarioConfig& cfg, std::uint64_t seed, std::shared_ptr<const WeightFile> weights,
        const RunOutputs& out);
  RunResult run();

  EventHandle schedule_mac_attempt(NodeId node, AcName ac, SimTime at) override {
    return q_.schedule(at, SimEvent{Ev::MacAttempt, static_cast<std::uint8_t>(ac), node, 0});
  }
  void cancel_event(EventHandle h) override { q_.cancel(h); }
  void start_transmission(NodeId node, const MacPacket& packet, SimTime now) override;

 private:
  struct InFlight {
    std::uint32_t slot = 0;
    double p_mw = 0.0;
    double max_intf_mw = 0.0;
    bool corrupted = false;
  };
  struct Radio {
    std::vector<InFlight> inflight;
    bool transmitting = false;
    bool busy = false;
  };
  struct Rx {
    NodeId node;
    double p_mw;
  };
  struct FrameRec {
    Frame frame;
    AcName ac = AcName::BestEffort;
    std::vector<Rx> rx;
    std::vector<std::pair<NodeId, double>> prr_targets;
  };

  void dispatch(const SimEvent& e);
  void on_mobility_tick(SimTime t);
  void on_cbr_window(SimTime t);
  void on_frame_end(std::uint32_t slot, SimTime t);
  void on_app_tick(NodeId n, SimTime t);
  void on_ldm(NodeId n, SimTime t);
  void generate(NodeId n, PacketType pt, SimTime t);
  void on_generate(NodeId n, PacketType pt, SimTime t);
  void enqueue(NodeId n, PacketType pt, SimTime created, SimTime now);
  void update_busy(NodeId n, SimTime t);
  void rebuild_index();
  bool in_center(NodeId n) const;
  bool counted_receiver(NodeId n) const;
  template <class F>
  void for_each_in_range(double x, double r, F&& f) const;

  const ScenarioConfig& cfg_;
  std::uint64_t seed_;
  RunOutputs out_;
  double wrap_;
  EventQueue<SimEvent> q_;
  std::vector<VehicleState> veh_;
  std::vector<Engine> mob_rng_, app_rng_;
  std::unique_ptr<EdcaMac> mac_;
  std::optional<ChannelLoadMeter> cbr_;
  std::vector<Radio> radio_;
  std::vector<ReceptionHistory> hist_;
  std::vector<CamTriggerState> cam_;
  std::vector<CpmBurstState> cpm_;
  std::vector<LdmState> ldm_;
  std::deque<FrameRec> frames_;  // stable references: a frame end can start a new frame
  std::vector<std::uint32_t> free_slots_;
  std::vector<std::pair<double, NodeId>> index_;
  std::vector<std::uint64_t> rx_ok_stamp_;
  NodeId ln_ = -1;
  std::unique_ptr<LearningNode> learner_;
  PrrAccumulator prr_;
  ChannelLoadReport load_;
  RunResult res_;
  std::array<SimTime, kPacketTypeCount> nominal_air_{};
  SimTime warmup_;
  SimTime window_;
  double k_mw_, floor_mw_, thr_mw_, noise_mw_, capture_lin_, query_range_m_;
  std::uint64_t next_frame_id_ = 1;
  std::uint64_t next_req_id_ = 1;
};

World::World(const ScenarioConfig& cfg, std::uint64_t seed, std::shared_ptr<const WeightFile> weights,
             const RunOutputs& out)
    : cfg_(cfg),
      seed_(seed),
      out_(out),
      wrap_(cfg.mobility.boundary == Boundary::Wrap ? cfg.mobility.segment_length_m : 0.0),
      prr_(cfg.prr_bin_m, cfg.prr_max_m),
      warmup_(SimTime::from_seconds(cfg.warmup_s)),
      window_(cfg.predictor.window),
      k_mw_(dbm_to_mw(cfg.phy.tx_power_dbm - cfg.phy.ref_loss_db_at_1m)),
      floor_mw_(dbm_to_mw(cfg.phy.interference_floor_dbm)),
      thr_mw_(dbm_to_mw(cfg.phy.preamble_threshold_dbm)),
      noise_mw_(dbm_to_mw(cfg.phy.noise_floor_dbm)),
      capture_lin_(dbm_to_mw(cfg.phy.capture_sinr_db)),
      query_range_m_(std::max(cfg.phy.range_for_power_m(cfg.phy.interference_floor_dbm), cfg.prr_max_m) + 1.0) {
  Engine spawn_rng = make_engine(seed, Stream::Mobility, 0);
  veh_ = spawn_scenario(cfg.mobility, spawn_rng);
  const std::size_t n = veh_.size();
  for (std::size_t i = 0; i < n; ++i) {
    mob_rng_.push_back(make_engine(seed, Stream::Mobility, i + 1));
    app_rng_.push_back(make_engine(seed, Stream::Traffic, i));
  }
  mac_ = std::make_unique<EdcaMac>(cfg.mac, n, *this, seed);
  cbr_.emplace(n, SimTime::millis(100));
  radio_.resize(n);
  hist_.assign(n, ReceptionHistory{});
  rx_ok_stamp_.assign(n, 0);
  nominal_air_ = nominal_airtimes(cfg);

  // The learning node is the lane-0 vehicle closest to the segment midpoint.
  double best = 1e300;
  for (const auto& v : veh_) {
    if (v.lane != 0) continue;
    const double d = std::fabs(v.x - 0.5 * cfg.mobility.segment_length_m);
    if (d < best) {
      best = d;
      ln_ = v.id;
    }
  }

  cam_.resize(n);
  cpm_.resize(n);
  ldm_.resize(n);
  std::vector<SimTime> phase(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = static_cast<NodeId>(i);
    cam_[i].mode = cfg.apps.cam_mode;
    cpm_[i].capable = cfg.apps.cpm_enabled && (id == ln_ || cpm_capable(id, seed, cfg.apps.cpm_capable_fraction));
    ldm_[i].enabled = cfg.apps.ldm_enabled;
    phase[i] = SimTime{uniform_int(app_rng_[i], std::int64_t{0}, cfg.apps.check_period.us - 1)};
    ldm_[i].phase = SimTime{uniform_int(app_rng_[i], std::int64_t{0}, cfg.apps.ldm_period.us - 1)};
  }

  PredictorConfig pcfg = cfg.predictor;
  pcfg.nominal_air = nominal_air_;
  pcfg.ttl = cfg.scheduler.ttl;
  pcfg.max_interval_s = cfg.training.max_interval_s;
  pcfg.fixed_rate[static_cast<std::size_t>(PacketType::Cam)] = cfg.apps.cam_mode == CamMode::Periodic10Hz;
  if (cfg.mode() == LearningMode::None) pcfg.kind = PredictorKind::Baseline;
  learner_ = std::make_unique<LearningNode>(ln_, cfg.scheduler, pcfg,
                                            pcfg.kind == PredictorKind::Recurrent ? std::move(weights) : nullptr);

  rebuild_index();
  // Inquiry windows follow the learning node's own generation ticks, and are
  // scheduled first so each window is ready before that tick's requests.
  q_.schedule(phase[static_cast<std::size_t>(ln_)], SimEvent{Ev::LnInquiry, 0, ln_, 0});
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = static_cast<NodeId>(i);
    q_.schedule(phase[i], SimEvent{Ev::AppTick, 0, id, 0});
    if (ldm_[i].enabled) q_.schedule(ldm_[i].phase, SimEvent{Ev::LdmFire, 0, id, 0});
  }
  q_.schedule(SimTime::from_seconds(cfg.mobility.sampling_period_s), SimEvent{Ev::MobilityTick, 0, -1, 0});
  q_.schedule(cbr_->window_length(), SimEvent{Ev::CbrWindow, 0, -1, 0});
  if (out_.mobility_trace) {
    *out_.mobility_trace << mobility_trace_header() << '\n';
    for (const auto& v : veh_) *out_.mobility_trace << mobility_trace_row(v) << '\n';
  }
  if (out_.packet_log) *out_.packet_log << packet_log_header() << '\n';
  if (out_.cbr_series) *out_.cbr_series << cbr_series_header() << '\n';
}

RunResult World::run() {
  q_.run_until(SimTime::from_seconds(cfg_.duration_s), [this](const SimEvent& e) { dispatch(e); });
  if (out_.scheduling_log) {
    *out_.scheduling_log << scheduling_log_header() << '\n';
    for (const auto& r : learner_->log()) *out_.scheduling_log << scheduling_log_line(r) << '\n';
  }
  res_.prr = prr_;
  res_.mean_cbr = load_.mean();
  res_.cbr_samples = load_.samples();
  res_.learning_node = ln_;
  res_.vehicles = veh_.size();
  res_.learning = learner_->counters();
  res_.mac = mac_->counters();
  res_.kernel = q_.statistics();
  return res_;
}

void World::dispatch(const SimEvent& e) {
  const SimTime t = q_.now();
  switch (e.kind) {
    case Ev::MobilityTick: on_mobility_tick(t); break;
    case Ev::CbrWindow: on_cbr_window(t); break;
    case Ev::FrameEnd: on_frame_end(static_cast<std::uint32_t>(e.arg), t); break;
    case Ev::MacAttempt: mac_->on_attempt(e.node, static_cast<AcName>(e.sub), t); break;
    case Ev::AppTick: on_app_tick(e.node, t); break;
    case Ev::LdmFire: on_ldm(e.node, t); break;
    case Ev::Generate: on_generate(e.node, static_cast<PacketType>(e.sub), t); break;
    case Ev::LnEnqueue: enqueue(e.node, static_cast<PacketType>(e.sub), SimTime{e.arg}, t); break;
    case Ev::LnInquiry:
      learner_->on_inquiry(t);
      q_.schedule(t + window_, SimEvent{Ev::LnInquiry, 0, ln_, 0});
      break;
  }
}

void World::rebuild_index() {
  index_.clear();
  index_.reserve(veh_.size());
  for (const auto& v : veh_) index_.emplace_back(v.x, v.id);
  std::sort(index_.begin(), index_.end());
}

template <class F>
void World::for_each_in_range(double x, double r, F&& f) const {
  auto visit = [&](double lo, double hi) {
    auto it = std::lower_bound(index_.begin(), index_.end(), std::make_pair(lo, std::numeric_limits<NodeId>::min()));
    for (; it != index_.end() && it->first <= hi; ++it) f(it->second);
  };
  if (wrap_ > 0.0) {
    if (2.0 * r >= wrap_) {
      for (const auto& p : index_) f(p.second);
      return;
    }
    visit(std::max(x - r, 0.0), std::min(x + r, wrap_));
    if (x - r < 0.0) visit(x - r + wrap_, wrap_);
    if (x + r > wrap_) visit(0.0, x + r - wrap_);
  } else {
    visit(x - r, x + r);
  }
}

bool World::in_center(NodeId n) const {
  if (cfg_.center_half_width_m <= 0.0) return true;
  const auto& a = veh_[static_cast<std::size_t>(ln_)];
  return std::fabs(wrapped_dx(a.x, veh_[static_cast<std::size_t>(n)].x, wrap_)) <= cfg_.center_half_width_m;
}

bool World::counted_receiver(NodeId n) const {
  if (cfg_.edge_exclusion_m <= 0.0) return true;
  const double x = veh_[static_cast<std::size_t>(n)].x;
  return x >= cfg_.edge_exclusion_m && x <= cfg_.mobility.segment_length_m - cfg_.edge_exclusion_m;
}

void World::update_busy(NodeId n, SimTime t) {
  Radio& r = radio_[static_cast<std::size_t>(n)];
  double sum = 0.0;
  for (const auto& f : r.inflight) sum += f.p_mw;
  const bool busy = r.transmitting || sum >= thr_mw_ * (1.0 - 1e-12);
  if (busy == r.busy) return;
  r.busy = busy;
  if (busy) {
    cbr_->set_busy(n, t);
    mac_->on_busy(n, t);
  } else {
    cbr_->set_idle(n, t);
    mac_->on_idle(n, t);
  }
}

void World::start_transmission(NodeId s, const MacPacket& pkt, SimTime t) {
  std::uint32_t slot;
  if (!free_slots_.empty()) {
    slot = free_slots_.back();
    free_slots_.pop_back();
  } else {
    slot = static_cast<std::uint32_t>(frames_.size());
    frames_.emplace_back();
  }
  FrameRec& fr = frames_[slot];
  const auto si = static_cast<std::size_t>(s);
  const VehicleState& v = veh_[si];
  Frame& f = fr.frame;
  f.id = next_frame_id_++;
  f.sender = s;
  f.ptype = pkt.ptype;
  f.payload_bytes = pkt.payload_bytes;
  f.created_at = pkt.created_at;
  f.tx_start = t;
  f.tx_pos = v.x;
  f.dynamics = SenderDynamics{v.speed, v.heading, v.x};
  f.piggyback.clear();
  if (carries_piggyback(pkt.ptype, cfg_)) {
    const auto entries = hist_[si].snapshot(t, cfg_.piggyback_budget, cfg_.scheduler.ttl);
    f.piggyback = encode_piggyback(entries, cfg_.piggyback_budget);
  }
  f.piggyback_bytes = static_cast<int>(f.piggyback.size());
  f.air_time = airtime(f.payload_bytes + f.piggyback_bytes, cfg_.phy);
  fr.ac = pkt.ac;
  fr.rx.clear();
  fr.prr_targets.clear();
  ++res_.transmitted[static_cast<std::size_t>(pkt.ptype)];

  if (out_.packet_log) {
    write_packet_log_row(*out_.packet_log, PacketLogRow{t, s, pkt.ptype, pkt.payload_bytes, f.dynamics});
  }

  Radio& rs = radio_[si];
  rs.transmitting = true;
  for (auto& in : rs.inflight) in.corrupted = true;  // half duplex
  update_busy(s, t);

  const bool track_prr = s == ln_ && t >= warmup_;
  if (s == ln_) ++res_.learning_node_frames;
  const double n_half = 0.5 * cfg_.phy.path_loss_exponent;
  for_each_in_range(v.x, query_range_m_, [&](NodeId r) {
    if (r == s) return;
    const auto ri = static_cast<std::size_t>(r);
    const double dx = wrapped_dx(v.x, veh_[ri].x, wrap_);
    const double dy = veh_[ri].y - v.y;
    const double d2 = std::max(dx * dx + dy * dy, 1.0);
    if (track_prr && d2 < cfg_.prr_max_m * cfg_.prr_max_m && counted_receiver(r))
      fr.prr_targets.emplace_back(r, std::sqrt(d2));
    const double p = k_mw_ * std::exp(-n_half * std::log(d2));
    if (p < floor_mw_) return;
    Radio& rr = radio_[ri];
    InFlight in{slot, p, 0.0, rr.transmitting};
    for (auto& other : rr.inflight) {
      in.max_intf_mw = std::max(in.max_intf_mw, other.p_mw);
      other.max_intf_mw = std::max(other.max_intf_mw, p);
    }
    rr.inflight.push_back(in);
    fr.rx.push_back({r, p});
    update_busy(r, t);
  });
  q_.schedule(t + f.air_time, SimEvent{Ev::FrameEnd, 0, s, static_cast<std::int64_t>(slot)});
}

void World::on_frame_end(std::uint32_t slot, SimTime t) {
  FrameRec& fr = frames_[slot];
  const Frame& f = fr.frame;
  const NodeId s = f.sender;
  radio_[static_cast<std::size_t>(s)].transmitting = false;
  mac_->on_tx_end(s, fr.ac, t);
  update_busy(s, t);

  for (const Rx& rx : fr.rx) {
    const auto ri = static_cast<std::size_t>(rx.node);
    Radio& rr = radio_[ri];
    auto it = std::find_if(rr.inflight.begin(), rr.inflight.end(), [&](const InFlight& in) { return in.slot == slot; });
    const InFlight in = *it;
    rr.inflight.erase(it);
    const bool ok = !in.corrupted && in.p_mw >= thr_mw_ * (1.0 - 1e-12) &&
                    in.p_mw >= capture_lin_ * (in.max_intf_mw + noise_mw_) * (1.0 - 1e-12);
    if (ok) {
      rx_ok_stamp_[ri] = f.id;
      hist_[ri].record(s, f.ptype, f.tx_start);
      if (rx.node == ln_) learner_->on_reception(f, t);
    }
    update_busy(rx.node, t);
  }
  for (const auto& [node, d] : fr.prr_targets) prr_.record(d, rx_ok_stamp_[static_cast<std::size_t>(node)] == f.id);
  fr.rx.clear();
  fr.prr_targets.clear();
  free_slots_.push_back(slot);
}

void World::on_mobility_tick(SimTime t) {
  for (auto& v : veh_) v = step(v, cfg_.mobility, mob_rng_[static_cast<std::size_t>(v.id)]);
  rebuild_index();
  if (out_.mobility_trace)
    for (const auto& v : veh_) *out_.mobility_trace << mobility_trace_row(v) << '\n';
  q_.schedule(t + SimTime::from_seconds(cfg_.mobility.sampling_period_s), SimEvent{Ev::MobilityTick, 0, -1, 0});
}

void World::on_cbr_window(SimTime t) {
  const auto windows = cbr_->close_window(t);
  const SimTime start = t - cbr_->window_length();
  if (start >= warmup_) {
    for (std::size_t i = 0; i < windows.size(); ++i)
      if (in_center(static_cast<NodeId>(i))) load_.add(windows[i].cbr());
  }
  if (out_.cbr_series) {
    char buf[64];
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const int k = std::snprintf(buf, sizeof buf, "%lld,%zu,%.4f\n", static_cast<long long>(start.us / 1000), i,
                                  windows[i].cbr());
      out_.cbr_series->write(buf, k);
    }
  }
  q_.schedule(t + cbr_->window_length(), SimEvent{Ev::CbrWindow, 0, -1, 0});
}

void World::on_app_tick(NodeId n, SimTime t) {
  const auto i = static_cast<std::size_t>(n);
  q_.schedule(t + cfg_.apps.check_period, SimEvent{Ev::AppTick, 0, n, 0});
  if (cam_check(cam_[i], veh_[i], t, cfg_.apps, wrap_)) generate(n, PacketType::Cam, t);
  if (cpm_[i].capable && cpm_tick(cpm_[i], app_rng_[i], t, n, cfg_.apps)) generate(n, PacketType::Cpm, t);
}

void World::on_ldm(NodeId n, SimTime t) {
  q_.schedule(t + cfg_.apps.ldm_period, SimEvent{Ev::LdmFire, 0, n, 0});
  if (ldm_tick(ldm_[static_cast<std::size_t>(n)], t, n, cfg_.apps)) generate(n, PacketType::Ldm, t);
}

void World::generate(NodeId n, PacketType pt, SimTime t) {
  ++res_.generated[static_cast<std::size_t>(pt)];
  const SimTime j = draw_jitter(app_rng_[static_cast<std::size_t>(n)], cfg_.apps);
  q_.schedule(t + j, SimEvent{Ev::Generate, static_cast<std::uint8_t>(pt), n, 0});
}

void World::on_generate(NodeId n, PacketType pt, SimTime t) {
  if (n == ln_) {
    AppPacketRequest req = make_request(n, pt, t, cfg_.apps);
    req.id = next_req_id_;
    const GapSearchResult g = learner_->dispatch(req, nominal_air_[static_cast<std::size_t>(pt)]);
    if (g.chosen_tx > t) {
      q_.schedule(g.chosen_tx, SimEvent{Ev::LnEnqueue, static_cast<std::uint8_t>(pt), n, t.us});
      return;
    }
  }
  enqueue(n, pt, t, t);
}

void World::enqueue(NodeId n, PacketType pt, SimTime created, SimTime now) {
  MacPacket p;
  p.request_id = next_req_id_++;
  p.ptype = pt;
  p.payload_bytes = cfg_.apps.payload_bytes(pt);
  p.created_at = created;
  p.deadline = created + cfg_.apps.deadline_for(pt);
  p.ac = access_category_for(pt);
  mac_->enqueue(n, p, now);
}

}  // namespace

std::array<SimTime, kPacketTypeCount> nominal_airtimes(const ScenarioConfig& cfg) {
  std::array<SimTime, kPacketTypeCount> out{};
  for (int k = 0; k < kPacketTypeCount; ++k) {
    const auto t = static_cast<PacketType>(k);
    const int extra = carries_piggyback(t, cfg) ? static_cast<int>(cfg.piggyback_budget * kPiggybackEntryBytes) : 0;
    out[static_cast<std::size_t>(k)] = airtime(cfg.apps.payload_bytes(t) + extra, cfg.phy);
  }
  return out;
}

RunResult run_simulation(const ScenarioConfig& cfg, std::uint64_t seed, std::shared_ptr<const WeightFile> weights,
                         const RunOutputs& outputs) {
  cfg.validate();
  World w(cfg, seed, std::move(weights), outputs);
  return w.run();
}

}  // namespace v2x
