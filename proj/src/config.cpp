#include "v2x/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace v2x {

const char* to_string(Traffic t) {
  switch (t) {
    case Traffic::Cam10Hz: return "Cam10Hz";
    case Traffic::CamTrigHigh: return "CamTrigHigh";
    case Traffic::CamTrigLow: return "CamTrigLow";
    case Traffic::CamCpm: return "CamCpm";
    case Traffic::CamCpmLdm: return "CamCpmLdm";
  }
  return "?";
}

Traffic traffic_from_string(const std::string& s) {
  for (Traffic t : kAllTraffic)
    if (s == to_string(t)) return t;
  throw std::invalid_argument("unknown traffic pattern '" + s + "'");
}

void apply_traffic_preset(ScenarioConfig& cfg, Traffic t) {
  cfg.traffic = t;
  auto band = [&](double lo, double hi) {
    cfg.mobility.speed_min = lo;
    cfg.mobility.speed_max = hi;
    cfg.mobility.mean_speed = 0.5 * (lo + hi);
  };
  cfg.apps.cpm_enabled = false;
  cfg.apps.ldm_enabled = false;
  switch (t) {
    case Traffic::Cam10Hz:
      cfg.apps.cam_mode = CamMode::Periodic10Hz;
      band(20.0, 45.0);
      break;
    case Traffic::CamTrigHigh:
      cfg.apps.cam_mode = CamMode::Triggered;
      band(35.0, 45.0);
      break;
    case Traffic::CamTrigLow:
      cfg.apps.cam_mode = CamMode::Triggered;
      band(20.0, 30.0);
      break;
    case Traffic::CamCpm:
      cfg.apps.cam_mode = CamMode::Triggered;
      cfg.apps.cpm_enabled = true;
      band(20.0, 30.0);
      break;
    case Traffic::CamCpmLdm:
      cfg.apps.cam_mode = CamMode::Triggered;
      cfg.apps.cpm_enabled = true;
      cfg.apps.ldm_enabled = true;
      band(20.0, 30.0);
      break;
  }
}

void ScenarioConfig::validate() const {
  if (!(duration_s > 0.0)) throw std::invalid_argument("duration_s must be > 0");
  if (warmup_s < 0.0 || warmup_s >= duration_s) throw std::invalid_argument("warmup_s must be in [0, duration_s)");
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  if (!(prr_bin_m > 0.0) || !(prr_max_m > 0.0)) throw std::invalid_argument("metrics bins must be > 0");
  if (edge_exclusion_m < 0.0 || center_half_width_m < 0.0) throw std::invalid_argument("metrics regions must be >= 0");
  mobility.validate();
  phy.validate();
  mac.validate();
  apps.validate();
  scheduler.validate();
  training.validate();
}

bool ScenarioConfig::needs_weights() const {
  return mode() != LearningMode::None && predictor.kind == PredictorKind::Recurrent;
}

ConfigError::ConfigError(const std::string& origin, std::size_t line, const std::string& msg)
    : std::runtime_error(origin + ":" + std::to_string(line) + ": " + msg), line_(line) {}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v) {
  double d = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (ec != std::errc{} || p != v.data() + v.size()) throw std::invalid_argument("expected a number, got '" + v + "'");
  return d;
}

std::int64_t to_int(const std::string& v) {
  std::int64_t i = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), i);
  if (ec != std::errc{} || p != v.data() + v.size()) throw std::invalid_argument("expected an integer, got '" + v + "'");
  return i;
}

std::uint64_t to_uint(const std::string& v) {
  std::uint64_t i = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), i);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
  return i;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected true/false, got '" + v + "'");
}

std::vector<int> to_int_list(const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<int>(to_int(trim(item))));
  if (out.empty()) throw std::invalid_argument("expected a comma-separated list");
  return out;
}

using Setter = std::function<void(ScenarioConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> m;
    auto dbl = [&](const char* k, auto member) {
      m[k] = [member](ScenarioConfig& c, const std::string& v) { member(c) = to_double(v); };
    };
    auto i64 = [&](const char* k, auto member) {
      m[k] = [member](ScenarioConfig& c, const std::string& v) { member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(to_int(v)); };
    };
    auto us = [&](const char* k, auto member, std::int64_t unit) {
      m[k] = [member, unit](ScenarioConfig& c, const std::string& v) { member(c) = SimTime{to_int(v) * unit}; };
    };
    auto bol = [&](const char* k, auto member) {
      m[k] = [member](ScenarioConfig& c, const std::string& v) { member(c) = to_bool(v); };
    };

    m["name"] = [](ScenarioConfig& c, const std::string& v) { c.name = v; };
    m["traffic"] = [](ScenarioConfig& c, const std::string& v) { c.traffic = traffic_from_string(v); };
    m["mode"] = [](ScenarioConfig& c, const std::string& v) { c.scheduler.mode = learning_mode_from_string(v); };
    dbl("duration_s", [](ScenarioConfig& c) -> double& { return c.duration_s; });
    dbl("warmup_s", [](ScenarioConfig& c) -> double& { return c.warmup_s; });
    m["seed"] = [](ScenarioConfig& c, const std::string& v) { c.seed = to_uint(v); };
    i64("runs", [](ScenarioConfig& c) -> int& { return c.runs; });
    i64("jobs", [](ScenarioConfig& c) -> int& { return c.jobs; });
    m["weight_file"] = [](ScenarioConfig& c, const std::string& v) { c.weight_file = v; };
    dbl("training.log_duration_s", [](ScenarioConfig& c) -> double& { return c.training_log_duration_s; });

    dbl("mobility.alpha", [](ScenarioConfig& c) -> double& { return c.mobility.alpha; });
    dbl("mobility.sampling_period_s", [](ScenarioConfig& c) -> double& { return c.mobility.sampling_period_s; });
    dbl("mobility.mean_speed", [](ScenarioConfig& c) -> double& { return c.mobility.mean_speed; });
    dbl("mobility.speed_sigma", [](ScenarioConfig& c) -> double& { return c.mobility.speed_sigma; });
    dbl("mobility.speed_min", [](ScenarioConfig& c) -> double& { return c.mobility.speed_min; });
    dbl("mobility.speed_max", [](ScenarioConfig& c) -> double& { return c.mobility.speed_max; });
    dbl("mobility.heading_sigma_deg", [](ScenarioConfig& c) -> double& { return c.mobility.heading_sigma_deg; });
    dbl("mobility.segment_length_m", [](ScenarioConfig& c) -> double& { return c.mobility.segment_length_m; });
    dbl("mobility.density_per_lane_km", [](ScenarioConfig& c) -> double& { return c.mobility.density_per_lane_km; });
    i64("mobility.lanes_per_direction", [](ScenarioConfig& c) -> int& { return c.mobility.lanes_per_direction; });
    dbl("mobility.lane_width_m", [](ScenarioConfig& c) -> double& { return c.mobility.lane_width_m; });
    m["mobility.boundary"] = [](ScenarioConfig& c, const std::string& v) {
      if (v == "wrap") c.mobility.boundary = Boundary::Wrap;
      else if (v == "reflect") c.mobility.boundary = Boundary::Reflect;
      else throw std::invalid_argument("expected wrap|reflect, got '" + v + "'");
    };

    dbl("phy.tx_power_dbm", [](ScenarioConfig& c) -> double& { return c.phy.tx_power_dbm; });
    dbl("phy.path_loss_exponent", [](ScenarioConfig& c) -> double& { return c.phy.path_loss_exponent; });
    dbl("phy.ref_loss_db", [](ScenarioConfig& c) -> double& { return c.phy.ref_loss_db_at_1m; });
    dbl("phy.preamble_threshold_dbm", [](ScenarioConfig& c) -> double& { return c.phy.preamble_threshold_dbm; });
    dbl("phy.noise_floor_dbm", [](ScenarioConfig& c) -> double& { return c.phy.noise_floor_dbm; });
    dbl("phy.capture_sinr_db", [](ScenarioConfig& c) -> double& { return c.phy.capture_sinr_db; });
    dbl("phy.data_rate_bps", [](ScenarioConfig& c) -> double& { return c.phy.data_rate_bps; });
    i64("phy.preamble_us", [](ScenarioConfig& c) -> std::int64_t& { return c.phy.preamble_us; });
    i64("phy.overhead_bytes", [](ScenarioConfig& c) -> int& { return c.phy.overhead_bytes; });
    dbl("phy.interference_floor_dbm", [](ScenarioConfig& c) -> double& { return c.phy.interference_floor_dbm; });

    i64("mac.slot_us", [](ScenarioConfig& c) -> std::int64_t& { return c.mac.slot_us; });
    i64("mac.sifs_us", [](ScenarioConfig& c) -> std::int64_t& { return c.mac.sifs_us; });
    i64("mac.be.aifsn", [](ScenarioConfig& c) -> int& { return c.mac.best_effort.aifsn; });
    i64("mac.be.cw_min", [](ScenarioConfig& c) -> int& { return c.mac.best_effort.cw_min; });
    i64("mac.be.cw_max", [](ScenarioConfig& c) -> int& { return c.mac.best_effort.cw_max; });
    i64("mac.bk.aifsn", [](ScenarioConfig& c) -> int& { return c.mac.background.aifsn; });
    i64("mac.bk.cw_min", [](ScenarioConfig& c) -> int& { return c.mac.background.cw_min; });
    i64("mac.bk.cw_max", [](ScenarioConfig& c) -> int& { return c.mac.background.cw_max; });
    i64("mac.queue_cap", [](ScenarioConfig& c) -> std::size_t& { return c.mac.queue_cap; });

    m["apps.cam_mode"] = [](ScenarioConfig& c, const std::string& v) {
      if (v == "periodic") c.apps.cam_mode = CamMode::Periodic10Hz;
      else if (v == "triggered") c.apps.cam_mode = CamMode::Triggered;
      else throw std::invalid_argument("expected periodic|triggered, got '" + v + "'");
    };
    bol("apps.cpm_enabled", [](ScenarioConfig& c) -> bool& { return c.apps.cpm_enabled; });
    bol("apps.ldm_enabled", [](ScenarioConfig& c) -> bool& { return c.apps.ldm_enabled; });
    i64("apps.cam_bytes", [](ScenarioConfig& c) -> int& { return c.apps.cam_bytes; });
    i64("apps.cpm_bytes", [](ScenarioConfig& c) -> int& { return c.apps.cpm_bytes; });
    i64("apps.ldm_bytes", [](ScenarioConfig& c) -> int& { return c.apps.ldm_bytes; });
    dbl("apps.cam_pos_threshold_m", [](ScenarioConfig& c) -> double& { return c.apps.cam_pos_threshold_m; });
    dbl("apps.cam_heading_threshold_deg", [](ScenarioConfig& c) -> double& { return c.apps.cam_heading_threshold_deg; });
    dbl("apps.cam_speed_threshold_mps", [](ScenarioConfig& c) -> double& { return c.apps.cam_speed_threshold_mps; });
    dbl("apps.cpm_capable_fraction", [](ScenarioConfig& c) -> double& { return c.apps.cpm_capable_fraction; });
    dbl("apps.cpm_burst_rate_hz", [](ScenarioConfig& c) -> double& { return c.apps.cpm_burst_rate_hz; });
    i64("apps.cpm_burst_frames", [](ScenarioConfig& c) -> int& { return c.apps.cpm_burst_frames; });
    us("apps.jitter_us", [](ScenarioConfig& c) -> SimTime& { return c.apps.jitter_max; }, 1);
    us("apps.cam_deadline_ms", [](ScenarioConfig& c) -> SimTime& { return c.apps.cam_deadline; }, 1000);
    us("apps.cpm_deadline_ms", [](ScenarioConfig& c) -> SimTime& { return c.apps.cpm_deadline; }, 1000);
    us("apps.ldm_deadline_ms", [](ScenarioConfig& c) -> SimTime& { return c.apps.ldm_deadline; }, 1000);

    i64("scheduler.capacity", [](ScenarioConfig& c) -> std::size_t& { return c.scheduler.capacity; });
    us("scheduler.guard_us", [](ScenarioConfig& c) -> SimTime& { return c.scheduler.guard; }, 1);
    us("scheduler.ttl_ms", [](ScenarioConfig& c) -> SimTime& { return c.scheduler.ttl; }, 1000);

    m["predictor.kind"] = [](ScenarioConfig& c, const std::string& v) {
      if (v == "recurrent") c.predictor.kind = PredictorKind::Recurrent;
      else if (v == "baseline") c.predictor.kind = PredictorKind::Baseline;
      else throw std::invalid_argument("expected recurrent|baseline, got '" + v + "'");
    };
    us("predictor.window_ms", [](ScenarioConfig& c) -> SimTime& { return c.predictor.window; }, 1000);

    i64("piggyback.budget", [](ScenarioConfig& c) -> std::size_t& { return c.piggyback_budget; });
    bol("piggyback.all_types", [](ScenarioConfig& c) -> bool& { return c.piggyback_all_types; });

    i64("training.epochs", [](ScenarioConfig& c) -> int& { return c.training.epochs; });
    dbl("training.learning_rate", [](ScenarioConfig& c) -> double& { return c.training.learning_rate; });
    m["training.seed"] = [](ScenarioConfig& c, const std::string& v) { c.training.seed = to_uint(v); };
    i64("training.bptt_chunk", [](ScenarioConfig& c) -> int& { return c.training.bptt_chunk; });
    i64("training.max_sequences", [](ScenarioConfig& c) -> std::size_t& { return c.training.max_sequences; });
    i64("training.max_steps", [](ScenarioConfig& c) -> std::size_t& { return c.training.max_steps_per_sequence; });
    i64("training.lstm_width", [](ScenarioConfig& c) -> int& { return c.training.shape.lstm; });
    m["training.dense"] = [](ScenarioConfig& c, const std::string& v) { c.training.shape.dense = to_int_list(v); };

    dbl("metrics.bin_width_m", [](ScenarioConfig& c) -> double& { return c.prr_bin_m; });
    dbl("metrics.max_range_m", [](ScenarioConfig& c) -> double& { return c.prr_max_m; });
    dbl("metrics.edge_exclusion_m", [](ScenarioConfig& c) -> double& { return c.edge_exclusion_m; });
    dbl("metrics.center_half_width_m", [](ScenarioConfig& c) -> double& { return c.center_half_width_m; });

    m["output.packet_log"] = [](ScenarioConfig& c, const std::string& v) { c.outputs.packet_log = v; };
    m["output.cbr_series"] = [](ScenarioConfig& c, const std::string& v) { c.outputs.cbr_series = v; };
    m["output.scheduling_log"] = [](ScenarioConfig& c, const std::string& v) { c.outputs.scheduling_log = v; };
    m["output.mobility_trace"] = [](ScenarioConfig& c, const std::string& v) { c.outputs.mobility_trace = v; };
    return m;
  }();
  return table;
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::string& origin) {
  struct Line {
    std::size_t no;
    std::string key, value;
  };
  std::vector<Line> lines;
  std::istringstream is(text);
  std::string raw;
  std::size_t no = 0;
  while (std::getline(is, raw)) {
    ++no;
    if (const auto h = raw.find('#'); h != std::string::npos) raw.erase(h);
    const std::string s = trim(raw);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(origin, no, "expected 'key = value'");
    Line l{no, trim(s.substr(0, eq)), trim(s.substr(eq + 1))};
    if (l.key.empty()) throw ConfigError(origin, no, "empty key");
    if (!setters().contains(l.key)) throw ConfigError(origin, no, "unknown key '" + l.key + "'");
    lines.push_back(std::move(l));
  }

  ScenarioConfig cfg;
  for (const auto& l : lines) {
    if (l.key != "traffic") continue;
    try {
      apply_traffic_preset(cfg, traffic_from_string(l.value));
    } catch (const std::exception& e) {
      throw ConfigError(origin, l.no, e.what());
    }
  }
  for (const auto& l : lines) {
    if (l.key == "traffic") continue;
    try {
      setters().at(l.key)(cfg, l.value);
    } catch (const std::exception& e) {
      throw ConfigError(origin, l.no, l.key + ": " + e.what());
    }
  }
  try {
    cfg.validate();
    if (cfg.needs_weights() && cfg.weight_file.empty())
      throw std::invalid_argument("learning mode " + std::string(to_string(cfg.mode())) +
                                  " with the recurrent predictor needs weight_file (a path or 'auto')");
  } catch (const std::exception& e) {
    throw ConfigError(origin, no, std::string("invalid configuration: ") + e.what());
  }
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path, 0, "cannot open config file");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path);
}

void apply_seed_override(ScenarioConfig& cfg) {
  if (const char* s = std::getenv("SEED"); s != nullptr && *s != '\0') cfg.seed = to_uint(s);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [k, _] : setters()) out.push_back(k);
  return out;
}

}  // namespace v2x
