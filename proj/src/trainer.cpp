#include "v2x/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "v2x/rng.hpp"

namespace v2x {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <class T>
T parse_num(const std::string& s, std::size_t line_no, const char* field) {
  T v{};
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e)
    throw PacketLogError("packet log line " + std::to_string(line_no) + ": bad " + field + " '" + s + "'");
  return v;
}

}  // namespace

std::vector<PacketLogRow> read_packet_log(std::istream& is) {
  std::vector<PacketLogRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("t_us", 0) == 0) continue;
    const auto f = split_csv(line);
    if (f.size() != 7)
      throw PacketLogError("packet log line " + std::to_string(line_no) + ": expected 7 fields, got " +
                           std::to_string(f.size()));
    PacketLogRow r;
    r.t = SimTime{parse_num<std::int64_t>(f[0], line_no, "t_us")};
    r.sender = parse_num<NodeId>(f[1], line_no, "sender");
    try {
      r.ptype = packet_type_from_string(f[2]);
    } catch (const std::exception&) {
      throw PacketLogError("packet log line " + std::to_string(line_no) + ": bad ptype '" + f[2] + "'");
    }
    r.payload = parse_num<int>(f[3], line_no, "payload");
    r.dynamics.speed = parse_num<double>(f[4], line_no, "speed");
    r.dynamics.heading = parse_num<double>(f[5], line_no, "heading");
    r.dynamics.x = parse_num<double>(f[6], line_no, "x");
    rows.push_back(r);
  }
  return rows;
}

std::vector<PacketLogRow> read_packet_log_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw PacketLogError("cannot open packet log: " + path);
  return read_packet_log(is);
}

void write_packet_log_row(std::ostream& os, const PacketLogRow& r) {
  char buf[160];
  const int n = std::snprintf(buf, sizeof buf, "%lld,%d,%s,%d,%.6f,%.6f,%.6f\n", static_cast<long long>(r.t.us),
                              r.sender, to_string(r.ptype), r.payload, r.dynamics.speed, r.dynamics.heading,
                              r.dynamics.x);
  os.write(buf, n);
}

void TrainingConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("training.epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("training.learning_rate must be > 0");
  if (bptt_chunk < 1) throw std::invalid_argument("training.bptt_chunk must be >= 1");
  if (!(max_interval_s > 0.0)) throw std::invalid_argument("training.max_interval_s must be > 0");
  if (max_sequences < 1 || max_steps_per_sequence < 1)
    throw std::invalid_argument("training: sequence limits must be >= 1");
  if (shape.lstm < 1) throw std::invalid_argument("training: lstm width must be >= 1");
}

std::vector<TrainingSequence> build_sequences(const std::vector<PacketLogRow>& rows, PacketType type, FeatureSet fs,
                                              double max_interval_s) {
  std::map<NodeId, std::vector<const PacketLogRow*>> streams;
  for (const auto& r : rows)
    if (r.ptype == type) streams[r.sender].push_back(&r);

  std::vector<TrainingSequence> out;
  for (auto& [sender, pk] : streams) {
    std::stable_sort(pk.begin(), pk.end(), [](const PacketLogRow* a, const PacketLogRow* b) { return a->t < b->t; });
    if (pk.size() < 3) continue;
    TrainingSequence seq;
    seq.sender = sender;
    seq.ptype = type;
    for (std::size_t k = 1; k + 1 < pk.size(); ++k) {
      const double dt_prev = std::min((pk[k]->t - pk[k - 1]->t).to_seconds(), max_interval_s);
      const double dt_next = std::min((pk[k + 1]->t - pk[k]->t).to_seconds(), max_interval_s);
      seq.raw.push_back(raw_features(fs, dt_prev, pk[k]->dynamics, pk[k - 1]->dynamics));
      seq.targets.push_back(dt_next);
    }
    out.push_back(std::move(seq));
  }
  return out;
}

TypeModel train_model(const std::vector<TrainingSequence>& all, PacketType type, FeatureSet fs,
                      const TrainingConfig& cfg, ModelTrainingReport* report) {
  cfg.validate();
  TypeModel model;
  model.ptype = type;
  model.features = fs;
  NetShape shape = cfg.shape;
  shape.inputs = feature_count(fs);
  model.net = RecurrentNet(shape);

  ModelTrainingReport rep;
  rep.ptype = type;
  rep.features = fs;

  Engine eng = make_engine(cfg.seed, Stream::Training, static_cast<std::uint64_t>(type) * 2 + static_cast<std::uint64_t>(fs));

  // Deterministic subset of streams, truncated to a bounded number of steps.
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), eng);
  if (order.size() > cfg.max_sequences) order.resize(cfg.max_sequences);
  std::sort(order.begin(), order.end());

  std::vector<std::vector<double>> raw_rows;
  std::vector<double> raw_targets;
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // (sequence index, steps used)
  for (std::size_t idx : order) {
    const auto& s = all[idx];
    const std::size_t n = std::min(s.targets.size(), cfg.max_steps_per_sequence);
    if (n == 0) continue;
    spans.emplace_back(idx, n);
    raw_rows.insert(raw_rows.end(), s.raw.begin(), s.raw.begin() + static_cast<std::ptrdiff_t>(n));
    raw_targets.insert(raw_targets.end(), s.targets.begin(), s.targets.begin() + static_cast<std::ptrdiff_t>(n));
  }

  if (raw_rows.empty()) {
    model.fallback = true;
    model.scaler.lo.assign(static_cast<std::size_t>(shape.inputs), 0.0);
    model.scaler.hi.assign(static_cast<std::size_t>(shape.inputs), 1.0);
    rep.fallback = true;
    if (report) *report = rep;
    return model;
  }

  model.scaler = FeatureScaler::fit(raw_rows, raw_targets);
  model.net.init_random(eng);

  struct Scaled {
    std::vector<Vec> xs;
    std::vector<double> ys;
  };
  std::vector<Scaled> data;
  for (const auto& [idx, n] : spans) {
    Scaled sc;
    for (std::size_t k = 0; k < n; ++k) {
      sc.xs.push_back(model.scaler.scale(all[idx].raw[k]));
      sc.ys.push_back(model.scaler.scale_target(all[idx].targets[k]));
    }
    rep.steps += n;
    data.push_back(std::move(sc));
  }
  rep.sequences = data.size();

  Adam adam(model.net.parameter_count(), cfg.learning_rate);
  Vec grad;
  std::vector<std::size_t> seq_order(data.size());
  std::iota(seq_order.begin(), seq_order.end(), 0);
  const auto chunk = static_cast<std::size_t>(cfg.bptt_chunk);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(seq_order.begin(), seq_order.end(), eng);
    double loss_sum = 0.0;
    std::size_t loss_steps = 0;
    for (std::size_t si : seq_order) {
      const Scaled& sc = data[si];
      LstmState state = model.net.initial_state();
      for (std::size_t b = 0; b < sc.xs.size(); b += chunk) {
        const std::size_t len = std::min(chunk, sc.xs.size() - b);
        const double loss = model.net.sequence_loss(std::span(sc.xs).subspan(b, len),
                                                    std::span(sc.ys).subspan(b, len), state, &grad);
        loss_sum += loss * static_cast<double>(len);
        loss_steps += len;
        const double norm = grad.norm();
        if (norm > cfg.grad_clip_norm) grad *= cfg.grad_clip_norm / norm;
        adam.update(model.net.params(), grad);
      }
    }
    rep.epoch_loss.push_back(loss_sum / static_cast<double>(std::max<std::size_t>(loss_steps, 1)));
  }
  if (report) *report = rep;
  return model;
}

TrainingResult train_predictor(const std::vector<PacketLogRow>& rows, const TrainingConfig& cfg) {
  cfg.validate();
  TrainingResult res;
  res.weights.seed = cfg.seed;
  const std::pair<PacketType, FeatureSet> plan[] = {
      {PacketType::Cam, FeatureSet::Dynamics},
      {PacketType::Cam, FeatureSet::Interval},
      {PacketType::Cpm, FeatureSet::Interval},
      {PacketType::Ldm, FeatureSet::Interval},
  };
  for (const auto& [type, fs] : plan) {
    const auto seqs = build_sequences(rows, type, fs, cfg.max_interval_s);
    ModelTrainingReport rep;
    res.weights.models.push_back(train_model(seqs, type, fs, cfg, &rep));
    res.reports.push_back(std::move(rep));
  }
  return res;
}

}  // namespace v2x
