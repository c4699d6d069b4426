#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "v2x/features.hpp"
#include "v2x/weight_file.hpp"

namespace v2x {

/// One row of the packet generation log (`t_us,sender,ptype,payload,speed,heading,x`).
struct PacketLogRow {
  SimTime t{};
  NodeId sender = 0;
  PacketType ptype = PacketType::Cam;
  int payload = 0;
  SenderDynamics dynamics{};

  bool operator==(const PacketLogRow&) const = default;
};

class PacketLogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<PacketLogRow> read_packet_log(std::istream& is);
std::vector<PacketLogRow> read_packet_log_file(const std::string& path);
void write_packet_log_row(std::ostream& os, const PacketLogRow& row);

struct TrainingConfig {
  NetShape shape{};            // inputs are overridden per feature set
  int epochs = 8;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  int bptt_chunk = 32;
  double max_interval_s = 2.0;  // intervals are clipped here before scaling
  std::size_t max_sequences = 48;
  std::size_t max_steps_per_sequence = 600;
  double grad_clip_norm = 1.0;

  void validate() const;
};

/// One (sender, type) stream turned into aligned inputs and next-interval targets.
struct TrainingSequence {
  NodeId sender = 0;
  PacketType ptype = PacketType::Cam;
  std::vector<std::vector<double>> raw;  // unscaled features per step
  std::vector<double> targets;           // seconds to the next packet
};

/// Groups the log by (sender, type), sorts each stream by time and emits one
/// step per packet that has both a predecessor and a successor.
std::vector<TrainingSequence> build_sequences(const std::vector<PacketLogRow>& rows, PacketType type, FeatureSet fs,
                                              double max_interval_s);

struct ModelTrainingReport {
  PacketType ptype = PacketType::Cam;
  FeatureSet features = FeatureSet::Interval;
  bool fallback = false;
  std::size_t sequences = 0;
  std::size_t steps = 0;
  std::vector<double> epoch_loss;
};

struct TrainingResult {
  WeightFile weights;
  std::vector<ModelTrainingReport> reports;
};

/// Trains the four networks (CAM with dynamics, CAM interval-only for hidden
/// senders, CPM, LDM). Types absent from the corpus become fallback entries.
TrainingResult train_predictor(const std::vector<PacketLogRow>& rows, const TrainingConfig& cfg);

/// Trains a single model over pre-built sequences.
TypeModel train_model(const std::vector<TrainingSequence>& seqs, PacketType type, FeatureSet fs,
                      const TrainingConfig& cfg, ModelTrainingReport* report);

}  // namespace v2x
