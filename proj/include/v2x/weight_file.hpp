#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "v2x/features.hpp"
#include "v2x/lstm.hpp"
#include "v2x/phy.hpp"

namespace v2x {

/// One trained network for a (packet type, feature set) pair. A fallback
/// model carries no weights; the runtime uses last-interval persistence.
struct TypeModel {
  PacketType ptype = PacketType::Cam;
  FeatureSet features = FeatureSet::Interval;
  bool fallback = false;
  RecurrentNet net;
  FeatureScaler scaler;
};

struct WeightFile {
  static constexpr std::uint32_t kVersion = 1;

  std::uint64_t seed = 0;
  std::vector<TypeModel> models;

  const TypeModel* find(PacketType t, FeatureSet fs) const;
};

class WeightFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Little-endian binary container; see docs/weight_file.md for the layout.
void write_weights(std::ostream& os, const WeightFile& wf);
WeightFile read_weights(std::istream& is);
void save_weights(const std::filesystem::path& path, const WeightFile& wf);
WeightFile load_weights(const std::filesystem::path& path);

}  // namespace v2x
