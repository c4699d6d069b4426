#include "v2x/weight_file.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace v2x {

namespace {

constexpr std::array<char, 4> kMagic{'V', '2', 'X', 'W'};
constexpr std::uint32_t kMaxDim = 1u << 16;

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  void u8(std::uint8_t v) { os_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

 private:
  void put_le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) os_.put(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::ostream& os_;
};

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::uint64_t u64() { return get_le(8); }
  double f64() { return std::bit_cast<double>(u64()); }

 private:
  std::uint64_t get_le(int n) {
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      const int c = is_.get();
      if (c == std::char_traits<char>::eof()) throw WeightFileError("weight file truncated");
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return v;
  }
  std::istream& is_;
};

std::uint32_t checked_dim(std::uint32_t v, const char* what) {
  if (v == 0 || v > kMaxDim) throw WeightFileError(std::string("weight file: implausible ") + what);
  return v;
}

}  // namespace

const TypeModel* WeightFile::find(PacketType t, FeatureSet fs) const {
  for (const auto& m : models)
    if (m.ptype == t && m.features == fs) return &m;
  return nullptr;
}

void write_weights(std::ostream& os, const WeightFile& wf) {
  Writer w(os);
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(WeightFile::kVersion);
  w.u64(wf.seed);
  w.u32(static_cast<std::uint32_t>(wf.models.size()));
  for (const auto& m : wf.models) {
    const NetShape& s = m.net.shape();
    w.u8(static_cast<std::uint8_t>(m.ptype));
    w.u8(static_cast<std::uint8_t>(m.features));
    w.u8(m.fallback ? 1 : 0);
    w.u8(0);
    w.u32(static_cast<std::uint32_t>(s.inputs));
    w.u32(static_cast<std::uint32_t>(s.dense.size()));
    for (int d : s.dense) w.u32(static_cast<std::uint32_t>(d));
    w.u32(static_cast<std::uint32_t>(s.lstm));
    w.u32(static_cast<std::uint32_t>(m.scaler.lo.size()));
    for (std::size_t k = 0; k < m.scaler.lo.size(); ++k) {
      w.f64(m.scaler.lo[k]);
      w.f64(m.scaler.hi[k]);
    }
    w.f64(m.scaler.target_lo);
    w.f64(m.scaler.target_hi);
    const std::uint64_t n = m.fallback ? 0 : static_cast<std::uint64_t>(m.net.params().size());
    w.u64(n);
    for (std::uint64_t i = 0; i < n; ++i) w.f64(m.net.params()[static_cast<Eigen::Index>(i)]);
  }
  if (!os) throw WeightFileError("weight file: write failed");
}

WeightFile read_weights(std::istream& is) {
  Reader r(is);
  for (char c : kMagic)
    if (r.u8() != static_cast<std::uint8_t>(c)) throw WeightFileError("weight file: bad magic");
  const std::uint32_t version = r.u32();
  if (version != WeightFile::kVersion)
    throw WeightFileError("weight file: unsupported version " + std::to_string(version));
  WeightFile wf;
  wf.seed = r.u64();
  const std::uint32_t count = r.u32();
  if (count > 64) throw WeightFileError("weight file: implausible model count");
  for (std::uint32_t i = 0; i < count; ++i) {
    TypeModel m;
    const std::uint8_t pt = r.u8();
    const std::uint8_t fs = r.u8();
    if (pt >= kPacketTypeCount || fs > 1) throw WeightFileError("weight file: bad model tag");
    m.ptype = static_cast<PacketType>(pt);
    m.features = static_cast<FeatureSet>(fs);
    m.fallback = r.u8() != 0;
    r.u8();
    NetShape shape;
    shape.inputs = static_cast<int>(checked_dim(r.u32(), "input width"));
    const std::uint32_t nd = r.u32();
    if (nd > 16) throw WeightFileError("weight file: implausible layer count");
    shape.dense.clear();
    for (std::uint32_t k = 0; k < nd; ++k) shape.dense.push_back(static_cast<int>(checked_dim(r.u32(), "layer width")));
    shape.lstm = static_cast<int>(checked_dim(r.u32(), "lstm width"));
    const std::uint32_t nf = r.u32();
    if (nf != static_cast<std::uint32_t>(shape.inputs)) throw WeightFileError("weight file: scaler/input mismatch");
    for (std::uint32_t k = 0; k < nf; ++k) {
      m.scaler.lo.push_back(r.f64());
      m.scaler.hi.push_back(r.f64());
    }
    m.scaler.target_lo = r.f64();
    m.scaler.target_hi = r.f64();
    m.net = RecurrentNet(shape);
    const std::uint64_t n = r.u64();
    if (m.fallback) {
      if (n != 0) throw WeightFileError("weight file: fallback model carries weights");
    } else {
      if (n != m.net.parameter_count()) throw WeightFileError("weight file: parameter count mismatch");
      for (std::uint64_t k = 0; k < n; ++k) m.net.params()[static_cast<Eigen::Index>(k)] = r.f64();
    }
    wf.models.push_back(std::move(m));
  }
  return wf;
}

void save_weights(const std::filesystem::path& path, const WeightFile& wf) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw WeightFileError("cannot open for writing: " + path.string());
  write_weights(os, wf);
}

WeightFile load_weights(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw WeightFileError("cannot open weight file: " + path.string());
  return read_weights(is);
}

}  // namespace v2x
