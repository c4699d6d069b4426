#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace v2x {

/// splitmix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed of the named substream `name` (optionally per index, e.g. node id).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view name,
                                    std::uint64_t index = 0) {
  return mix64(mix64(base ^ fnv1a(name)) + index);
}

using Engine = std::mt19937_64;

enum class Stream { Mobility, Mac, Traffic, Training };

constexpr std::string_view stream_name(Stream s) {
  switch (s) {
    case Stream::Mobility: return "mobility";
    case Stream::Mac: return "mac";
    case Stream::Traffic: return "traffic";
    case Stream::Training: return "training";
  }
  return "?";
}

inline Engine make_engine(std::uint64_t base, Stream s, std::uint64_t index = 0) {
  return Engine{derive_seed(base, stream_name(s), index)};
}

/// Uniform integer in [lo, hi].
template <class Eng>
std::int64_t uniform_int(Eng& eng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(eng);
}

template <class Eng>
double uniform_real(Eng& eng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(eng);
}

template <class Eng>
double standard_normal(Eng& eng) {
  return std::normal_distribution<double>(0.0, 1.0)(eng);
}

}  // namespace v2x
