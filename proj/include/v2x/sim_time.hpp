#pragma once

#include <compare>
#include <cstdint>
#include <cmath>

namespace v2x {

/// Simulation time in integer microseconds. Used both for instants and for
/// durations; the kernel never lets an instant go negative.
struct SimTime {
  std::int64_t us{0};

  constexpr SimTime() = default;
  constexpr explicit SimTime(std::int64_t micros) : us(micros) {}

  static constexpr SimTime micros(std::int64_t v) { return SimTime{v}; }
  static constexpr SimTime millis(std::int64_t v) { return SimTime{v * 1000}; }
  static constexpr SimTime seconds(std::int64_t v) { return SimTime{v * 1'000'000}; }
  static SimTime from_seconds(double s) { return SimTime{static_cast<std::int64_t>(std::llround(s * 1e6))}; }

  constexpr double to_seconds() const { return static_cast<double>(us) * 1e-6; }
  constexpr double to_millis() const { return static_cast<double>(us) * 1e-3; }

  constexpr auto operator<=>(const SimTime&) const = default;

  constexpr SimTime& operator+=(SimTime o) { us += o.us; return *this; }
  constexpr SimTime& operator-=(SimTime o) { us -= o.us; return *this; }
  friend constexpr SimTime operator+(SimTime a, SimTime b) { return SimTime{a.us + b.us}; }
  friend constexpr SimTime operator-(SimTime a, SimTime b) { return SimTime{a.us - b.us}; }
  friend constexpr SimTime operator*(SimTime a, std::int64_t k) { return SimTime{a.us * k}; }
  friend constexpr SimTime operator*(std::int64_t k, SimTime a) { return SimTime{a.us * k}; }
};

inline constexpr SimTime kZeroTime{};

constexpr SimTime max(SimTime a, SimTime b) { return a < b ? b : a; }
constexpr SimTime min(SimTime a, SimTime b) { return a < b ? a : b; }

}  // namespace v2x
