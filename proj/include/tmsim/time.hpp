#ifndef TMSIM_TIME_HPP
#define TMSIM_TIME_HPP

#include <cmath>
#include <compare>
#include <cstdint>

#include "tmsim/errors.hpp"

namespace tmsim {

// Simulation time as a signed 64-bit count of nanoseconds. Integer time
// keeps t + size/rate arithmetic reproducible across runs; all rate math
// rounds half-up to the nanosecond.
class SimTime {
 public:
  constexpr SimTime() = default;

  static constexpr SimTime from_ns(int64_t ns) { return SimTime(ns); }
  static constexpr SimTime from_us(int64_t us) { return SimTime(us * 1000); }
  static constexpr SimTime from_ms(int64_t ms) { return SimTime(ms * 1000000); }

  static SimTime from_sec(double sec) {
    return SimTime(static_cast<int64_t>(std::llround(sec * 1e9)));
  }

  constexpr int64_t ns() const { return ns_; }
  constexpr double sec() const { return static_cast<double>(ns_) * 1e-9; }

  constexpr auto operator<=>(const SimTime&) const = default;

  constexpr SimTime operator+(SimTime other) const { return SimTime(ns_ + other.ns_); }
  constexpr SimTime operator-(SimTime other) const { return SimTime(ns_ - other.ns_); }
  SimTime& operator+=(SimTime other) { ns_ += other.ns_; return *this; }
  SimTime& operator-=(SimTime other) { ns_ -= other.ns_; return *this; }

  constexpr SimTime operator*(int64_t k) const { return SimTime(ns_ * k); }

 private:
  constexpr explicit SimTime(int64_t ns) : ns_(ns) {}
  int64_t ns_ = 0;
};

// Time to push size_bytes through a link or shaper at rate bytes/sec.
inline SimTime transmission_time(int64_t size_bytes, double rate_bytes_per_sec) {
  if (rate_bytes_per_sec <= 0.0)
    throw ConfigError("transmission_time: rate must be positive");
  if (size_bytes <= 0)
    throw ConfigError("transmission_time: size must be positive");
  return SimTime::from_ns(
      std::llround(static_cast<double>(size_bytes) * 1e9 / rate_bytes_per_sec));
}

// Packet spacing of a pps-mode rate limiter; independent of packet size.
inline SimTime pps_interval(double rate_pkts_per_sec) {
  if (rate_pkts_per_sec <= 0.0)
    throw ConfigError("pps_interval: rate must be positive");
  return SimTime::from_ns(std::llround(1e9 / rate_pkts_per_sec));
}

}  // namespace tmsim

#endif
