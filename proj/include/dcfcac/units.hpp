#ifndef DCFCAC_UNITS_HPP
#define DCFCAC_UNITS_HPP

#include <chrono>
#include <cmath>
#include <cstdint>

namespace dcfcac {

/// Simulation clock. Integer nanoseconds keep event ordering exact.
using SimTime = std::chrono::nanoseconds;

using StationId = std::uint32_t;
using FlowId = std::uint32_t;

inline SimTime
from_us (double us)
{
  return SimTime (std::llround (us * 1e3));
}

inline SimTime
from_seconds (double s)
{
  return SimTime (std::llround (s * 1e9));
}

inline double
to_us (SimTime t)
{
  return static_cast<double> (t.count ()) * 1e-3;
}

inline double
to_ms (SimTime t)
{
  return static_cast<double> (t.count ()) * 1e-6;
}

inline double
to_seconds (SimTime t)
{
  return static_cast<double> (t.count ()) * 1e-9;
}

} // namespace dcfcac

#endif
