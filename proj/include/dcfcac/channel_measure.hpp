#ifndef DCFCAC_CHANNEL_MEASURE_HPP
#define DCFCAC_CHANNEL_MEASURE_HPP

#include "dcfcac/units.hpp"

#include <limits>
#include <optional>
#include <unordered_map>
#include <unordered_set>

namespace dcfcac {

enum class TxOutcome
{
  success,
  collision,
};

/// One busy period as heard by a listener. Overlapping frames form a single
/// collision observation whose source cannot be decoded.
struct ChannelObservation
{
  SimTime timestamp{0};
  std::optional<StationId> source;
  SimTime duration{0};
  TxOutcome outcome = TxOutcome::success;

  bool operator== (const ChannelObservation &) const = default;
};

struct Measurements
{
  double r_tx_bar = 0.0; ///< transmissions per second
  double t_tx_bar = 0.0; ///< us
  int n_active = 0;
  double p_bar = 0.0;    ///< collision fraction of busy periods
  double alpha = 0.8;
  double t_update = 1.0; ///< s
  bool has_history = false;

  bool operator== (const Measurements &) const = default;
};

struct MonitorConfig
{
  double alpha = 0.8;
  SimTime t_update = std::chrono::seconds (1);
  SimTime activity_window{0}; ///< 0 selects 4 * t_update

  void validate () const;
};

/**
 * Passive channel observer. Keeps per-window counters and EWMA-smoothed
 * transmission rate, duration and collision fraction, plus the set of
 * recently heard transmitters.
 */
class ChannelMonitor
{
public:
  explicit ChannelMonitor (MonitorConfig config = {});

  /// Throws OrderingError on a timestamp earlier than the previous one.
  void record (const ChannelObservation &obs);

  /// Closes the current window and folds it into the averages. Returns
  /// nullopt (and changes nothing) if called less than t_update after the
  /// previous sample.
  std::optional<Measurements> sample_and_smooth (SimTime now);

  int active_station_count (SimTime now) const;
  double collision_probability () const { return m_p_bar; }

  /// Current smoothed values with n_active evaluated at now.
  Measurements measurements (SimTime now) const;

  std::size_t window_transmissions () const { return m_window_tx; }
  std::size_t window_collisions () const { return m_window_collisions; }
  std::size_t window_distinct_sources () const;
  std::size_t stations_ever_heard () const { return m_last_heard.size (); }

private:
  MonitorConfig m_config;
  SimTime m_last_record{std::numeric_limits<SimTime::rep>::min ()};
  SimTime m_last_sample{0};

  std::size_t m_window_tx = 0;
  std::size_t m_window_collisions = 0;
  double m_window_duration_us = 0.0;
  std::unordered_set<StationId> m_window_sources;
  std::unordered_map<StationId, SimTime> m_last_heard;

  bool m_rate_init = false;
  bool m_duration_init = false;
  bool m_p_init = false;
  double m_r_bar = 0.0;
  double m_t_bar = 0.0;
  double m_p_bar = 0.0;
};

} // namespace dcfcac

#endif
