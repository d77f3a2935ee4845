#include "dcfcac/channel_measure.hpp"

#include "dcfcac/error.hpp"

#include <string>

namespace dcfcac {

void
MonitorConfig::validate () const
{
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw InvalidParameters ("alpha must be in [0, 1]");
  if (t_update <= SimTime::zero ())
    throw InvalidParameters ("t_update must be positive");
  if (activity_window < SimTime::zero ())
    throw InvalidParameters ("activity window must be >= 0");
}

ChannelMonitor::ChannelMonitor (MonitorConfig config)
  : m_config (config)
{
  m_config.validate ();
  if (m_config.activity_window == SimTime::zero ())
    m_config.activity_window = 4 * m_config.t_update;
}

void
ChannelMonitor::record (const ChannelObservation &obs)
{
  if (obs.timestamp < m_last_record)
    throw OrderingError ("observation at " + std::to_string (obs.timestamp.count ())
                         + " ns precedes " + std::to_string (m_last_record.count ())
                         + " ns");
  if (obs.duration <= SimTime::zero ())
    throw InvalidParameters ("observation duration must be positive");
  m_last_record = obs.timestamp;
  ++m_window_tx;
  m_window_duration_us += to_us (obs.duration);
  if (obs.outcome == TxOutcome::collision)
    ++m_window_collisions;
  if (obs.source)
    {
      m_window_sources.insert (*obs.source);
      m_last_heard[*obs.source] = obs.timestamp;
    }
}

std::size_t
ChannelMonitor::window_distinct_sources () const
{
  return m_window_sources.size ();
}

std::optional<Measurements>
ChannelMonitor::sample_and_smooth (SimTime now)
{
  if (now - m_last_sample < m_config.t_update)
    return std::nullopt;

  const double a = m_config.alpha;
  const double r_hat = static_cast<double> (m_window_tx) / to_seconds (m_config.t_update);
  const double p_hat = m_window_tx > 0 ? static_cast<double> (m_window_collisions)
                                             / static_cast<double> (m_window_tx)
                                       : 0.0;

  m_r_bar = m_rate_init ? a * m_r_bar + (1.0 - a) * r_hat : r_hat;
  m_rate_init = true;
  m_p_bar = m_p_init ? a * m_p_bar + (1.0 - a) * p_hat : p_hat;
  m_p_init = true;
  if (m_window_tx > 0)
    {
      const double t_hat = m_window_duration_us / static_cast<double> (m_window_tx);
      m_t_bar = m_duration_init ? a * m_t_bar + (1.0 - a) * t_hat : t_hat;
      m_duration_init = true;
    }
  // An empty window holds T_bar: the sample equals the running average.

  m_window_tx = 0;
  m_window_collisions = 0;
  m_window_duration_us = 0.0;
  m_window_sources.clear ();
  m_last_sample = now;
  return measurements (now);
}

int
ChannelMonitor::active_station_count (SimTime now) const
{
  int n = 0;
  for (const auto &[id, last] : m_last_heard)
    if (now - last <= m_config.activity_window)
      ++n;
  return n;
}

Measurements
ChannelMonitor::measurements (SimTime now) const
{
  Measurements m;
  m.r_tx_bar = m_r_bar;
  m.t_tx_bar = m_t_bar;
  m.n_active = active_station_count (now);
  m.p_bar = m_p_bar;
  m.alpha = m_config.alpha;
  m.t_update = to_seconds (m_config.t_update);
  m.has_history = m_rate_init;
  return m;
}

} // namespace dcfcac
