#include "dcfcac/dcf_sim.hpp"

#include "dcfcac/error.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <queue>
#include <string>

namespace dcfcac {

SimTime
traffic_next (ArrivalProcess process, double lambda, std::mt19937_64 &rng,
              SimTime now)
{
  if (!(lambda > 0.0))
    throw InvalidParameters ("arrival rate must be > 0");
  if (process == ArrivalProcess::cbr)
    return now + from_seconds (1.0 / lambda);
  std::exponential_distribution<double> gap (lambda);
  // A zero gap would put two packets at one instant; one nanosecond keeps
  // arrivals strictly ordered without visibly biasing the mean.
  return now + std::max (SimTime (1), from_seconds (gap (rng)));
}

SlotOutcome
channel_resolve (const std::vector<Contender> &contenders, SimTime slot)
{
  SlotOutcome out;
  if (contenders.empty ())
    {
      out.kind = SlotKind::idle;
      out.duration = slot;
      return out;
    }
  for (const auto &c : contenders)
    out.stations.push_back (c.station);
  if (contenders.size () == 1)
    {
      out.kind = SlotKind::success;
      out.duration = contenders.front ().t_s;
      return out;
    }
  out.kind = SlotKind::collision;
  for (const auto &c : contenders)
    out.duration = std::max (out.duration, c.t_c);
  return out;
}

IdleArrival
idle_arrival_rule (bool slot_busy, SimTime since_slot_start, SimTime cca)
{
  if (slot_busy && since_slot_start < cca)
    return IdleArrival::backoff;
  return IdleArrival::next_slot;
}

void
SimSetup::validate () const
{
  params.validate ();
  monitor.validate ();
  if (end <= SimTime::zero ())
    throw InvalidParameters ("simulation end must be positive");
  if (queue_capacity == 0)
    throw InvalidParameters ("queue capacity must be positive");
  std::vector<StationId> ids;
  for (const auto &r : requests)
    {
      r.flow.validate ();
      if (r.time < SimTime::zero ())
        throw InvalidParameters ("flow request before time zero");
      ids.push_back (r.flow.station);
    }
  std::sort (ids.begin (), ids.end ());
  if (std::adjacent_find (ids.begin (), ids.end ()) != ids.end ())
    throw InvalidParameters ("two flow requests share a station id");
}

double
SimTrace::gamma () const
{
  if (counters.post_backoffs == 0)
    return 1.0;
  return static_cast<double> (counters.post_backoffs_empty)
         / static_cast<double> (counters.post_backoffs);
}

namespace {

enum class EventKind
{
  stats_tick,
  measurement_tick,
  packet_arrival,
  flow_request,
};

struct Event
{
  SimTime time{0};
  EventKind kind = EventKind::packet_arrival;
  std::uint64_t seq = 0;
  std::size_t index = 0; // station slot or request index

  bool
  operator> (const Event &o) const
  {
    if (time != o.time)
      return time > o.time;
    if (kind != o.kind)
      return kind > o.kind;
    return seq > o.seq;
  }
};

struct Station
{
  FlowSpec flow;
  ArrivalProcess arrival = ArrivalProcess::poisson;
  std::uint64_t max_packets = 0;
  std::uint64_t generated = 0;
  SimTime t_s{0};
  SimTime t_c{0};
  std::deque<SimTime> queue;
  int stage = 0;
  std::uint32_t retries = 0;
  bool idle = true;
  bool post_backoff = false;
  std::uint64_t fire = 0;
  std::mt19937_64 traffic_rng;
  std::mt19937_64 backoff_rng;
};

// Where an event falls relative to the slot grid.
struct SlotContext
{
  std::uint64_t slot = 0;
  SimTime start{0};
  bool busy = false;
};

std::mt19937_64
make_stream (std::uint64_t seed, StationId id, std::uint32_t purpose)
{
  std::seed_seq seq{static_cast<std::uint32_t> (seed),
                    static_cast<std::uint32_t> (seed >> 32),
                    static_cast<std::uint32_t> (id), purpose};
  return std::mt19937_64 (seq);
}

class Engine
{
public:
  explicit Engine (const SimSetup &setup)
    : m_setup (setup), m_monitor (setup.monitor),
      m_slot (from_us (setup.params.slot_us)),
      m_cca (from_us (setup.params.cca_us))
  {
    if (setup.admission)
      m_controller.emplace (*setup.admission, setup.params);
    m_seconds.resize (static_cast<std::size_t> (
        (setup.end.count () + 999'999'999) / 1'000'000'000));
  }

  SimTrace
  run ()
  {
    for (std::size_t i = 0; i < m_setup.requests.size (); ++i)
      push_event (m_setup.requests[i].time, EventKind::flow_request, i);
    push_event (m_setup.monitor.t_update, EventKind::measurement_tick, 0);
    push_event (std::chrono::seconds (1), EventKind::stats_tick, 0);

    std::uint64_t cursor_slot = 0;
    SimTime cursor_time{0};
    while (true)
      {
        const bool have_fire = !m_fire.empty ();
        SimTime fire_time = SimTime::max ();
        std::uint64_t fire_slot = 0;
        if (have_fire)
          {
            fire_slot = m_fire.top ().first;
            fire_time = cursor_time
                        + m_slot * static_cast<SimTime::rep> (fire_slot - cursor_slot);
          }
        const SimTime limit = std::min (fire_time, m_setup.end);
        if (!m_events.empty () && m_events.top ().time < limit)
          {
            const Event ev = m_events.top ();
            m_events.pop ();
            SlotContext ctx;
            ctx.slot = cursor_slot
                       + static_cast<std::uint64_t> ((ev.time - cursor_time) / m_slot);
            ctx.start = cursor_time
                        + m_slot * static_cast<SimTime::rep> (ctx.slot - cursor_slot);
            handle (ev, ctx);
            continue;
          }
        if (!have_fire || fire_time >= m_setup.end)
          break;

        cursor_slot = fire_slot;
        cursor_time = fire_time;
        std::vector<std::size_t> tx;
        while (!m_fire.empty () && m_fire.top ().first == fire_slot)
          {
            const std::size_t s = m_fire.top ().second;
            m_fire.pop ();
            if (end_of_countdown (s, fire_time))
              tx.push_back (s);
          }
        if (tx.empty ())
          continue;

        std::vector<Contender> contenders;
        for (std::size_t s : tx)
          contenders.push_back ({m_stations[s].flow.station, m_stations[s].t_s,
                                 m_stations[s].t_c});
        const SlotOutcome outcome = channel_resolve (contenders, m_slot);
        const SimTime busy_end = fire_time + outcome.duration;

        SlotContext ctx;
        ctx.slot = fire_slot;
        ctx.start = fire_time;
        ctx.busy = true;
        while (!m_events.empty () && m_events.top ().time < busy_end
               && m_events.top ().time < m_setup.end)
          {
            const Event ev = m_events.top ();
            m_events.pop ();
            handle (ev, ctx);
          }

        apply_outcome (outcome, tx, fire_slot, fire_time, busy_end);
        cursor_slot = fire_slot + 1;
        cursor_time = busy_end;
        if (m_setup.check_invariants)
          check_conservation ();
      }

    // Idle slots are never visited one by one; count them from the busy
    // ones and the elapsed time.
    return finish (cursor_slot);
  }

private:
  void
  push_event (SimTime t, EventKind kind, std::size_t index)
  {
    if (t < m_last_event)
      throw InternalError ("event scheduled in the past");
    m_events.push (Event{t, kind, m_seq++, index});
  }

  int
  draw_backoff (std::size_t s)
  {
    Station &st = m_stations[s];
    const int w = m_setup.params.cw (st.stage);
    std::uniform_int_distribution<int> dist (0, w - 1);
    const int k = dist (st.backoff_rng);
    if (k < 0 || k >= w || st.stage < 0 || st.stage > m_setup.params.max_stage)
      {
        ++m_counters.backoff_violations;
        if (m_setup.check_invariants)
          throw InternalError ("illegal backoff draw");
      }
    if (m_setup.record_backoffs)
      m_trace.backoffs.push_back ({st.flow.station, st.stage, k, w});
    return k;
  }

  void
  schedule (std::size_t s, std::uint64_t slot)
  {
    m_stations[s].fire = slot;
    m_fire.push ({slot, s});
  }

  void
  handle (const Event &ev, const SlotContext &ctx)
  {
    if (ev.time < m_last_event)
      throw InternalError ("event time regression");
    m_last_event = ev.time;
    switch (ev.kind)
      {
      case EventKind::packet_arrival:
        on_arrival (ev.index, ev.time, ctx);
        break;
      case EventKind::flow_request:
        on_request (ev.index, ev.time, ctx);
        break;
      case EventKind::measurement_tick:
        if (auto m = m_monitor.sample_and_smooth (ev.time))
          m_trace.measurements.push_back ({ev.time, *m});
        push_event (ev.time + m_setup.monitor.t_update,
                    EventKind::measurement_tick, 0);
        break;
      case EventKind::stats_tick:
        {
          const auto sec = static_cast<std::size_t> (
              ev.time / std::chrono::seconds (1));
          if (sec >= 1 && sec <= m_seconds.size ())
            m_seconds[sec - 1].queued = m_in_queue;
          push_event (ev.time + std::chrono::seconds (1), EventKind::stats_tick, 0);
          break;
        }
      }
  }

  void
  on_request (std::size_t index, SimTime now, const SlotContext &ctx)
  {
    const FlowRequest &req = m_setup.requests[index];
    bool admitted = true;
    if (m_controller)
      {
        DecisionRecord rec;
        rec.time = now;
        rec.flow = req.flow;
        rec.measurements = m_monitor.measurements (now);
        rec.decision = m_controller->decide (rec.measurements, req.flow);
        admitted = rec.decision.admitted;
        m_trace.decisions.push_back (std::move (rec));
      }
    if (!admitted)
      return;

    const std::size_t s = m_stations.size ();
    Station st;
    st.flow = req.flow;
    st.arrival = req.arrival;
    st.max_packets = req.max_packets;
    const auto fd = FrameDurations::for_frame (req.flow.payload_bits,
                                               req.flow.data_rate_bps,
                                               m_setup.params);
    st.t_s = from_us (fd.t_s);
    st.t_c = from_us (fd.t_c);
    st.traffic_rng = make_stream (m_setup.seed, req.flow.station, 1);
    st.backoff_rng = make_stream (m_setup.seed, req.flow.station, 2);
    m_stations.push_back (std::move (st));
    if (req.flow.station >= m_trace.station_delivered.size ())
      m_trace.station_delivered.resize (req.flow.station + 1, 0);

    if (m_setup.saturated)
      {
        // Backlogged from the start: contend straight away.
        m_stations[s].idle = false;
        schedule (s, ctx.slot + 1 + static_cast<std::uint64_t> (draw_backoff (s)));
        return;
      }

    Station &added = m_stations[s];
    SimTime first;
    if (added.arrival == ArrivalProcess::cbr)
      {
        std::uniform_real_distribution<double> phase (0.0, 1.0 / added.flow.lambda_flow);
        first = now + from_seconds (phase (added.traffic_rng));
      }
    else
      {
        first = traffic_next (added.arrival, added.flow.lambda_flow,
                              added.traffic_rng, now);
      }
    push_event (first, EventKind::packet_arrival, s);
  }

  void
  on_arrival (std::size_t s, SimTime now, const SlotContext &ctx)
  {
    Station &st = m_stations[s];
    ++m_counters.generated;
    const bool was_idle = st.idle;
    if (st.queue.size () >= m_setup.queue_capacity)
      {
        ++m_counters.dropped;
      }
    else
      {
        st.queue.push_back (now);
        ++m_in_queue;
      }
    ++st.generated;
    if (st.max_packets == 0 || st.generated < st.max_packets)
      push_event (traffic_next (st.arrival, st.flow.lambda_flow, st.traffic_rng, now),
                  EventKind::packet_arrival, s);

    if (!was_idle)
      return;
    st.idle = false;
    st.post_backoff = false;
    st.stage = 0;
    if (idle_arrival_rule (ctx.busy, now - ctx.start, m_cca) == IdleArrival::backoff)
      {
        schedule (s, ctx.slot + 1 + static_cast<std::uint64_t> (draw_backoff (s)));
      }
    else
      {
        schedule (s, ctx.slot + 1);
      }
  }

  // Returns true when the station transmits in the slot starting at t.
  bool
  end_of_countdown (std::size_t s, SimTime t)
  {
    Station &st = m_stations[s];
    if (!st.post_backoff)
      return true;
    st.post_backoff = false;
    const bool counting = t >= m_setup.stats_start;
    if (counting)
      ++m_counters.post_backoffs;
    if (!m_setup.saturated && st.queue.empty ())
      {
        if (counting)
          ++m_counters.post_backoffs_empty;
        st.idle = true;
        return false;
      }
    return true;
  }

  void
  apply_outcome (const SlotOutcome &outcome, const std::vector<std::size_t> &tx,
                 std::uint64_t slot, SimTime start, SimTime busy_end)
  {
    ChannelObservation obs;
    obs.timestamp = start;
    obs.duration = outcome.duration;
    if (outcome.kind == SlotKind::success)
      {
        const std::size_t s = tx.front ();
        Station &st = m_stations[s];
        obs.outcome = TxOutcome::success;
        obs.source = st.flow.station;
        ++m_counters.successes;
        ++m_counters.delivered;
        ++m_trace.station_delivered[st.flow.station];
        if (!m_setup.saturated)
          {
            const SimTime arrival = st.queue.front ();
            st.queue.pop_front ();
            --m_in_queue;
            const SimTime delay = busy_end - arrival;
            if (m_setup.record_packets)
              m_trace.packets.push_back ({st.flow.station, arrival, delay, st.retries});
            account_second (busy_end, st.flow.payload_bits, delay);
          }
        else
          {
            account_second (busy_end, st.flow.payload_bits, SimTime::zero ());
          }
        st.retries = 0;
        st.stage = 0;
        st.post_backoff = true;
        schedule (s, slot + 1 + static_cast<std::uint64_t> (draw_backoff (s)));
      }
    else
      {
        obs.outcome = TxOutcome::collision;
        ++m_counters.collisions;
        for (std::size_t s : tx)
          {
            Station &st = m_stations[s];
            ++st.retries;
            st.stage = std::min (st.stage + 1, m_setup.params.max_stage);
            schedule (s, slot + 1 + static_cast<std::uint64_t> (draw_backoff (s)));
          }
      }
    m_monitor.record (obs);
    if (m_setup.record_observations)
      m_trace.observations.push_back (obs);
  }

  void
  account_second (SimTime t, double payload_bits, SimTime delay)
  {
    const auto sec = static_cast<std::size_t> (t / std::chrono::seconds (1));
    if (sec >= m_seconds.size ())
      return;
    SecondStats &b = m_seconds[sec];
    ++b.delivered;
    b.throughput_bps += payload_bits;
    b.mean_delay_ms += to_ms (delay);
  }

  void
  check_conservation () const
  {
    if (m_setup.saturated)
      return;
    if (m_counters.generated
        != m_counters.delivered + m_in_queue + m_counters.dropped)
      throw InternalError ("packet conservation violated");
  }

  SimTrace
  finish (std::uint64_t cursor_slot)
  {
    m_counters.in_queue = m_in_queue;
    // Every logical slot up to the cursor was either busy or idle.
    const std::uint64_t busy = m_counters.successes + m_counters.collisions;
    m_counters.idle_slots = cursor_slot > busy ? cursor_slot - busy : 0;
    for (std::size_t i = 0; i < m_seconds.size (); ++i)
      {
        SecondStats &b = m_seconds[i];
        b.second = static_cast<std::int64_t> (i);
        if (b.delivered > 0)
          b.mean_delay_ms /= static_cast<double> (b.delivered);
      }
    m_trace.seconds = std::move (m_seconds);
    m_trace.counters = m_counters;
    m_trace.end = m_setup.end;
    return std::move (m_trace);
  }

  const SimSetup &m_setup;
  ChannelMonitor m_monitor;
  std::optional<AdmissionController> m_controller;
  SimTime m_slot;
  SimTime m_cca;

  std::vector<Station> m_stations;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> m_events;
  using FireEntry = std::pair<std::uint64_t, std::size_t>;
  std::priority_queue<FireEntry, std::vector<FireEntry>, std::greater<FireEntry>> m_fire;
  std::uint64_t m_seq = 0;
  SimTime m_last_event{0};
  std::uint64_t m_in_queue = 0;

  SimCounters m_counters;
  std::vector<SecondStats> m_seconds;
  SimTrace m_trace;
};

} // namespace

SimTrace
simulate (const SimSetup &setup)
{
  setup.validate ();
  Engine engine (setup);
  return engine.run ();
}

} // namespace dcfcac
