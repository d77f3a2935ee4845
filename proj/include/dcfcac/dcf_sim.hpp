#ifndef DCFCAC_DCF_SIM_HPP
#define DCFCAC_DCF_SIM_HPP

#include "dcfcac/admission.hpp"
#include "dcfcac/channel_measure.hpp"
#include "dcfcac/phy_timing.hpp"
#include "dcfcac/units.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace dcfcac {

/**
 * Slotted discrete-event model of n DCF stations on one collision domain.
 *
 * Every station hears every other one. Time advances in logical slots: an
 * empty slot lasts one slot time, a slot holding one transmission lasts that
 * frame's success duration and a slot holding several lasts the longest
 * collision duration among them. Backoff counters move down by one per
 * logical slot. Busy periods already carry DIFS, SIFS and the ACK.
 */

enum class ArrivalProcess
{
  poisson,
  cbr,
};

/// Next arrival time of a flow with packet rate lambda (packet/s).
SimTime traffic_next (ArrivalProcess process, double lambda,
                      std::mt19937_64 &rng, SimTime now);

/// One frame entering the channel in the current slot.
struct Contender
{
  StationId station = 0;
  SimTime t_s{0};
  SimTime t_c{0};
};

enum class SlotKind
{
  idle,
  success,
  collision,
};

struct SlotOutcome
{
  SlotKind kind = SlotKind::idle;
  std::vector<StationId> stations;
  SimTime duration{0};
};

SlotOutcome channel_resolve (const std::vector<Contender> &contenders,
                             SimTime slot);

/// What a station in idle mode does with a newly arrived packet.
enum class IdleArrival
{
  next_slot, ///< transmit in the slot after the current one
  backoff,   ///< draw a fresh counter from [0, W-1] first
};

/// A busy slot is only sensed cca after it starts; an arrival before that
/// saw a free medium and has to back off.
IdleArrival idle_arrival_rule (bool slot_busy, SimTime since_slot_start,
                               SimTime cca);

struct FlowRequest
{
  SimTime time{0};
  FlowSpec flow;
  ArrivalProcess arrival = ArrivalProcess::poisson;
  /// Stop generating after this many packets; 0 means no limit.
  std::uint64_t max_packets = 0;
};

struct SimSetup
{
  PhyMacParams params;
  MonitorConfig monitor;
  /// nullopt admits every request without consulting a scheme.
  std::optional<AdmissionConfig> admission;
  /// One station per request; the station id is FlowSpec::station.
  std::vector<FlowRequest> requests;
  SimTime end = std::chrono::seconds (10);
  /// Post-backoff outcomes before this time are not counted.
  SimTime stats_start{0};
  std::uint64_t seed = 1;
  std::size_t queue_capacity = 1000;
  /// Every queue is treated as permanently backlogged.
  bool saturated = false;
  /// Checks conservation after every slot and throws InternalError.
  bool check_invariants = false;
  bool record_packets = true;
  bool record_observations = false;
  bool record_backoffs = false;

  void validate () const;
};

struct PacketRecord
{
  StationId station = 0;
  SimTime arrival{0};
  SimTime delay{0};
  std::uint32_t retries = 0;

  bool operator== (const PacketRecord &) const = default;
};

struct DecisionRecord
{
  SimTime time{0};
  FlowSpec flow;
  Measurements measurements;
  AdmissionDecision decision;

  bool operator== (const DecisionRecord &) const = default;
};

struct MeasurementSample
{
  SimTime time{0};
  Measurements values;

  bool operator== (const MeasurementSample &) const = default;
};

struct SecondStats
{
  std::int64_t second = 0;
  double throughput_bps = 0.0;
  double mean_delay_ms = 0.0; ///< 0 when nothing was delivered
  std::uint64_t delivered = 0;
  std::uint64_t queued = 0;   ///< packets waiting at the end of the second

  bool operator== (const SecondStats &) const = default;
};

struct BackoffDraw
{
  StationId station = 0;
  int stage = 0;
  int counter = 0;
  int window = 0;

  bool operator== (const BackoffDraw &) const = default;
};

struct SimCounters
{
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t in_queue = 0;
  std::uint64_t idle_slots = 0;
  std::uint64_t successes = 0;
  std::uint64_t collisions = 0;
  std::uint64_t post_backoffs = 0;
  std::uint64_t post_backoffs_empty = 0;
  std::uint64_t backoff_violations = 0;

  bool operator== (const SimCounters &) const = default;
};

struct SimTrace
{
  std::vector<DecisionRecord> decisions;
  std::vector<PacketRecord> packets;
  std::vector<ChannelObservation> observations;
  std::vector<MeasurementSample> measurements;
  std::vector<SecondStats> seconds;
  std::vector<BackoffDraw> backoffs;
  /// Delivered packets per station id.
  std::vector<std::uint64_t> station_delivered;
  SimCounters counters;
  SimTime end{0};

  /// Fraction of post-backoffs that found the queue empty; 1 if none ended.
  double gamma () const;

  bool operator== (const SimTrace &) const = default;
};

/// Runs the event loop to setup.end. Throws InvalidParameters on a bad
/// setup and InternalError when the loop detects a broken invariant.
SimTrace simulate (const SimSetup &setup);

} // namespace dcfcac

#endif
