#ifndef DCFCAC_ADMISSION_HPP
#define DCFCAC_ADMISSION_HPP

#include "dcfcac/channel_measure.hpp"
#include "dcfcac/dtmc_model.hpp"
#include "dcfcac/phy_timing.hpp"
#include "dcfcac/units.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace dcfcac {

/// Link-layer description of a requested flow.
struct FlowSpec
{
  double lambda_flow = 0.0;    ///< packet/s
  double payload_bits = 0.0;
  double data_rate_bps = 0.0;
  double throughput_bps = 0.0; ///< lambda_flow * payload_bits
  StationId station = 0;
  FlowId flow = 0;

  /// Builds a spec from a payload throughput; lambda follows.
  static FlowSpec from_throughput (double throughput_bps, double payload_bits,
                                   double data_rate_bps, StationId station,
                                   FlowId flow = 0);

  /// Throws InvalidParameters on non-positive or inconsistent fields.
  void validate () const;

  bool operator== (const FlowSpec &) const = default;
};

struct AdmissionDecision
{
  bool admitted = false;
  std::optional<double> predicted_gamma;
  std::optional<double> predicted_s_flow; ///< bit/s
  std::optional<double> airtime_after;
  std::string reason;

  bool operator== (const AdmissionDecision &) const = default;
};

struct BuffetOptions
{
  /// Admit iff gamma_new > epsilon.
  double epsilon = 0.0;
  SolverOptions solver;
};

/**
 * Model-based decision from channel measurements and the new flow's
 * FlowSpec only. The requesting station is assumed inactive, so it adds
 * one to the measured population; its packet rate is spread over all n
 * stations together with the measured aggregate.
 */
AdmissionDecision buffet_decide (const Measurements &meas, const FlowSpec &flow,
                                 const PhyMacParams &params,
                                 const BuffetOptions &options = {});

/// Saturation-throughput test driven by the measured collision fraction.
AdmissionDecision tputsat_decide (const Measurements &meas,
                                  const FlowSpec &flow,
                                  const PhyMacParams &params);

/// Centralised airtime book: sum of per-flow throughput/PHY-rate ratios.
class AirtimeRegistry
{
public:
  explicit AirtimeRegistry (double ea_threshold);

  double threshold () const { return m_threshold; }
  double total () const;
  std::size_t size () const { return m_entries.size (); }
  bool contains (StationId station, FlowId flow) const;

  /// Throws RegistryError on a duplicate key.
  void add (StationId station, FlowId flow, double ratio);
  /// Throws RegistryError when the entry is missing.
  void remove (StationId station, FlowId flow);

private:
  double m_threshold;
  std::map<std::pair<StationId, FlowId>, double> m_entries;
};

/// Airtime a flow needs per second: payload throughput over PHY rate.
double airtime_ratio (const FlowSpec &flow);

AdmissionDecision airtime_decide (AirtimeRegistry &registry,
                                  const FlowSpec &flow);
void release_flow (AirtimeRegistry &registry, StationId station, FlowId flow);

enum class Scheme
{
  buffet,
  tputsat,
  airtime,
  nocac,
};

/// Case-insensitive; throws ConfigError on an unknown token.
Scheme parse_scheme (std::string_view name);
std::string_view scheme_name (Scheme scheme);

struct AdmissionConfig
{
  Scheme scheme = Scheme::nocac;
  std::optional<double> ea_threshold; ///< required for airtime
  BuffetOptions buffet;
};

/// Scheme-agnostic front end used by the simulator. Any error inside a
/// scheme turns into a rejection.
class AdmissionController
{
public:
  /// Throws ConfigError when airtime is selected without a threshold.
  AdmissionController (AdmissionConfig config, PhyMacParams params);

  Scheme scheme () const { return m_config.scheme; }
  AdmissionDecision decide (const Measurements &meas, const FlowSpec &flow);
  const AirtimeRegistry *registry () const;

private:
  AdmissionConfig m_config;
  PhyMacParams m_params;
  std::optional<AirtimeRegistry> m_registry;
};

} // namespace dcfcac

#endif
