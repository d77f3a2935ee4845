#include "dcfcac/admission.hpp"

#include "dcfcac/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace dcfcac {

namespace {

// Sums of airtime ratios are compared with this slack so that a threshold
// hit exactly in exact arithmetic is not lost to rounding.
constexpr double kAirtimeSlack = 1e-12;

AdmissionDecision
reject (std::string reason)
{
  AdmissionDecision d;
  d.admitted = false;
  d.reason = std::move (reason);
  return d;
}

} // namespace

FlowSpec
FlowSpec::from_throughput (double throughput_bps, double payload_bits,
                           double data_rate_bps, StationId station, FlowId flow)
{
  FlowSpec f;
  f.payload_bits = payload_bits;
  f.data_rate_bps = data_rate_bps;
  f.throughput_bps = throughput_bps;
  f.lambda_flow = payload_bits > 0.0 ? throughput_bps / payload_bits : 0.0;
  f.station = station;
  f.flow = flow;
  return f;
}

void
FlowSpec::validate () const
{
  if (!(lambda_flow > 0.0) || !std::isfinite (lambda_flow))
    throw InvalidParameters ("lambda_flow must be > 0");
  if (!(payload_bits > 0.0))
    throw InvalidParameters ("payload_bits must be > 0");
  if (!(data_rate_bps > 0.0))
    throw InvalidParameters ("data rate must be > 0");
  const double expected = lambda_flow * payload_bits;
  if (std::abs (throughput_bps - expected) > 1e-9 * std::max (1.0, expected))
    throw InvalidParameters ("throughput_bps disagrees with lambda * payload");
}

AdmissionDecision
buffet_decide (const Measurements &meas, const FlowSpec &flow,
               const PhyMacParams &params, const BuffetOptions &options)
{
  try
    {
      flow.validate ();
      const double t_s_flow = frame_tx_duration (flow.payload_bits,
                                                 flow.data_rate_bps, params);

      double lambda_mac = 0.0;
      int n = 1;
      if (meas.has_history)
        {
          lambda_mac = meas.r_tx_bar;
          n = meas.n_active + 1;
        }
      const double share_mac = lambda_mac / n;
      const double share_flow = flow.lambda_flow / n;
      const double lambda_new = share_mac + share_flow;
      const double t_s = (share_mac * meas.t_tx_bar + share_flow * t_s_flow)
                         / lambda_new;

      ModelInputs in;
      in.lambda = lambda_new;
      in.n = n;
      in.t_s = t_s;
      in.t_c = collision_duration (t_s, params);
      in.payload_bits = flow.payload_bits;
      in.params = params;
      const auto sol = solve (in, options.solver);
      if (!sol.converged)
        return reject ("model-unstable");

      AdmissionDecision d;
      d.predicted_gamma = sol.gamma;
      d.admitted = sol.gamma > options.epsilon;
      d.reason = d.admitted ? "gamma-positive" : "predicted-saturation";
      return d;
    }
  catch (const Error &e)
    {
      return reject (std::string ("model-error: ") + e.what ());
    }
}

AdmissionDecision
tputsat_decide (const Measurements &meas, const FlowSpec &flow,
                const PhyMacParams &params)
{
  try
    {
      flow.validate ();
      const int n = meas.has_history ? meas.n_active + 1 : 1;
      const double p = std::clamp (meas.p_bar, 0.0, 1.0);
      const double tau = tau_saturation (p, params.cw_min, params.max_stage);
      const auto fd = FrameDurations::for_frame (flow.payload_bits,
                                                 flow.data_rate_bps, params);
      const auto slot = slot_probabilities (tau, n, fd.t_s, fd.t_c,
                                            params.slot_us);
      const double s_flow = tau * std::pow (1.0 - tau, n - 1)
                            * flow.payload_bits / slot.t_slot * 1e6;

      AdmissionDecision d;
      d.predicted_s_flow = s_flow;
      d.admitted = s_flow >= flow.throughput_bps;
      d.reason = d.admitted ? "throughput-sufficient" : "throughput-insufficient";
      return d;
    }
  catch (const Error &e)
    {
      return reject (std::string ("model-error: ") + e.what ());
    }
}

AirtimeRegistry::AirtimeRegistry (double ea_threshold)
  : m_threshold (ea_threshold)
{
  if (!(ea_threshold > 0.0) || !std::isfinite (ea_threshold))
    throw ConfigError ("airtime threshold must be > 0");
}

double
AirtimeRegistry::total () const
{
  double s = 0.0;
  for (const auto &[key, r] : m_entries)
    s += r;
  return s;
}

bool
AirtimeRegistry::contains (StationId station, FlowId flow) const
{
  return m_entries.count ({station, flow}) != 0;
}

void
AirtimeRegistry::add (StationId station, FlowId flow, double ratio)
{
  if (!(ratio > 0.0))
    throw RegistryError ("airtime ratio must be > 0");
  if (!m_entries.emplace (std::make_pair (station, flow), ratio).second)
    throw RegistryError ("flow " + std::to_string (station) + "/"
                         + std::to_string (flow) + " already registered");
}

void
AirtimeRegistry::remove (StationId station, FlowId flow)
{
  if (m_entries.erase ({station, flow}) == 0)
    throw RegistryError ("flow " + std::to_string (station) + "/"
                         + std::to_string (flow) + " is not registered");
}

double
airtime_ratio (const FlowSpec &flow)
{
  return flow.throughput_bps / flow.data_rate_bps;
}

AdmissionDecision
airtime_decide (AirtimeRegistry &registry, const FlowSpec &flow)
{
  if (registry.contains (flow.station, flow.flow))
    throw RegistryError ("flow " + std::to_string (flow.station) + "/"
                         + std::to_string (flow.flow) + " already registered");
  const double r = airtime_ratio (flow);
  const double after = registry.total () + r;
  AdmissionDecision d;
  d.admitted = r > 0.0 && after <= registry.threshold () + kAirtimeSlack;
  d.airtime_after = d.admitted ? after : registry.total ();
  d.reason = d.admitted ? "airtime-available" : "airtime-exceeded";
  if (d.admitted)
    registry.add (flow.station, flow.flow, r);
  return d;
}

void
release_flow (AirtimeRegistry &registry, StationId station, FlowId flow)
{
  registry.remove (station, flow);
}

Scheme
parse_scheme (std::string_view name)
{
  std::string lower (name);
  std::transform (lower.begin (), lower.end (), lower.begin (),
                  [] (unsigned char c) { return static_cast<char> (std::tolower (c)); });
  if (lower == "buffet")
    return Scheme::buffet;
  if (lower == "tputsat")
    return Scheme::tputsat;
  if (lower == "airtime")
    return Scheme::airtime;
  if (lower == "nocac")
    return Scheme::nocac;
  throw ConfigError ("unknown admission scheme '" + std::string (name) + "'");
}

std::string_view
scheme_name (Scheme scheme)
{
  switch (scheme)
    {
    case Scheme::buffet:
      return "buffet";
    case Scheme::tputsat:
      return "tputsat";
    case Scheme::airtime:
      return "airtime";
    case Scheme::nocac:
      return "nocac";
    }
  return "unknown";
}

AdmissionController::AdmissionController (AdmissionConfig config,
                                          PhyMacParams params)
  : m_config (std::move (config)), m_params (std::move (params))
{
  if (m_config.scheme == Scheme::airtime)
    {
      if (!m_config.ea_threshold)
        throw ConfigError ("airtime scheme requires ea_threshold");
      m_registry.emplace (*m_config.ea_threshold);
    }
}

const AirtimeRegistry *
AdmissionController::registry () const
{
  return m_registry ? &*m_registry : nullptr;
}

AdmissionDecision
AdmissionController::decide (const Measurements &meas, const FlowSpec &flow)
{
  try
    {
      switch (m_config.scheme)
        {
        case Scheme::buffet:
          return buffet_decide (meas, flow, m_params, m_config.buffet);
        case Scheme::tputsat:
          return tputsat_decide (meas, flow, m_params);
        case Scheme::airtime:
          return airtime_decide (*m_registry, flow);
        case Scheme::nocac:
          {
            AdmissionDecision d;
            d.admitted = true;
            d.reason = "no-cac";
            return d;
          }
        }
    }
  catch (const Error &e)
    {
      return reject (std::string ("error: ") + e.what ());
    }
  return reject ("unknown-scheme");
}

} // namespace dcfcac
