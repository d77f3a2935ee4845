#include "dcfcac/phy_timing.hpp"

#include "dcfcac/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dcfcac {

int
PhyMacParams::cw (int stage) const
{
  stage = std::clamp (stage, 0, max_stage);
  return cw_min << stage;
}

bool
PhyMacParams::allows_rate (double rate_bps) const
{
  return std::any_of (data_rates_bps.begin (), data_rates_bps.end (),
                      [rate_bps] (double r) {
                        return std::abs (r - rate_bps) <= 1e-9 * r;
                      });
}

void
PhyMacParams::validate () const
{
  auto positive = [] (double v, const char *name) {
    if (!(v > 0.0))
      throw InvalidParameters (std::string (name) + " must be > 0");
  };
  positive (slot_us, "slot_us");
  positive (sifs_us, "sifs_us");
  positive (difs_us, "difs_us");
  positive (phy_hdr_us, "phy_hdr_us");
  positive (mac_hdr_bits, "mac_hdr_bits");
  positive (ack_us, "ack_us");
  positive (cca_us, "cca_us");
  positive (control_rate_bps, "control_rate_bps");
  if (cca_us > slot_us)
    throw InvalidParameters ("cca_us must not exceed slot_us");
  if (cw_min < 2)
    throw InvalidParameters ("cw_min must be >= 2");
  if (max_stage < 0 || max_stage > 16)
    throw InvalidParameters ("max_stage must be in [0, 16]");
  if (data_rates_bps.empty ())
    throw InvalidParameters ("at least one data rate is required");
  for (double r : data_rates_bps)
    positive (r, "data rate");
}

PhyMacParams
phy_preset (std::string_view name)
{
  PhyMacParams p;
  if (name == "dsss-11mbps")
    {
      p.data_rates_bps = {1e6, 2e6, 5.5e6, 11e6};
    }
  else if (name == "dsss-2mbps")
    {
      p.data_rates_bps = {1e6, 2e6};
    }
  else
    {
      throw ConfigError ("unknown phy preset '" + std::string (name) + "'");
    }
  p.ack_us = 112.0 / p.control_rate_bps * 1e6;
  return p;
}

double
frame_tx_duration (double payload_bits, double data_rate_bps,
                   const PhyMacParams &params)
{
  if (payload_bits < 0.0)
    throw InvalidParameters ("payload_bits must be >= 0");
  if (!params.allows_rate (data_rate_bps))
    throw ConfigError ("data rate " + std::to_string (data_rate_bps)
                       + " bit/s is not configured");
  const double bits_per_us = data_rate_bps * 1e-6;
  return params.difs_us + params.phy_hdr_us
         + (params.mac_hdr_bits + payload_bits) / bits_per_us + params.sifs_us
         + params.phy_hdr_us + params.ack_us;
}

double
collision_duration (double t_s_us, const PhyMacParams &params)
{
  const double t_c = t_s_us - (params.phy_hdr_us + params.ack_us + params.sifs_us);
  if (!(t_c > 0.0))
    throw InvalidParameters ("collision duration must be positive, got "
                             + std::to_string (t_c) + " us");
  return t_c;
}

FrameDurations
FrameDurations::for_frame (double payload_bits, double data_rate_bps,
                           const PhyMacParams &params)
{
  FrameDurations d;
  d.t_s = frame_tx_duration (payload_bits, data_rate_bps, params);
  d.t_c = collision_duration (d.t_s, params);
  return d;
}

} // namespace dcfcac
