#ifndef DCFCAC_PHY_TIMING_HPP
#define DCFCAC_PHY_TIMING_HPP

#include <string_view>
#include <vector>

namespace dcfcac {

/**
 * Protocol timing and contention constants shared by the analytic model
 * and the simulator. All durations are in microseconds, rates in bit/s.
 *
 * Defaults describe 802.11b DSSS with the long preamble. The 32-bit FCS is
 * folded into mac_hdr_bits and the ACK is 112 bits at the control rate.
 */
struct PhyMacParams
{
  double slot_us = 20.0;
  double sifs_us = 10.0;
  double difs_us = 50.0;
  double phy_hdr_us = 192.0;   ///< preamble + PLCP header
  double mac_hdr_bits = 256.0;
  double ack_us = 56.0;        ///< ACK frame body at control_rate, no PHY header
  double cca_us = 15.0;
  int cw_min = 32;             ///< W
  int max_stage = 5;           ///< m
  double control_rate_bps = 2e6;
  std::vector<double> data_rates_bps{1e6, 2e6, 5.5e6, 11e6};

  /// W_i = 2^i * W, with i clamped to [0, m].
  int cw (int stage) const;

  bool allows_rate (double rate_bps) const;

  /// Throws InvalidParameters when an invariant does not hold.
  void validate () const;
};

/// Named parameter sets: "dsss-2mbps" and "dsss-11mbps".
PhyMacParams phy_preset (std::string_view name);

/// Busy time of a successful frame exchange, DIFS through ACK.
double frame_tx_duration (double payload_bits, double data_rate_bps,
                          const PhyMacParams &params);

/// Busy time of a collision given the success duration: the ACK exchange is
/// dropped from t_s.
double collision_duration (double t_s_us, const PhyMacParams &params);

struct FrameDurations
{
  double t_s = 0.0;
  double t_c = 0.0;

  static FrameDurations for_frame (double payload_bits, double data_rate_bps,
                                   const PhyMacParams &params);
};

} // namespace dcfcac

#endif
