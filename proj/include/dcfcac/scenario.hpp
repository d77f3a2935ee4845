#ifndef DCFCAC_SCENARIO_HPP
#define DCFCAC_SCENARIO_HPP

#include "dcfcac/admission.hpp"
#include "dcfcac/dcf_sim.hpp"
#include "dcfcac/phy_timing.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dcfcac {

/// Traffic description shared by every flow of one type.
struct FlowTemplate
{
  double payload_bits = 4000.0;
  double data_rate_bps = 11e6;
  double throughput_bps = 105e3;
  ArrivalProcess arrival = ArrivalProcess::poisson;

  double lambda () const { return throughput_bps / payload_bits; }
  /// "(11, 500, 105)": PHY Mb/s, payload bytes, Kb/s.
  std::string label () const;
};

struct ScenarioConfig
{
  std::string name = "custom";
  std::string phy = "dsss-11mbps";
  PhyMacParams params = phy_preset ("dsss-11mbps");

  Scheme scheme = Scheme::buffet;
  std::optional<double> ea_threshold;
  /// Thresholds swept by the table and sweep commands.
  std::vector<double> ea_thresholds;
  double epsilon = 0.0;

  FlowTemplate flow;
  std::optional<FlowTemplate> flow2;
  /// Requests with index >= switch_index use flow2.
  int switch_index = 0;

  double request_interval_s = 10.0;
  int max_requests = 40;
  std::optional<double> run_length_s; ///< default 10 s per request + 100 s
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double t_update_s = 1.0;
  double alpha = 0.8;
  std::size_t queue_capacity = 1000;

  /// NoCAC kick-in: first second whose mean delay exceeds this factor times
  /// the mean over the first kickin_baseline_s seconds.
  double kickin_factor = 10.0;
  double kickin_baseline_s = 60.0;

  double run_length () const;
  const FlowTemplate &flow_for (int request) const;

  /// Throws ConfigError on an inconsistent configuration.
  void validate () const;
};

/// scenario1 ... scenario7, mixed1 ... mixed4. Throws ConfigError otherwise.
ScenarioConfig scenario_preset (std::string_view name);
std::vector<std::string> scenario_preset_names ();

/**
 * Flat key = value text, one setting per line, '#' starts a comment.
 * "preset" is applied first, then "phy", then everything else in file
 * order. Unknown or repeated keys and malformed values throw ConfigError
 * naming the line.
 */
ScenarioConfig parse_config (std::istream &in, std::string_view origin = "<config>");
ScenarioConfig load_config (const std::string &path);

/// Applies one setting; the same keys as the file format.
void apply_setting (ScenarioConfig &config, std::string_view key,
                    std::string_view value);

/// "1,2,3" -> {1, 2, 3}; throws ConfigError on junk or an empty list.
std::vector<std::uint64_t> parse_seed_list (std::string_view text);
std::vector<double> parse_double_list (std::string_view text);

/// Simulator input for one seed of a scenario.
SimSetup build_setup (const ScenarioConfig &config, std::uint64_t seed);

} // namespace dcfcac

#endif
