#include "dcfcac/scenario.hpp"

#include "dcfcac/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace dcfcac {

namespace {

std::string
format_number (double v)
{
  std::ostringstream os;
  os << v;
  return os.str ();
}

std::string_view
trim (std::string_view s)
{
  const auto first = s.find_first_not_of (" \t\r");
  if (first == std::string_view::npos)
    return {};
  const auto last = s.find_last_not_of (" \t\r");
  return s.substr (first, last - first + 1);
}

double
parse_double (std::string_view key, std::string_view text)
{
  text = trim (text);
  double v = 0.0;
  const auto *end = text.data () + text.size ();
  const auto res = std::from_chars (text.data (), end, v);
  if (text.empty () || res.ec != std::errc () || res.ptr != end || !std::isfinite (v))
    throw ConfigError ("'" + std::string (key) + "': expected a number, got '"
                       + std::string (text) + "'");
  return v;
}

long long
parse_integer (std::string_view key, std::string_view text)
{
  text = trim (text);
  long long v = 0;
  const auto *end = text.data () + text.size ();
  const auto res = std::from_chars (text.data (), end, v);
  if (text.empty () || res.ec != std::errc () || res.ptr != end)
    throw ConfigError ("'" + std::string (key) + "': expected an integer, got '"
                       + std::string (text) + "'");
  return v;
}

std::vector<std::string_view>
split_list (std::string_view text)
{
  std::vector<std::string_view> out;
  while (true)
    {
      const auto comma = text.find (',');
      out.push_back (trim (text.substr (0, comma)));
      if (comma == std::string_view::npos)
        break;
      text.remove_prefix (comma + 1);
    }
  return out;
}

ArrivalProcess
parse_arrival (std::string_view text)
{
  text = trim (text);
  if (text == "poisson")
    return ArrivalProcess::poisson;
  if (text == "cbr")
    return ArrivalProcess::cbr;
  throw ConfigError ("unknown arrival process '" + std::string (text) + "'");
}

bool
apply_flow_setting (FlowTemplate &flow, std::string_view field,
                    std::string_view key, std::string_view value)
{
  if (field == "payload_bytes")
    flow.payload_bits = 8.0 * parse_double (key, value);
  else if (field == "payload_bits")
    flow.payload_bits = parse_double (key, value);
  else if (field == "data_rate_bps")
    flow.data_rate_bps = parse_double (key, value);
  else if (field == "data_rate_mbps")
    flow.data_rate_bps = 1e6 * parse_double (key, value);
  else if (field == "throughput_bps")
    flow.throughput_bps = parse_double (key, value);
  else if (field == "throughput_kbps")
    flow.throughput_bps = 1e3 * parse_double (key, value);
  else if (field == "arrival")
    flow.arrival = parse_arrival (value);
  else
    return false;
  return true;
}

bool
apply_phy_setting (PhyMacParams &p, std::string_view field,
                   std::string_view key, std::string_view value)
{
  if (field == "slot_us")
    p.slot_us = parse_double (key, value);
  else if (field == "sifs_us")
    p.sifs_us = parse_double (key, value);
  else if (field == "difs_us")
    p.difs_us = parse_double (key, value);
  else if (field == "phy_hdr_us")
    p.phy_hdr_us = parse_double (key, value);
  else if (field == "mac_hdr_bits")
    p.mac_hdr_bits = parse_double (key, value);
  else if (field == "ack_us")
    p.ack_us = parse_double (key, value);
  else if (field == "cca_us")
    p.cca_us = parse_double (key, value);
  else if (field == "cw_min")
    p.cw_min = static_cast<int> (parse_integer (key, value));
  else if (field == "max_stage")
    p.max_stage = static_cast<int> (parse_integer (key, value));
  else if (field == "control_rate_bps")
    p.control_rate_bps = parse_double (key, value);
  else if (field == "data_rates_bps")
    p.data_rates_bps = parse_double_list (value);
  else
    return false;
  return true;
}

FlowTemplate
make_flow (double rate_mbps, double payload_bytes, double kbps,
           ArrivalProcess arrival = ArrivalProcess::poisson)
{
  FlowTemplate f;
  f.data_rate_bps = rate_mbps * 1e6;
  f.payload_bits = payload_bytes * 8.0;
  f.throughput_bps = kbps * 1e3;
  f.arrival = arrival;
  return f;
}

ScenarioConfig
uniform_scenario (std::string name, const std::string &phy, FlowTemplate flow,
                  std::vector<double> thresholds, int requests = 40)
{
  ScenarioConfig c;
  c.name = std::move (name);
  c.phy = phy;
  c.params = phy_preset (phy);
  c.flow = flow;
  c.ea_thresholds = std::move (thresholds);
  c.ea_threshold = c.ea_thresholds[c.ea_thresholds.size () / 2];
  c.max_requests = requests;
  return c;
}

ScenarioConfig
mixed_scenario (std::string name, FlowTemplate first, FlowTemplate second)
{
  ScenarioConfig c;
  c.name = std::move (name);
  c.phy = "dsss-11mbps";
  c.params = phy_preset (c.phy);
  c.flow = first;
  c.flow2 = second;
  c.switch_index = 20;
  c.max_requests = 40;
  return c;
}

} // namespace

std::string
FlowTemplate::label () const
{
  return "(" + format_number (data_rate_bps / 1e6) + ", "
         + format_number (payload_bits / 8.0) + ", "
         + format_number (throughput_bps / 1e3) + ")";
}

double
ScenarioConfig::run_length () const
{
  if (run_length_s)
    return *run_length_s;
  return request_interval_s * max_requests + 100.0;
}

const FlowTemplate &
ScenarioConfig::flow_for (int request) const
{
  if (flow2 && request >= switch_index)
    return *flow2;
  return flow;
}

void
ScenarioConfig::validate () const
{
  try
    {
      params.validate ();
    }
  catch (const InvalidParameters &e)
    {
      throw ConfigError (std::string ("phy parameters: ") + e.what ());
    }
  auto check_flow = [this] (const FlowTemplate &f, const char *which) {
    if (!(f.payload_bits > 0.0) || !(f.throughput_bps > 0.0))
      throw ConfigError (std::string (which) + ": payload and throughput must be > 0");
    if (!params.allows_rate (f.data_rate_bps))
      throw ConfigError (std::string (which) + ": data rate "
                         + format_number (f.data_rate_bps)
                         + " bit/s is not offered by phy '" + phy + "'");
  };
  check_flow (flow, "flow");
  if (flow2)
    {
      check_flow (*flow2, "flow2");
      if (switch_index < 0)
        throw ConfigError ("switch_index must be >= 0");
    }
  if (!(request_interval_s > 0.0))
    throw ConfigError ("request_interval_s must be > 0");
  if (max_requests < 0)
    throw ConfigError ("max_requests must be >= 0");
  if (run_length_s && !(*run_length_s > 0.0))
    throw ConfigError ("run_length_s must be > 0");
  if (seeds.empty ())
    throw ConfigError ("at least one seed is required");
  if (!(t_update_s > 0.0))
    throw ConfigError ("t_update_s must be > 0");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw ConfigError ("alpha must be in [0, 1]");
  if (queue_capacity == 0)
    throw ConfigError ("queue_capacity must be > 0");
  if (!(epsilon >= 0.0 && epsilon < 1.0))
    throw ConfigError ("epsilon must be in [0, 1)");
  if (scheme == Scheme::airtime && !ea_threshold)
    throw ConfigError ("scheme airtime needs ea_threshold");
  if (ea_threshold && !(*ea_threshold > 0.0))
    throw ConfigError ("ea_threshold must be > 0");
  if (!(kickin_factor > 1.0) || !(kickin_baseline_s > 0.0))
    throw ConfigError ("kickin_factor must be > 1 and kickin_baseline_s > 0");
}

ScenarioConfig
scenario_preset (std::string_view name)
{
  using AP = ArrivalProcess;
  if (name == "scenario1")
    return uniform_scenario ("scenario1", "dsss-11mbps", make_flow (11, 100, 32),
                             {0.07, 0.08, 0.09});
  if (name == "scenario2")
    return uniform_scenario ("scenario2", "dsss-11mbps", make_flow (11, 500, 105),
                             {0.21, 0.26, 0.31});
  if (name == "scenario3")
    return uniform_scenario ("scenario3", "dsss-11mbps", make_flow (11, 1500, 172),
                             {0.42, 0.48, 0.54});
  if (name == "scenario4")
    return uniform_scenario ("scenario4", "dsss-2mbps", make_flow (2, 500, 33),
                             {0.47, 0.54, 0.61});
  if (name == "scenario5")
    return uniform_scenario ("scenario5", "dsss-11mbps", make_flow (11, 500, 57),
                             {0.23, 0.26, 0.29}, 60);
  if (name == "scenario6")
    return uniform_scenario ("scenario6", "dsss-11mbps", make_flow (11, 500, 400),
                             {0.26, 0.31, 0.36});
  if (name == "scenario7")
    return uniform_scenario ("scenario7", "dsss-11mbps",
                             make_flow (11, 500, 105, AP::cbr), {0.22, 0.26, 0.30});
  if (name == "mixed1")
    return mixed_scenario ("mixed1", make_flow (11, 500, 100), make_flow (2, 500, 33));
  if (name == "mixed2")
    return mixed_scenario ("mixed2", make_flow (2, 500, 33), make_flow (11, 1500, 172));
  if (name == "mixed3")
    return mixed_scenario ("mixed3", make_flow (11, 100, 32), make_flow (11, 1500, 172));
  if (name == "mixed4")
    return mixed_scenario ("mixed4", make_flow (11, 500, 100), make_flow (11, 100, 32));
  throw ConfigError ("unknown scenario preset '" + std::string (name) + "'");
}

std::vector<std::string>
scenario_preset_names ()
{
  return {"scenario1", "scenario2", "scenario3", "scenario4", "scenario5",
          "scenario6", "scenario7", "mixed1", "mixed2", "mixed3", "mixed4"};
}

std::vector<std::uint64_t>
parse_seed_list (std::string_view text)
{
  std::vector<std::uint64_t> out;
  for (auto item : split_list (text))
    {
      const long long v = parse_integer ("seeds", item);
      if (v < 0)
        throw ConfigError ("seeds must be >= 0");
      out.push_back (static_cast<std::uint64_t> (v));
    }
  return out;
}

std::vector<double>
parse_double_list (std::string_view text)
{
  std::vector<double> out;
  for (auto item : split_list (text))
    out.push_back (parse_double ("list", item));
  return out;
}

void
apply_setting (ScenarioConfig &c, std::string_view key, std::string_view value)
{
  value = trim (value);
  if (key == "preset")
    c = scenario_preset (value);
  else if (key == "name")
    c.name = std::string (value);
  else if (key == "phy")
    {
      c.phy = std::string (value);
      c.params = phy_preset (value);
    }
  else if (key.substr (0, 4) == "phy.")
    {
      if (!apply_phy_setting (c.params, key.substr (4), key, value))
        throw ConfigError ("unknown key '" + std::string (key) + "'");
    }
  else if (key.substr (0, 6) == "flow2.")
    {
      if (!c.flow2)
        c.flow2 = c.flow;
      if (!apply_flow_setting (*c.flow2, key.substr (6), key, value))
        throw ConfigError ("unknown key '" + std::string (key) + "'");
    }
  else if (key.substr (0, 5) == "flow.")
    {
      if (!apply_flow_setting (c.flow, key.substr (5), key, value))
        throw ConfigError ("unknown key '" + std::string (key) + "'");
    }
  else if (key == "scheme")
    c.scheme = parse_scheme (value);
  else if (key == "ea_threshold")
    c.ea_threshold = parse_double (key, value);
  else if (key == "ea_thresholds")
    c.ea_thresholds = parse_double_list (value);
  else if (key == "epsilon")
    c.epsilon = parse_double (key, value);
  else if (key == "switch_index")
    c.switch_index = static_cast<int> (parse_integer (key, value));
  else if (key == "request_interval_s")
    c.request_interval_s = parse_double (key, value);
  else if (key == "max_requests")
    c.max_requests = static_cast<int> (parse_integer (key, value));
  else if (key == "run_length_s")
    c.run_length_s = parse_double (key, value);
  else if (key == "seeds")
    c.seeds = parse_seed_list (value);
  else if (key == "t_update_s")
    c.t_update_s = parse_double (key, value);
  else if (key == "alpha")
    c.alpha = parse_double (key, value);
  else if (key == "queue_capacity")
    {
      const long long q = parse_integer (key, value);
      if (q <= 0)
        throw ConfigError ("queue_capacity must be > 0");
      c.queue_capacity = static_cast<std::size_t> (q);
    }
  else if (key == "kickin_factor")
    c.kickin_factor = parse_double (key, value);
  else if (key == "kickin_baseline_s")
    c.kickin_baseline_s = parse_double (key, value);
  else
    throw ConfigError ("unknown key '" + std::string (key) + "'");
}

ScenarioConfig
parse_config (std::istream &in, std::string_view origin)
{
  struct Entry
  {
    int line;
    std::string key;
    std::string value;
  };
  std::vector<Entry> entries;
  std::map<std::string, int> seen;
  std::string raw;
  int lineno = 0;
  while (std::getline (in, raw))
    {
      ++lineno;
      std::string_view line (raw);
      line = trim (line.substr (0, line.find ('#')));
      if (line.empty ())
        continue;
      const auto eq = line.find ('=');
      const std::string where = std::string (origin) + ":" + std::to_string (lineno);
      if (eq == std::string_view::npos)
        throw ConfigError (where + ": expected key = value");
      const std::string key (trim (line.substr (0, eq)));
      if (key.empty ())
        throw ConfigError (where + ": empty key");
      if (!seen.emplace (key, lineno).second)
        throw ConfigError (where + ": '" + key + "' already set on line "
                           + std::to_string (seen[key]));
      entries.push_back ({lineno, key, std::string (trim (line.substr (eq + 1)))});
    }

  ScenarioConfig c;
  auto apply = [&] (const Entry &e) {
    try
      {
        apply_setting (c, e.key, e.value);
      }
    catch (const ConfigError &err)
      {
        throw ConfigError (std::string (origin) + ":" + std::to_string (e.line)
                           + ": " + err.what ());
      }
  };
  for (int pass = 0; pass < 3; ++pass)
    for (const auto &e : entries)
      {
        const int rank = e.key == "preset" ? 0 : e.key == "phy" ? 1 : 2;
        if (rank == pass)
          apply (e);
      }
  c.validate ();
  return c;
}

ScenarioConfig
load_config (const std::string &path)
{
  std::ifstream in (path);
  if (!in)
    throw ConfigError ("cannot open config file '" + path + "'");
  return parse_config (in, path);
}

SimSetup
build_setup (const ScenarioConfig &config, std::uint64_t seed)
{
  config.validate ();
  SimSetup s;
  s.params = config.params;
  s.monitor.alpha = config.alpha;
  s.monitor.t_update = from_seconds (config.t_update_s);
  if (config.scheme != Scheme::nocac)
    {
      AdmissionConfig ac;
      ac.scheme = config.scheme;
      ac.ea_threshold = config.ea_threshold;
      ac.buffet.epsilon = config.epsilon;
      s.admission = ac;
    }
  for (int i = 0; i < config.max_requests; ++i)
    {
      const FlowTemplate &t = config.flow_for (i);
      FlowRequest r;
      r.time = from_seconds (config.request_interval_s * i);
      r.flow = FlowSpec::from_throughput (t.throughput_bps, t.payload_bits,
                                          t.data_rate_bps,
                                          static_cast<StationId> (i));
      r.arrival = t.arrival;
      s.requests.push_back (r);
    }
  s.end = from_seconds (config.run_length ());
  s.seed = seed;
  s.queue_capacity = config.queue_capacity;
  return s;
}

} // namespace dcfcac
