#include "dcfcac/harness.hpp"

#include "dcfcac/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace dcfcac {

namespace {

std::string
fmt (double v, int precision)
{
  char buf[64];
  std::snprintf (buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string
fmt_general (double v)
{
  char buf[64];
  std::snprintf (buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string
pad_left (const std::string &s, std::size_t width)
{
  return s.size () >= width ? s : std::string (width - s.size (), ' ') + s;
}

std::string
pad_right (const std::string &s, std::size_t width)
{
  return s.size () >= width ? s : s + std::string (width - s.size (), ' ');
}

double
mean_delay_ms (const SimTrace &trace, SimTime from)
{
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto &p : trace.packets)
    if (p.arrival >= from)
      {
        sum += to_ms (p.delay);
        ++count;
      }
  return count > 0 ? sum / static_cast<double> (count) : 0.0;
}

std::string
column_label (const MetricsReport &r)
{
  switch (r.scheme)
    {
    case Scheme::buffet:
      return "B";
    case Scheme::tputsat:
      return "T";
    case Scheme::airtime:
      return "A " + (r.threshold ? fmt (*r.threshold, 2) : std::string ("?"));
    case Scheme::nocac:
      return "NoCAC";
    }
  return "?";
}

} // namespace

std::optional<double>
detect_kickin (const SimTrace &trace, double factor, double baseline_s)
{
  if (!trace.decisions.empty ())
    {
      for (const auto &d : trace.decisions)
        if (!d.decision.admitted)
          return to_seconds (d.time);
      return std::nullopt;
    }

  std::map<std::int64_t, std::pair<double, std::size_t>> buckets;
  double base_sum = 0.0;
  std::size_t base_count = 0;
  const SimTime baseline = from_seconds (baseline_s);
  for (const auto &p : trace.packets)
    {
      auto &b = buckets[p.arrival / std::chrono::seconds (1)];
      b.first += to_ms (p.delay);
      ++b.second;
      if (p.arrival < baseline)
        {
          base_sum += to_ms (p.delay);
          ++base_count;
        }
    }
  if (base_count == 0)
    return std::nullopt;
  const double limit = factor * base_sum / static_cast<double> (base_count);
  for (const auto &[second, b] : buckets)
    if (b.first / static_cast<double> (b.second) > limit)
      return static_cast<double> (second);
  return std::nullopt;
}

RunMetrics
metrics_from_trace (const ScenarioConfig &config, const SimTrace &trace,
                    std::uint64_t seed)
{
  RunMetrics m;
  m.seed = seed;
  if (trace.decisions.empty ())
    {
      m.admitted = config.max_requests;
    }
  else
    {
      for (const auto &d : trace.decisions)
        if (d.decision.admitted)
          ++m.admitted;
    }
  const auto kick = detect_kickin (trace, config.kickin_factor,
                                   config.kickin_baseline_s);
  m.kickin_detected = kick.has_value ();
  m.kickin_s = kick ? *kick
                    : config.request_interval_s * std::max (0, config.max_requests - 1);
  m.delay_ms_post_kickin = mean_delay_ms (trace, from_seconds (m.kickin_s));
  m.delay_ms_overall = mean_delay_ms (trace, SimTime::zero ());
  m.delivered = trace.counters.delivered;
  m.dropped = trace.counters.dropped;
  return m;
}

MetricsReport
run_scenario (const ScenarioConfig &config, const RunOptions &options)
{
  config.validate ();
  MetricsReport report;
  report.scenario = config.name;
  report.scheme = config.scheme;
  if (config.scheme == Scheme::airtime)
    report.threshold = config.ea_threshold;
  for (auto seed : config.seeds)
    {
      SimSetup setup = build_setup (config, seed);
      setup.check_invariants = options.check_invariants;
      SimTrace trace;
      try
        {
          trace = simulate (setup);
        }
      catch (const Error &e)
        {
          throw InternalError (config.name + " (" + std::string (scheme_name (config.scheme))
                               + ", seed " + std::to_string (seed) + "): " + e.what ());
        }
      if (options.on_trace)
        options.on_trace (seed, trace);
      report.runs.push_back (metrics_from_trace (config, trace, seed));
    }
  const double k = static_cast<double> (report.runs.size ());
  for (const auto &r : report.runs)
    {
      report.admitted += r.admitted / k;
      report.delay_ms_post_kickin += r.delay_ms_post_kickin / k;
      report.delay_ms_overall += r.delay_ms_overall / k;
      report.kickin_s += r.kickin_s / k;
    }
  return report;
}

std::vector<MetricsReport>
airtime_sweep (const ScenarioConfig &config, const std::vector<double> &thresholds,
               const RunOptions &options)
{
  if (thresholds.empty ())
    throw ConfigError ("airtime sweep needs at least one threshold");
  std::vector<MetricsReport> out;
  for (double ea : thresholds)
    {
      ScenarioConfig c = config;
      c.scheme = Scheme::airtime;
      c.ea_threshold = ea;
      out.push_back (run_scenario (c, options));
    }
  return out;
}

std::vector<MetricsReport>
scheme_bundle (const ScenarioConfig &config, const RunOptions &options)
{
  std::vector<MetricsReport> out;
  for (Scheme s : {Scheme::buffet, Scheme::tputsat})
    {
      ScenarioConfig c = config;
      c.scheme = s;
      out.push_back (run_scenario (c, options));
    }
  if (!config.ea_thresholds.empty ())
    for (auto &r : airtime_sweep (config, config.ea_thresholds, options))
      out.push_back (std::move (r));
  return out;
}

double
CurveConfig::lambda_for_load (double load) const
{
  return load * data_rate_bps / (stations * payload_bits);
}

double
CurveConfig::load_for_lambda (double lambda) const
{
  return lambda * stations * payload_bits / data_rate_bps;
}

ModelInputs
CurveConfig::model_inputs (double lambda) const
{
  const auto fd = FrameDurations::for_frame (payload_bits, data_rate_bps, params);
  ModelInputs in;
  in.lambda = lambda;
  in.n = stations;
  in.t_s = fd.t_s;
  in.t_c = fd.t_c;
  in.payload_bits = payload_bits;
  in.params = params;
  return in;
}

std::vector<CurvePoint>
gamma_delay_curve (const CurveConfig &config, const std::vector<double> &loads)
{
  if (config.stations < 1)
    throw ConfigError ("curve needs at least one station");
  if (!(config.duration_s > config.warmup_s) || config.warmup_s < 0.0)
    throw ConfigError ("curve duration must exceed the warm-up");
  for (std::size_t i = 0; i < loads.size (); ++i)
    if (!(loads[i] >= 0.0) || (i > 0 && loads[i] < loads[i - 1]))
      throw ConfigError ("load grid must be non-negative and non-decreasing");

  std::vector<CurvePoint> out;
  for (double load : loads)
    {
      CurvePoint pt;
      pt.offered_load = load;
      pt.lambda = config.lambda_for_load (load);
      if (pt.lambda <= 0.0)
        {
          pt.model_converged = true;
          out.push_back (pt);
          continue;
        }
      const auto sol = solve (config.model_inputs (pt.lambda), config.solver);
      pt.model_gamma = sol.gamma;
      pt.model_converged = sol.converged;

      SimSetup setup;
      setup.params = config.params;
      for (int i = 0; i < config.stations; ++i)
        {
          FlowRequest r;
          r.flow = FlowSpec::from_throughput (pt.lambda * config.payload_bits,
                                              config.payload_bits,
                                              config.data_rate_bps,
                                              static_cast<StationId> (i));
          r.arrival = config.arrival;
          setup.requests.push_back (r);
        }
      setup.end = from_seconds (config.duration_s);
      setup.stats_start = from_seconds (config.warmup_s);
      setup.seed = config.seed;
      const SimTrace trace = simulate (setup);
      pt.sim_gamma = trace.gamma ();
      pt.sim_delay_ms = mean_delay_ms (trace, setup.stats_start);
      double bits = 0.0;
      for (const auto &sec : trace.seconds)
        if (sec.second >= static_cast<std::int64_t> (config.warmup_s))
          bits += sec.throughput_bps;
      pt.sim_throughput_bps = bits / (config.duration_s - std::ceil (config.warmup_s));
      out.push_back (pt);
    }
  return out;
}

double
model_saturation_lambda (const CurveConfig &config, double lo, double hi)
{
  auto gamma_at = [&config] (double lambda) {
    const auto sol = solve (config.model_inputs (lambda), config.solver);
    if (!sol.converged)
      throw NumericError ("model did not converge at lambda "
                          + std::to_string (lambda), sol.residual);
    return sol.gamma;
  };
  if (!(gamma_at (lo) > 0.0) || gamma_at (hi) > 0.0)
    throw NumericError ("saturation rate is not bracketed by ["
                        + std::to_string (lo) + ", " + std::to_string (hi) + "]", 0.0);
  for (int i = 0; i < 60 && hi - lo > 1e-6 * hi; ++i)
    {
      const double mid = 0.5 * (lo + hi);
      if (gamma_at (mid) > 0.0)
        lo = mid;
      else
        hi = mid;
    }
  return hi;
}

std::string
metrics_csv (const std::vector<MetricsReport> &reports)
{
  std::ostringstream os;
  os << "scenario,scheme,threshold,seed,admitted,delay_ms_post_kickin,"
        "delay_ms_overall,kickin_s\n";
  for (const auto &r : reports)
    {
      const std::string th = r.threshold ? fmt (*r.threshold, 4) : "";
      for (const auto &run : r.runs)
        os << r.scenario << ',' << scheme_name (r.scheme) << ',' << th << ','
           << run.seed << ',' << run.admitted << ','
           << fmt (run.delay_ms_post_kickin, 4) << ','
           << fmt (run.delay_ms_overall, 4) << ',' << fmt (run.kickin_s, 1) << '\n';
      os << r.scenario << ',' << scheme_name (r.scheme) << ',' << th << ",mean,"
         << fmt (r.admitted, 2) << ',' << fmt (r.delay_ms_post_kickin, 4) << ','
         << fmt (r.delay_ms_overall, 4) << ',' << fmt (r.kickin_s, 1) << '\n';
    }
  return os.str ();
}

std::string
metrics_table (const ScenarioConfig &config, const std::vector<MetricsReport> &reports)
{
  const std::size_t first = 16;
  const std::size_t col = 10;
  std::ostringstream os;
  os << config.name << ' ' << config.flow.label ();
  if (config.flow2)
    os << " then " << config.flow2->label () << " from request "
       << config.switch_index;
  os << '\n';
  os << pad_right ("CAC scheme", first);
  for (const auto &r : reports)
    os << pad_left (column_label (r), col);
  os << '\n' << pad_right ("Admitted flows", first);
  for (const auto &r : reports)
    os << pad_left (fmt (r.admitted, 1), col);
  os << '\n' << pad_right ("Delay (ms)", first);
  for (const auto &r : reports)
    os << pad_left (fmt (r.delay_ms_post_kickin, 2), col);
  os << '\n';
  return os.str ();
}

std::string
curve_csv (const std::vector<CurvePoint> &points)
{
  std::ostringstream os;
  os << "offered_load,lambda_pps,model_gamma,model_converged,sim_gamma,"
        "sim_delay_ms,sim_throughput_bps\n";
  for (const auto &p : points)
    os << fmt (p.offered_load, 4) << ',' << fmt (p.lambda, 4) << ','
       << fmt (p.model_gamma, 6) << ',' << (p.model_converged ? 1 : 0) << ','
       << fmt (p.sim_gamma, 6) << ',' << fmt (p.sim_delay_ms, 4) << ','
       << fmt (p.sim_throughput_bps, 1) << '\n';
  return os.str ();
}

std::string
curve_dat (const std::vector<CurvePoint> &points, bool delay)
{
  std::ostringstream os;
  os << (delay ? "# offered_load sim_delay_ms\n" : "# offered_load model_gamma\n");
  for (const auto &p : points)
    os << fmt (p.offered_load, 4) << ' '
       << (delay ? fmt (p.sim_delay_ms, 4) : fmt (p.model_gamma, 6)) << '\n';
  return os.str ();
}

std::string
packets_csv (const SimTrace &trace)
{
  std::ostringstream os;
  os << "station,arrival_us,delay_us,retries\n";
  for (const auto &p : trace.packets)
    os << p.station << ',' << fmt (to_us (p.arrival), 3) << ','
       << fmt (to_us (p.delay), 3) << ',' << p.retries << '\n';
  return os.str ();
}

std::string
seconds_csv (const SimTrace &trace)
{
  std::ostringstream os;
  os << "second,throughput_bps,mean_delay_ms,delivered,queued\n";
  for (const auto &s : trace.seconds)
    os << s.second << ',' << fmt (s.throughput_bps, 1) << ','
       << fmt (s.mean_delay_ms, 4) << ',' << s.delivered << ',' << s.queued << '\n';
  return os.str ();
}

std::string
decisions_csv (const SimTrace &trace)
{
  std::ostringstream os;
  os << "time_s,station,admitted,reason,predicted_gamma,predicted_s_flow_bps,"
        "airtime_after,r_tx_bar,t_tx_bar_us,n_active,p_bar\n";
  for (const auto &d : trace.decisions)
    {
      const auto &m = d.measurements;
      const auto &dec = d.decision;
      os << fmt (to_seconds (d.time), 3) << ',' << d.flow.station << ','
         << (dec.admitted ? 1 : 0) << ',' << dec.reason << ','
         << (dec.predicted_gamma ? fmt (*dec.predicted_gamma, 6) : "") << ','
         << (dec.predicted_s_flow ? fmt (*dec.predicted_s_flow, 1) : "") << ','
         << (dec.airtime_after ? fmt (*dec.airtime_after, 6) : "") << ','
         << fmt (m.r_tx_bar, 4) << ',' << fmt (m.t_tx_bar, 3) << ','
         << m.n_active << ',' << fmt (m.p_bar, 6) << '\n';
    }
  return os.str ();
}

std::string
model_dump (const ModelInputs &in, const ModelSolution &s)
{
  std::ostringstream os;
  auto kv = [&os] (const char *key, double v) { os << key << '=' << fmt_general (v) << '\n'; };
  kv ("lambda", in.lambda);
  kv ("n", in.n);
  kv ("t_s_us", in.t_s);
  kv ("t_c_us", in.t_c);
  kv ("payload_bits", in.payload_bits);
  kv ("tau", s.tau);
  kv ("p", s.p);
  kv ("p_tr", s.p_tr);
  kv ("p_s", s.p_s);
  kv ("t_slot_us", s.t_slot);
  kv ("gamma", s.gamma);
  kv ("rho", s.rho);
  kv ("p_as", s.arrivals.p_as);
  kv ("p_ac", s.arrivals.p_ac);
  kv ("p_ai", s.arrivals.p_ai);
  kv ("p_a", s.arrivals.p_a);
  kv ("bo_slots_us", s.service.bo_slots);
  kv ("d_b2b_us", s.service.d_b2b);
  kv ("d_nob2b_idle_us", s.service.d_nob2b_idle);
  kv ("d_nob2b_tx_us", s.service.d_nob2b_tx);
  kv ("d_nob2b_cca_us", s.service.d_nob2b_cca);
  kv ("p_b2b", s.service.p_b2b);
  kv ("p_nob2b_idle", s.service.p_nob2b_idle);
  kv ("p_nob2b_tx", s.service.p_nob2b_tx);
  kv ("p_nob2b_cca", s.service.p_nob2b_cca);
  kv ("d_mac_us", s.service.d_mac);
  kv ("b_idle", s.dist.b_idle);
  kv ("throughput_bps", s.throughput_bps);
  os << "converged=" << (s.converged ? "true" : "false") << '\n';
  os << "saturated=" << (s.saturated ? "true" : "false") << '\n';
  os << "backoff_clamped=" << (s.backoff_clamped ? "true" : "false") << '\n';
  os << "iterations=" << s.iterations << '\n';
  kv ("residual", s.residual);
  return os.str ();
}

void
write_file (const std::string &path, const std::string &content)
{
  std::ofstream out (path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError ("cannot open '" + path + "' for writing");
  out << content;
  out.flush ();
  if (!out)
    throw IoError ("failed writing '" + path + "'");
}

} // namespace dcfcac
