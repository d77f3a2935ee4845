#include "dcfcac/error.hpp"
#include "dcfcac/harness.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

using namespace dcfcac;

namespace {

struct ScenarioFlags
{
  std::string config;
  std::string preset;
  std::string scheme;
  std::string seeds;
  std::string out = ".";
};

void
add_scenario_flags (CLI::App *cmd, ScenarioFlags &f)
{
  cmd->add_option ("--config", f.config, "Scenario file (key = value)");
  cmd->add_option ("--preset", f.preset, "Named scenario, e.g. scenario2 or mixed1");
  cmd->add_option ("--scheme", f.scheme, "buffet, tputsat, airtime or nocac");
  cmd->add_option ("--seed", f.seeds, "Seed list, e.g. 1,2,3");
  cmd->add_option ("--out", f.out, "Output directory");
}

ScenarioConfig
resolve_config (const ScenarioFlags &f)
{
  ScenarioConfig c;
  if (!f.config.empty ())
    c = load_config (f.config);
  else if (!f.preset.empty ())
    c = scenario_preset (f.preset);
  else
    throw ConfigError ("one of --config or --preset is required");
  if (!f.config.empty () && !f.preset.empty ())
    throw ConfigError ("--config and --preset are mutually exclusive");
  if (!f.scheme.empty ())
    c.scheme = parse_scheme (f.scheme);
  if (!f.seeds.empty ())
    c.seeds = parse_seed_list (f.seeds);
  c.validate ();
  return c;
}

std::string
out_path (const std::string &dir, const std::string &name)
{
  std::error_code ec;
  std::filesystem::create_directories (dir, ec);
  if (ec)
    throw IoError ("cannot create directory '" + dir + "': " + ec.message ());
  return (std::filesystem::path (dir) / name).string ();
}

std::vector<double>
load_grid (const std::string &list, double from, double to, double step)
{
  if (!list.empty ())
    return parse_double_list (list);
  if (!(step > 0.0) || to < from)
    throw ConfigError ("load grid needs --from <= --to and --step > 0");
  std::vector<double> grid;
  const int count = static_cast<int> (std::floor ((to - from) / step + 1e-9));
  for (int i = 0; i <= count; ++i)
    grid.push_back (from + i * step);
  return grid;
}

} // namespace

int
main (int argc, char **argv)
{
  CLI::App app{"802.11 DCF simulator and admission control experiments"};
  app.require_subcommand (1);

  ScenarioFlags run_flags;
  bool run_trace = false;
  bool run_check = false;
  auto *run = app.add_subcommand ("run", "Run one scenario over its seeds");
  add_scenario_flags (run, run_flags);
  run->add_flag ("--trace", run_trace, "Also write per-seed packet, second and decision CSV files");
  run->add_flag ("--check", run_check, "Check simulator invariants while running");

  ScenarioFlags sweep_flags;
  std::string thresholds;
  auto *sweep = app.add_subcommand ("sweep", "AIRTIME threshold sweep");
  add_scenario_flags (sweep, sweep_flags);
  sweep->add_option ("--thresholds", thresholds, "EA list, e.g. 0.21,0.26,0.31");

  ScenarioFlags table_flags;
  bool table_nocac = false;
  auto *table = app.add_subcommand ("table", "BUFFET, TPUTSAT and AIRTIME side by side");
  add_scenario_flags (table, table_flags);
  table->add_flag ("--nocac", table_nocac, "Add a column without admission control");

  CurveConfig curve_cfg;
  std::string curve_phy = "dsss-11mbps";
  std::string curve_loads;
  double curve_from = 0.0;
  double curve_to = 0.5;
  double curve_step = 0.02;
  double curve_payload_bytes = 500.0;
  double curve_rate_mbps = 11.0;
  std::string curve_out = ".";
  auto *curve = app.add_subcommand ("curve", "Model gamma and simulated delay against offered load");
  curve->add_option ("--phy", curve_phy, "PHY preset");
  curve->add_option ("--stations", curve_cfg.stations, "Number of stations");
  curve->add_option ("--payload-bytes", curve_payload_bytes, "Payload size");
  curve->add_option ("--rate-mbps", curve_rate_mbps, "PHY data rate");
  curve->add_option ("--loads", curve_loads, "Explicit load list, e.g. 0.1,0.2");
  curve->add_option ("--from", curve_from, "First offered load");
  curve->add_option ("--to", curve_to, "Last offered load");
  curve->add_option ("--step", curve_step, "Load step");
  curve->add_option ("--duration", curve_cfg.duration_s, "Simulated seconds per point");
  curve->add_option ("--warmup", curve_cfg.warmup_s, "Seconds discarded per point");
  curve->add_option ("--seed", curve_cfg.seed, "Seed");
  curve->add_option ("--out", curve_out, "Output directory");

  std::string model_phy = "dsss-11mbps";
  double model_lambda = 10.0;
  int model_n = 10;
  double model_payload_bytes = 500.0;
  double model_rate_mbps = 11.0;
  std::optional<double> model_ts;
  auto *model = app.add_subcommand ("model", "Solve the analytic model and print it as key=value");
  model->add_option ("--phy", model_phy, "PHY preset");
  model->add_option ("--lambda", model_lambda, "Per-station packet rate, packet/s");
  model->add_option ("--n", model_n, "Active stations");
  model->add_option ("--payload-bytes", model_payload_bytes, "Payload size");
  model->add_option ("--rate-mbps", model_rate_mbps, "PHY data rate");
  model->add_option ("--t-s", model_ts, "Success duration in us (overrides payload and rate)");

  auto *presets = app.add_subcommand ("presets", "List named scenarios");

  try
    {
      app.parse (argc, argv);
    }
  catch (const CLI::ParseError &e)
    {
      const int rc = app.exit (e);
      return rc == 0 ? 0 : 2;
    }

  try
    {
      if (*run)
        {
          const ScenarioConfig cfg = resolve_config (run_flags);
          RunOptions opts;
          opts.check_invariants = run_check;
          if (run_trace)
            opts.on_trace = [&] (std::uint64_t seed, const SimTrace &trace) {
              const std::string tag = cfg.name + "_seed" + std::to_string (seed);
              write_file (out_path (run_flags.out, tag + "_packets.csv"), packets_csv (trace));
              write_file (out_path (run_flags.out, tag + "_seconds.csv"), seconds_csv (trace));
              write_file (out_path (run_flags.out, tag + "_decisions.csv"), decisions_csv (trace));
            };
          const std::vector<MetricsReport> reports{run_scenario (cfg, opts)};
          const std::string text = metrics_table (cfg, reports);
          write_file (out_path (run_flags.out, cfg.name + "_metrics.csv"), metrics_csv (reports));
          write_file (out_path (run_flags.out, cfg.name + "_table.txt"), text);
          std::cout << text;
        }
      else if (*sweep)
        {
          const ScenarioConfig cfg = resolve_config (sweep_flags);
          const auto list = thresholds.empty () ? cfg.ea_thresholds
                                                : parse_double_list (thresholds);
          const auto reports = airtime_sweep (cfg, list);
          const std::string text = metrics_table (cfg, reports);
          write_file (out_path (sweep_flags.out, cfg.name + "_sweep.csv"), metrics_csv (reports));
          write_file (out_path (sweep_flags.out, cfg.name + "_sweep.txt"), text);
          std::cout << text;
        }
      else if (*table)
        {
          const ScenarioConfig cfg = resolve_config (table_flags);
          auto reports = scheme_bundle (cfg);
          if (table_nocac)
            {
              ScenarioConfig c = cfg;
              c.scheme = Scheme::nocac;
              reports.push_back (run_scenario (c));
            }
          const std::string text = metrics_table (cfg, reports);
          write_file (out_path (table_flags.out, cfg.name + "_bundle.csv"), metrics_csv (reports));
          write_file (out_path (table_flags.out, cfg.name + "_bundle.txt"), text);
          std::cout << text;
        }
      else if (*curve)
        {
          curve_cfg.params = phy_preset (curve_phy);
          curve_cfg.payload_bits = 8.0 * curve_payload_bytes;
          curve_cfg.data_rate_bps = 1e6 * curve_rate_mbps;
          const auto grid = load_grid (curve_loads, curve_from, curve_to, curve_step);
          const auto points = gamma_delay_curve (curve_cfg, grid);
          write_file (out_path (curve_out, "curve.csv"), curve_csv (points));
          write_file (out_path (curve_out, "curve_gamma.dat"), curve_dat (points, false));
          write_file (out_path (curve_out, "curve_delay.dat"), curve_dat (points, true));
          std::cout << curve_csv (points);
        }
      else if (*model)
        {
          const auto params = phy_preset (model_phy);
          ModelInputs in;
          in.lambda = model_lambda;
          in.n = model_n;
          in.payload_bits = 8.0 * model_payload_bytes;
          in.params = params;
          in.t_s = model_ts ? *model_ts
                            : frame_tx_duration (in.payload_bits, 1e6 * model_rate_mbps, params);
          in.t_c = collision_duration (in.t_s, params);
          std::cout << model_dump (in, solve (in));
        }
      else if (*presets)
        {
          for (const auto &name : scenario_preset_names ())
            {
              const auto c = scenario_preset (name);
              std::cout << name << ' ' << c.flow.label ();
              if (c.flow2)
                std::cout << " + " << c.flow2->label ();
              std::cout << '\n';
            }
        }
    }
  catch (const ConfigError &e)
    {
      std::cerr << "config error: " << e.what () << '\n';
      return 2;
    }
  catch (const InvalidParameters &e)
    {
      std::cerr << "config error: " << e.what () << '\n';
      return 2;
    }
  catch (const std::exception &e)
    {
      std::cerr << "error: " << e.what () << '\n';
      return 3;
    }
  return 0;
}
