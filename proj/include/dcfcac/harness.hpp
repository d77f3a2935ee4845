#ifndef DCFCAC_HARNESS_HPP
#define DCFCAC_HARNESS_HPP

#include "dcfcac/dcf_sim.hpp"
#include "dcfcac/dtmc_model.hpp"
#include "dcfcac/scenario.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dcfcac {

struct RunMetrics
{
  std::uint64_t seed = 0;
  int admitted = 0;
  double delay_ms_post_kickin = 0.0;
  double delay_ms_overall = 0.0;
  double kickin_s = 0.0;
  /// False when neither a rejection nor saturation was seen and kickin_s
  /// fell back to the last request time.
  bool kickin_detected = false;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
};

struct MetricsReport
{
  std::string scenario;
  Scheme scheme = Scheme::buffet;
  std::optional<double> threshold; ///< EA for airtime runs
  std::vector<RunMetrics> runs;

  // Seed means.
  double admitted = 0.0;
  double delay_ms_post_kickin = 0.0;
  double delay_ms_overall = 0.0;
  double kickin_s = 0.0;
};

/// Kick-in time of one run, in seconds. A run with admission control
/// kicks in at its first rejection. A run without (no decisions logged)
/// kicks in at the first one-second bucket, by packet arrival, whose mean
/// delay exceeds factor times the mean over the first baseline_s seconds.
/// nullopt when that never happens.
std::optional<double> detect_kickin (const SimTrace &trace, double factor,
                                     double baseline_s);

RunMetrics metrics_from_trace (const ScenarioConfig &config, const SimTrace &trace,
                               std::uint64_t seed);

struct RunOptions
{
  bool check_invariants = false;
  /// Called with each finished trace, e.g. to write per-seed CSV files.
  std::function<void (std::uint64_t, const SimTrace &)> on_trace;
};

/// One simulation per seed, averaged.
MetricsReport run_scenario (const ScenarioConfig &config,
                            const RunOptions &options = {});

/// One run_scenario per EA threshold with the airtime scheme. Throws
/// ConfigError on an empty list.
std::vector<MetricsReport> airtime_sweep (const ScenarioConfig &config,
                                          const std::vector<double> &thresholds,
                                          const RunOptions &options = {});

/// BUFFET, TPUTSAT and AIRTIME at each of config.ea_thresholds.
std::vector<MetricsReport> scheme_bundle (const ScenarioConfig &config,
                                          const RunOptions &options = {});

/// Fixed population sharing the channel from t = 0 without admission
/// control; all stations carry the same flow.
struct CurveConfig
{
  PhyMacParams params = phy_preset ("dsss-11mbps");
  int stations = 10;
  double payload_bits = 4000.0;
  double data_rate_bps = 11e6;
  ArrivalProcess arrival = ArrivalProcess::poisson;
  double duration_s = 60.0;
  double warmup_s = 5.0;
  std::uint64_t seed = 1;
  SolverOptions solver;

  /// Per-station packet rate for an offered load (aggregate payload bits
  /// per second over the PHY rate).
  double lambda_for_load (double load) const;
  double load_for_lambda (double lambda) const;
  ModelInputs model_inputs (double lambda) const;
};

struct CurvePoint
{
  double offered_load = 0.0;
  double lambda = 0.0;      ///< per station, packet/s
  double model_gamma = 1.0;
  bool model_converged = false;
  double sim_gamma = 1.0;
  double sim_delay_ms = 0.0;
  double sim_throughput_bps = 0.0;
};

/// Throws ConfigError unless the grid is non-negative and non-decreasing.
std::vector<CurvePoint> gamma_delay_curve (const CurveConfig &config,
                                           const std::vector<double> &loads);

/// Smallest per-station rate at which the model gamma reaches zero, by
/// bisection on [lo, hi] packet/s.
double model_saturation_lambda (const CurveConfig &config, double lo = 0.1,
                                double hi = 5000.0);

// Output. All writers throw IoError naming the path when it cannot be
// written. Output contains no timestamps, so identical inputs give
// byte-identical files.

std::string metrics_csv (const std::vector<MetricsReport> &reports);
/// Admitted flows and delay rows per scheme column.
std::string metrics_table (const ScenarioConfig &config,
                           const std::vector<MetricsReport> &reports);
std::string curve_csv (const std::vector<CurvePoint> &points);
/// Two columns: offered load and the chosen value.
std::string curve_dat (const std::vector<CurvePoint> &points, bool delay);
std::string packets_csv (const SimTrace &trace);
std::string seconds_csv (const SimTrace &trace);
std::string decisions_csv (const SimTrace &trace);
std::string model_dump (const ModelInputs &inputs, const ModelSolution &solution);

void write_file (const std::string &path, const std::string &content);

} // namespace dcfcac

#endif
