#ifndef DCFCAC_DTMC_MODEL_HPP
#define DCFCAC_DTMC_MODEL_HPP

#include "dcfcac/markov_chain.hpp"
#include "dcfcac/phy_timing.hpp"

#include <cstddef>
#include <vector>

namespace dcfcac {

/**
 * Single-station DTMC of non-saturated DCF: the Bianchi backoff chain
 * {(stage, counter)} extended with an idle state entered after post-backoff
 * when the queue is empty. Solved jointly with an M/G/1 view of the
 * interface queue, it yields gamma, the probability that the queue is empty
 * after post-backoff. gamma reaching zero marks WLAN saturation.
 *
 * Rates are packets per second; durations are microseconds.
 */

struct ModelInputs
{
  double lambda = 0.0;       ///< per-station Poisson arrival rate, packet/s
  int n = 1;                 ///< active stations
  double t_s = 0.0;          ///< successful transmission slot, us
  double t_c = 0.0;          ///< collision slot, us
  double payload_bits = 0.0; ///< only used for the throughput figure
  PhyMacParams params;

  void validate () const;
};

/// How a successful transmission seeds the stage-0 post-backoff counter.
enum class PostBackoffDraw
{
  /// k uniform on [0, W-1]. The k = 0 share goes straight to the
  /// empty-queue check: (0,0) with 1-gamma, idle with gamma. At gamma = 0
  /// this reduces to Bianchi's saturation chain.
  uniform_from_zero,
  /// k uniform on [1, W-1] with mass (1-p)/(W-1) each; the queue check
  /// happens only at (0,1).
  uniform_from_one,
};

struct ChainShape
{
  int cw_min = 32;
  int max_stage = 5;

  explicit ChainShape (const PhyMacParams &params)
    : cw_min (params.cw_min), max_stage (params.max_stage)
  {
  }
  ChainShape (int w, int m) : cw_min (w), max_stage (m) {}

  int width (int stage) const { return cw_min << stage; }
  std::size_t index (int stage, int counter) const;
  std::size_t idle () const;
  std::size_t size () const { return idle () + 1; }
};

struct StationaryDistribution
{
  std::vector<std::vector<double>> b; ///< b[stage][counter]
  double b_idle = 0.0;

  double total () const;
  /// Sum over stages of b[i][0]: a station transmits from any stage head.
  double tau () const;
};

struct ArrivalProbs
{
  double p_as = 0.0; ///< arrival during a successful-transmission slot
  double p_ac = 0.0; ///< ... during a collision slot
  double p_ai = 0.0; ///< ... during an idle slot
  double p_a = 0.0;  ///< ... during a generic slot
};

struct SlotProbabilities
{
  double p = 0.0;    ///< conditional collision probability
  double p_tr = 0.0; ///< at least one transmission in a slot
  double p_s = 0.0;  ///< success given a transmission
  double t_slot = 0.0; ///< mean logical slot duration, us
};

struct ServiceTimeBreakdown
{
  double d_b2b = 0.0;
  double d_nob2b_idle = 0.0;
  double d_nob2b_tx = 0.0;
  double d_nob2b_cca = 0.0;
  double p_b2b = 0.0;
  double p_nob2b_idle = 0.0;
  double p_nob2b_tx = 0.0;
  double p_nob2b_cca = 0.0;
  double bo_slots = 0.0; ///< mean total backoff time, us
  double d_mac = 0.0;    ///< conditional average over the four cases, us
};

struct BackoffTime
{
  double value = 0.0; ///< us
  bool clamped = false;
};

enum class SolverMethod
{
  /// Eliminates gamma analytically for each tau (d_mac is affine in gamma)
  /// and brackets the smallest root of tau = chain_tau(tau).
  bracketed,
  /// Damped successive substitution over (tau, gamma).
  damped,
};

struct SolverOptions
{
  SolverMethod method = SolverMethod::bracketed;
  double damping = 0.5;          ///< weight kept on the previous iterate
  double tolerance = 1e-8;       ///< outer fixed point, max(|dtau|, |dgamma|)
  int max_iterations = 10000;
  double linear_tolerance = 1e-12;
  PostBackoffDraw post_backoff = PostBackoffDraw::uniform_from_zero;
};

struct ModelSolution
{
  double tau = 0.0;
  double p = 0.0;
  double p_tr = 0.0;
  double p_s = 0.0;
  double t_slot = 0.0;
  double gamma = 1.0;
  double rho = 0.0;
  ServiceTimeBreakdown service;
  ArrivalProbs arrivals;
  double throughput_bps = 0.0; ///< aggregate over all n stations
  StationaryDistribution dist;
  bool converged = false;
  bool saturated = false;      ///< gamma pinned at zero
  bool backoff_clamped = false;
  int iterations = 0;          ///< chain solves performed
  double residual = 0.0;       ///< |tau - chain_tau| (bracketed) or last step
};

ArrivalProbs arrival_probabilities (double lambda, double t_s, double t_c,
                                    double slot, double p_tr, double p_s);

/// p, P_tr, P_s and T_slot for n stations each transmitting with prob tau.
SlotProbabilities slot_probabilities (double tau, int n, double t_s,
                                      double t_c, double slot);

TransitionMatrix build_transition_matrix (
    const ModelInputs &inputs, const SlotProbabilities &slot,
    const ArrivalProbs &arrivals, double gamma,
    PostBackoffDraw draw = PostBackoffDraw::uniform_from_zero);

StationaryDistribution stationary_distribution (const TransitionMatrix &matrix,
                                                const ChainShape &shape,
                                                double residual_tol = 1e-12);

/// Mean backoff time over the modified-geometric number of attempts.
/// p is clamped to 0.4999 where the expression diverges.
BackoffTime mean_backoff_time (double p, int cw_min, int max_stage,
                               double t_slot);

ServiceTimeBreakdown service_time (const ModelInputs &inputs,
                                   const SlotProbabilities &slot,
                                   const ArrivalProbs &arrivals, double gamma,
                                   double bo_slots);

/// gamma consistent with the service-time cases at a fixed tau:
/// 1 - min(1, lambda d_mac(gamma)) solved for gamma.
double consistent_gamma (const ModelInputs &inputs,
                         const SlotProbabilities &slot,
                         const ArrivalProbs &arrivals, double bo_slots);

/// Joint fixed point of the chain and the queue utilisation. Never throws
/// on non-convergence; check ModelSolution::converged.
ModelSolution solve (const ModelInputs &inputs, const SolverOptions &options = {});

/// gamma for per-station rate lambda, n stations and success duration t_s;
/// t_c follows from collision_duration. Throws NumericError if the solver
/// does not converge.
double psi (double lambda, int n, double t_s, const PhyMacParams &params,
            const SolverOptions &options = {});

/// Bianchi's saturation transmission probability for collision probability p.
double tau_saturation (double p, int cw_min, int max_stage);

/// Solves Bianchi's coupled saturation system by bisection on tau.
struct SaturationPoint
{
  double tau = 0.0;
  double p = 0.0;
};
SaturationPoint bianchi_saturation (int n, int cw_min, int max_stage);

} // namespace dcfcac

#endif
