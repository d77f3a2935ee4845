#include "dcfcac/dtmc_model.hpp"

#include "dcfcac/error.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace dcfcac {

namespace {

constexpr double kMaxBackoffP = 0.4999;

} // namespace

void
ModelInputs::validate () const
{
  params.validate ();
  if (!(lambda >= 0.0) || !std::isfinite (lambda))
    throw InvalidParameters ("lambda must be finite and >= 0");
  if (n < 1)
    throw InvalidParameters ("n must be >= 1");
  if (!(t_c > 0.0) || !(t_c < t_s))
    throw InvalidParameters ("require 0 < t_c < t_s");
}

std::size_t
ChainShape::index (int stage, int counter) const
{
  // Stage i starts after sum_{j<i} W_j = W (2^i - 1) states.
  return static_cast<std::size_t> (cw_min) * ((std::size_t{1} << stage) - 1)
         + static_cast<std::size_t> (counter);
}

std::size_t
ChainShape::idle () const
{
  return static_cast<std::size_t> (cw_min)
         * ((std::size_t{1} << (max_stage + 1)) - 1);
}

double
StationaryDistribution::total () const
{
  double s = b_idle;
  for (const auto &stage : b)
    for (double v : stage)
      s += v;
  return s;
}

double
StationaryDistribution::tau () const
{
  double s = 0.0;
  for (const auto &stage : b)
    s += stage.front ();
  return s;
}

ArrivalProbs
arrival_probabilities (double lambda, double t_s, double t_c, double slot,
                       double p_tr, double p_s)
{
  const double rate = lambda * 1e-6; // per microsecond
  ArrivalProbs a;
  a.p_as = -std::expm1 (-rate * t_s);
  a.p_ac = -std::expm1 (-rate * t_c);
  a.p_ai = -std::expm1 (-rate * slot);
  a.p_a = p_tr * p_s * a.p_as + p_tr * (1.0 - p_s) * a.p_ac
          + (1.0 - p_tr) * a.p_ai;
  return a;
}

SlotProbabilities
slot_probabilities (double tau, int n, double t_s, double t_c, double slot)
{
  SlotProbabilities s;
  const double q = 1.0 - tau;
  s.p = 1.0 - std::pow (q, n - 1);
  s.p_tr = 1.0 - std::pow (q, n);
  s.p_s = s.p_tr > 0.0 ? n * tau * std::pow (q, n - 1) / s.p_tr : 0.0;
  s.t_slot = (1.0 - s.p_tr) * slot + s.p_tr * s.p_s * t_s
             + s.p_tr * (1.0 - s.p_s) * t_c;
  return s;
}

TransitionMatrix
build_transition_matrix (const ModelInputs &inputs,
                         const SlotProbabilities &slot,
                         const ArrivalProbs &arrivals, double gamma,
                         PostBackoffDraw draw)
{
  const ChainShape shape (inputs.params);
  const int w = shape.cw_min;
  const int m = shape.max_stage;
  const double p = slot.p;
  const double p_tr = slot.p_tr;
  const double p_s = slot.p_s;
  const std::size_t idle = shape.idle ();

  TransitionMatrix mat (shape.size ());

  // Countdown within a stage. Stage 0 stops at (0,1), where the queue is
  // checked.
  for (int i = 0; i <= m; ++i)
    {
      const int lowest = i == 0 ? 2 : 1;
      for (int k = lowest; k < shape.width (i); ++k)
        mat.add (shape.index (i, k), shape.index (i, k - 1), 1.0);
    }
  mat.add (shape.index (0, 1), idle, gamma);
  mat.add (shape.index (0, 1), shape.index (0, 0), 1.0 - gamma);

  // Transmission from each stage head.
  for (int i = 0; i <= m; ++i)
    {
      const std::size_t head = shape.index (i, 0);
      if (draw == PostBackoffDraw::uniform_from_one)
        {
          for (int k = 1; k < w; ++k)
            mat.add (head, shape.index (0, k), (1.0 - p) / (w - 1));
        }
      else
        {
          for (int k = 1; k < w; ++k)
            mat.add (head, shape.index (0, k), (1.0 - p) / w);
          mat.add (head, shape.index (0, 0), (1.0 - p) * (1.0 - gamma) / w);
          mat.add (head, idle, (1.0 - p) * gamma / w);
        }
      const int next = std::min (i + 1, m);
      const int wn = shape.width (next);
      for (int k = 0; k < wn; ++k)
        mat.add (head, shape.index (next, k), p / wn);
    }

  // Leaving idle on the first arrival.
  const double rate = inputs.lambda * 1e-6;
  const double e_cca = std::exp (-rate * inputs.params.cca_us);
  const double e_ts = std::exp (-rate * inputs.t_s);
  const double e_tc = std::exp (-rate * inputs.t_c);
  const double cca_backoff = p_tr * (1.0 - e_cca) / w;
  mat.add (idle, idle, 1.0 - arrivals.p_a);
  for (int k = 1; k < w; ++k)
    mat.add (idle, shape.index (0, k), cca_backoff);
  mat.add (idle, shape.index (0, 0),
           p_tr * p_s * (e_cca - e_ts) + p_tr * (1.0 - p_s) * (e_cca - e_tc)
               + (1.0 - p_tr) * arrivals.p_ai + cca_backoff);

  mat.check_stochastic (1e-9);
  return mat;
}

StationaryDistribution
stationary_distribution (const TransitionMatrix &matrix,
                         const ChainShape &shape, double residual_tol)
{
  if (matrix.size () != shape.size ())
    throw InvalidParameters ("matrix does not match chain shape");
  const auto pi = solve_stationary (matrix, residual_tol);
  StationaryDistribution d;
  d.b.resize (static_cast<std::size_t> (shape.max_stage) + 1);
  for (int i = 0; i <= shape.max_stage; ++i)
    {
      auto &stage = d.b[static_cast<std::size_t> (i)];
      stage.resize (static_cast<std::size_t> (shape.width (i)));
      for (int k = 0; k < shape.width (i); ++k)
        stage[static_cast<std::size_t> (k)] = pi[shape.index (i, k)];
    }
  d.b_idle = pi[shape.idle ()];
  return d;
}

BackoffTime
mean_backoff_time (double p, int cw_min, int max_stage, double t_slot)
{
  BackoffTime out;
  if (p < 0.0)
    p = 0.0;
  if (p > kMaxBackoffP)
    {
      p = kMaxBackoffP;
      out.clamped = true;
    }
  const double w = cw_min;
  const double q = 1.0 - p;
  const double bracket
      = 2.0 * (1.0 - 2.0 * std::pow (p, max_stage)) / (1.0 - 2.0 * p)
        + (std::pow (2.0 * p, max_stage) * (2.0 - p) - q) / (q * q);
  out.value = q * w * t_slot / 2.0 * bracket;
  return out;
}

ServiceTimeBreakdown
service_time (const ModelInputs &inputs, const SlotProbabilities &slot,
              const ArrivalProbs &arrivals, double gamma, double bo_slots)
{
  const double p = slot.p;
  const double p_tr = slot.p_tr;
  const double p_s = slot.p_s;
  const double w = inputs.params.cw_min;
  const double rate = inputs.lambda * 1e-6;
  const double e_cca = std::exp (-rate * inputs.params.cca_us);
  const double e_ts = std::exp (-rate * inputs.t_s);
  const double e_tc = std::exp (-rate * inputs.t_c);
  const double busy = p_s * inputs.t_s + (1.0 - p_s) * inputs.t_c;

  ServiceTimeBreakdown s;
  s.bo_slots = bo_slots;
  s.d_b2b = inputs.t_s + inputs.t_c * p / (1.0 - p) + bo_slots;
  s.d_nob2b_idle = s.d_b2b - w * slot.t_slot / 2.0;
  s.d_nob2b_tx = s.d_nob2b_idle + busy / 2.0;
  s.d_nob2b_cca = s.d_b2b + busy;

  s.p_b2b = 1.0 - gamma;
  if (arrivals.p_a > 0.0)
    {
      s.p_nob2b_idle = gamma * (1.0 - p_tr) * arrivals.p_ai / arrivals.p_a;
      s.p_nob2b_tx = gamma
                     * (p_tr * p_s * (e_cca - e_ts)
                        + p_tr * (1.0 - p_s) * (e_cca - e_tc))
                     / arrivals.p_a;
      s.p_nob2b_cca = gamma * p_tr * (1.0 - e_cca) / arrivals.p_a;
    }
  else
    {
      // No arrivals at all: only the idle-slot case carries the
      // non-back-to-back mass.
      s.p_nob2b_idle = gamma;
    }

  const double mass = s.p_b2b + s.p_nob2b_idle + s.p_nob2b_tx + s.p_nob2b_cca;
  s.d_mac = (s.p_b2b * s.d_b2b + s.p_nob2b_idle * s.d_nob2b_idle
             + s.p_nob2b_tx * s.d_nob2b_tx + s.p_nob2b_cca * s.d_nob2b_cca)
            / mass;
  return s;
}

double
consistent_gamma (const ModelInputs &inputs, const SlotProbabilities &slot,
                   const ArrivalProbs &arrivals, double bo_slots)
{
  // At gamma = 1 the back-to-back case drops out and d_mac is the mean of
  // the three idle-exit cases; d_mac(gamma) is affine between the two ends.
  const auto ends = service_time (inputs, slot, arrivals, 1.0, bo_slots);
  const double rate = inputs.lambda * 1e-6;
  const double busy_load = rate * ends.d_b2b;
  if (busy_load >= 1.0)
    return 0.0;
  return (1.0 - busy_load) / (1.0 - busy_load + rate * ends.d_mac);
}

namespace {

struct Evaluation
{
  SlotProbabilities slot;
  ArrivalProbs arrivals;
  StationaryDistribution dist;
  BackoffTime backoff;
  ServiceTimeBreakdown service;
  double gamma = 1.0;
};

Evaluation
evaluate (const ModelInputs &in, const SolverOptions &opt, double tau,
          std::optional<double> gamma)
{
  Evaluation e;
  e.slot = slot_probabilities (tau, in.n, in.t_s, in.t_c, in.params.slot_us);
  e.arrivals = arrival_probabilities (in.lambda, in.t_s, in.t_c,
                                      in.params.slot_us, e.slot.p_tr,
                                      e.slot.p_s);
  e.backoff = mean_backoff_time (e.slot.p, in.params.cw_min,
                                 in.params.max_stage, e.slot.t_slot);
  e.gamma = gamma ? *gamma
                  : consistent_gamma (in, e.slot, e.arrivals, e.backoff.value);
  const auto mat = build_transition_matrix (in, e.slot, e.arrivals, e.gamma,
                                            opt.post_backoff);
  e.dist = stationary_distribution (mat, ChainShape (in.params),
                                    opt.linear_tolerance);
  e.service = service_time (in, e.slot, e.arrivals, e.gamma, e.backoff.value);
  return e;
}

struct FixedPoint
{
  double tau = 0.0;
  double gamma = 1.0;
  bool converged = false;
  bool pinned = false;
  bool clamped = false;
  int iterations = 0;
  double residual = 0.0;
};

FixedPoint
solve_bracketed (const ModelInputs &in, const SolverOptions &opt)
{
  FixedPoint fp;
  auto excess = [&] (double tau) {
    ++fp.iterations;
    const auto e = evaluate (in, opt, tau, std::nullopt);
    fp.clamped = fp.clamped || e.backoff.clamped;
    return e.dist.tau () - tau;
  };

  // chain_tau >= 0, so the excess is >= 0 at tau = 0 and < 0 at tau = 1.
  // Walk up a geometric grid to the first sign change, which isolates the
  // lowest (least loaded) fixed point.
  double lo = 0.0;
  double h_lo = excess (lo);
  if (h_lo <= opt.tolerance)
    {
      fp.tau = 0.0;
      fp.residual = std::abs (h_lo);
      fp.converged = true;
      return fp;
    }
  double hi = 1e-7;
  double h_hi = excess (hi);
  while (h_hi > 0.0 && hi < 1.0)
    {
      lo = hi;
      h_lo = h_hi;
      hi = std::min (1.0, hi * 1.5);
      h_hi = excess (hi);
    }
  if (h_hi > 0.0)
    return fp;

  // Illinois false position.
  int side = 0;
  while (fp.iterations < opt.max_iterations)
    {
      const double mid = (lo * h_hi - hi * h_lo) / (h_hi - h_lo);
      const double h_mid = excess (mid);
      fp.tau = mid;
      fp.residual = std::abs (h_mid);
      if (fp.residual < opt.tolerance * 1e-2 || hi - lo < opt.tolerance * 1e-2)
        {
          fp.converged = true;
          break;
        }
      if ((h_mid > 0.0) == (h_lo > 0.0))
        {
          lo = mid;
          h_lo = h_mid;
          if (side == -1)
            h_hi *= 0.5;
          side = -1;
        }
      else
        {
          hi = mid;
          h_hi = h_mid;
          if (side == 1)
            h_lo *= 0.5;
          side = 1;
        }
    }
  return fp;
}

FixedPoint
solve_damped (const ModelInputs &in, const SolverOptions &opt)
{
  const double rate = in.lambda * 1e-6;
  const double keep = opt.damping;
  FixedPoint fp;
  bool may_pin = true;
  for (int it = 1; it <= opt.max_iterations; ++it)
    {
      const auto e = evaluate (in, opt, fp.tau, fp.gamma);
      fp.clamped = fp.clamped || e.backoff.clamped;
      const double load = rate * e.service.d_mac;
      if (!fp.pinned && may_pin && load >= 1.0)
        fp.pinned = true;

      const double tau_next = e.dist.tau ();
      const double gamma_next = fp.pinned ? 0.0 : 1.0 - std::min (1.0, load);
      const double step = std::max (std::abs (tau_next - fp.tau),
                                    std::abs (gamma_next - fp.gamma));
      fp.tau = keep * fp.tau + (1.0 - keep) * tau_next;
      fp.gamma = fp.pinned ? 0.0 : keep * fp.gamma + (1.0 - keep) * gamma_next;
      fp.iterations = it;
      fp.residual = step;

      if (step < opt.tolerance)
        {
          if (fp.pinned && load < 1.0)
            {
              // The pin was premature: even a never-empty queue keeps up.
              fp.pinned = false;
              may_pin = false;
              fp.gamma = 1.0 - load;
              continue;
            }
          fp.converged = true;
          break;
        }
    }
  return fp;
}

} // namespace

ModelSolution
solve (const ModelInputs &inputs, const SolverOptions &options)
{
  inputs.validate ();
  if (!(options.damping >= 0.0 && options.damping < 1.0))
    throw InvalidParameters ("damping must be in [0, 1)");

  const FixedPoint fp = options.method == SolverMethod::damped
                            ? solve_damped (inputs, options)
                            : solve_bracketed (inputs, options);

  const auto e = evaluate (inputs, options, fp.tau,
                           options.method == SolverMethod::damped
                               ? std::optional<double> (fp.gamma)
                               : std::nullopt);
  const double rate = inputs.lambda * 1e-6;
  ModelSolution sol;
  sol.converged = fp.converged;
  sol.iterations = fp.iterations;
  sol.residual = fp.residual;
  sol.tau = e.dist.tau ();
  sol.p = e.slot.p;
  sol.p_tr = e.slot.p_tr;
  sol.p_s = e.slot.p_s;
  sol.t_slot = e.slot.t_slot;
  sol.arrivals = e.arrivals;
  sol.service = e.service;
  sol.dist = e.dist;
  sol.backoff_clamped = fp.clamped || e.backoff.clamped;
  sol.rho = fp.pinned ? 1.0 : std::min (1.0, rate * e.service.d_mac);
  sol.gamma = 1.0 - sol.rho;
  sol.saturated = sol.gamma == 0.0;
  sol.throughput_bps = e.slot.t_slot > 0.0
                           ? e.slot.p_s * e.slot.p_tr * inputs.payload_bits
                                 / e.slot.t_slot * 1e6
                           : 0.0;
  return sol;
}

double
psi (double lambda, int n, double t_s, const PhyMacParams &params,
     const SolverOptions &options)
{
  ModelInputs in;
  in.lambda = lambda;
  in.n = n;
  in.t_s = t_s;
  in.t_c = collision_duration (t_s, params);
  in.params = params;
  const auto sol = solve (in, options);
  if (!sol.converged)
    throw NumericError ("gamma fixed point did not converge", sol.residual);
  return sol.gamma;
}

double
tau_saturation (double p, int cw_min, int max_stage)
{
  if (p < 0.0 || p > 1.0)
    throw InvalidParameters ("p must be in [0, 1]");
  const double w = cw_min;
  const double x = 1.0 - 2.0 * p;
  if (std::abs (x) < 1e-9)
    {
      // Removable singularity at p = 1/2: 1 - (2p)^m ~ m x.
      return 2.0 / (w + 1.0 + 0.5 * w * max_stage);
    }
  return 2.0 * x
         / (x * (w + 1.0) + p * w * (1.0 - std::pow (2.0 * p, max_stage)));
}

SaturationPoint
bianchi_saturation (int n, int cw_min, int max_stage)
{
  // g(tau) = tau - tau_saturation(1 - (1-tau)^(n-1)) is increasing in tau.
  auto g = [&] (double tau) {
    const double p = 1.0 - std::pow (1.0 - tau, n - 1);
    return tau - tau_saturation (p, cw_min, max_stage);
  };
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 200; ++i)
    {
      const double mid = 0.5 * (lo + hi);
      (g (mid) > 0.0 ? hi : lo) = mid;
    }
  SaturationPoint s;
  s.tau = 0.5 * (lo + hi);
  s.p = 1.0 - std::pow (1.0 - s.tau, n - 1);
  return s;
}

} // namespace dcfcac
