#include "chain_walker.hpp"

#include "dcfcac/dtmc_model.hpp"
#include "dcfcac/error.hpp"

#include <doctest.h>

#include <cmath>

using namespace dcfcac;

namespace {

ModelInputs
inputs_for (double lambda, int n, double payload_bits = 4000.0,
            double rate = 11e6)
{
  ModelInputs in;
  in.params = phy_preset ("dsss-11mbps");
  const auto fd = FrameDurations::for_frame (payload_bits, rate, in.params);
  in.lambda = lambda;
  in.n = n;
  in.t_s = fd.t_s;
  in.t_c = fd.t_c;
  in.payload_bits = payload_bits;
  return in;
}

// Bianchi's closed form written out independently of the library.
double
bianchi_tau (double p, int w, int m)
{
  return 2.0 * (1.0 - 2.0 * p)
         / ((1.0 - 2.0 * p) * (w + 1) + p * w * (1.0 - std::pow (2.0 * p, m)));
}

} // namespace

TEST_CASE ("saturation transmission probability oracles")
{
  // p = 1/4: 2 (1/2) / ((1/2) 33 + (1/4) 32 (1 - 1/32)) = 1 / 24.25
  CHECK (tau_saturation (0.25, 32, 5) == doctest::Approx (1.0 / 24.25).epsilon (1e-12));
  CHECK (tau_saturation (0.0, 32, 5) == doctest::Approx (2.0 / 33.0).epsilon (1e-12));
  CHECK (tau_saturation (0.0, 16, 3) == doctest::Approx (2.0 / 17.0).epsilon (1e-12));
  // Removable singularity at p = 1/2.
  CHECK (tau_saturation (0.5, 32, 5)
         == doctest::Approx (2.0 / (33.0 + 5.0 * 32.0 / 2.0)).epsilon (1e-9));
  CHECK (tau_saturation (0.5 - 1e-9, 32, 5)
         == doctest::Approx (tau_saturation (0.5, 32, 5)).epsilon (1e-6));
  for (double p = 0.01; p < 0.99; p += 0.07)
    if (std::abs (p - 0.5) > 1e-6)
      CHECK (tau_saturation (p, 32, 5) == doctest::Approx (bianchi_tau (p, 32, 5)).epsilon (1e-12));
  CHECK_THROWS_AS (tau_saturation (-0.1, 32, 5), InvalidParameters);
}

TEST_CASE ("slot probabilities for three stations")
{
  const auto s = slot_probabilities (0.1, 3, 900.0, 600.0, 20.0);
  CHECK (s.p == doctest::Approx (0.19));
  CHECK (s.p_tr == doctest::Approx (0.271));
  CHECK (s.p_s == doctest::Approx (3 * 0.1 * 0.81 / 0.271));
  const double t = 0.729 * 20.0 + 0.243 * 900.0 + (0.271 - 0.243) * 600.0;
  CHECK (s.t_slot == doctest::Approx (t));
}

TEST_CASE ("arrival probabilities are Poisson slot hits")
{
  const double lambda = 50.0; // packet/s
  const auto a = arrival_probabilities (lambda, 900.0, 600.0, 20.0, 0.3, 0.8);
  CHECK (a.p_as == doctest::Approx (1.0 - std::exp (-50e-6 * 900.0)));
  CHECK (a.p_ac == doctest::Approx (1.0 - std::exp (-50e-6 * 600.0)));
  CHECK (a.p_ai == doctest::Approx (1.0 - std::exp (-50e-6 * 20.0)));
  CHECK (a.p_a == doctest::Approx (0.3 * 0.8 * a.p_as + 0.3 * 0.2 * a.p_ac + 0.7 * a.p_ai));
  const auto zero = arrival_probabilities (0.0, 900.0, 600.0, 20.0, 0.3, 0.8);
  CHECK (zero.p_a == 0.0);
}

TEST_CASE ("mean backoff time by hand")
{
  // W = 32, m = 5, p = 0.2, T_slot = 50:
  // 0.8 * 32 * 50 / 2 = 640; bracket = 3.3312 - 1.2212 = 2.11.
  const auto b = mean_backoff_time (0.2, 32, 5, 50.0);
  CHECK (b.value == doctest::Approx (1350.4));
  CHECK_FALSE (b.clamped);
  // p = 0: one post-backoff of W/2 slots.
  CHECK (mean_backoff_time (0.0, 32, 5, 50.0).value == doctest::Approx (800.0));
  const auto edge = mean_backoff_time (0.5, 32, 5, 50.0);
  CHECK (edge.clamped);
  CHECK (std::isfinite (edge.value));
  CHECK (mean_backoff_time (0.7, 32, 5, 50.0).clamped);
}

TEST_CASE ("transition rows are stochastic across inputs")
{
  for (double gamma : {0.0, 0.3, 1.0})
    for (double lambda : {0.0, 5.0, 300.0})
      for (double tau : {0.001, 0.05, 0.3})
        for (auto draw : {PostBackoffDraw::uniform_from_zero, PostBackoffDraw::uniform_from_one})
          {
            const auto in = inputs_for (lambda, 12);
            const auto s = slot_probabilities (tau, in.n, in.t_s, in.t_c, in.params.slot_us);
            const auto a = arrival_probabilities (lambda, in.t_s, in.t_c, in.params.slot_us,
                                                  s.p_tr, s.p_s);
            const auto mat = build_transition_matrix (in, s, a, gamma, draw);
            for (std::size_t r = 0; r < mat.size (); ++r)
              CHECK (mat.row_sum (r) == doctest::Approx (1.0).epsilon (1e-12));
          }
}

TEST_CASE ("frozen chain matches a Monte-Carlo walk")
{
  walker::FrozenChain c;
  c.lambda_per_us = walker::lambda_for_pa (c, 0.3);
  REQUIRE (c.p_a () == doctest::Approx (0.3).epsilon (1e-9));

  ModelInputs in;
  in.params = phy_preset ("dsss-11mbps");
  in.params.cw_min = c.w;
  in.params.max_stage = c.m;
  in.lambda = c.lambda_per_us * 1e6;
  in.n = 2;
  in.t_s = c.t_s;
  in.t_c = c.t_c;
  SlotProbabilities s;
  s.p = c.p;
  s.p_tr = c.p_tr;
  s.p_s = c.p_s;
  s.t_slot = 100.0;
  const auto a = arrival_probabilities (in.lambda, c.t_s, c.t_c, c.slot, c.p_tr, c.p_s);
  const auto mat = build_transition_matrix (in, s, a, c.gamma);
  const auto dist = stationary_distribution (mat, ChainShape (in.params));

  const auto freq = walker::walk (c, 2'000'000, 11);
  double tv = std::abs (freq[c.idle ()] - dist.b_idle);
  for (int i = 0; i <= c.m; ++i)
    for (int k = 0; k < c.width (i); ++k)
      tv += std::abs (freq[c.offset (i) + k] - dist.b[i][k]);
  tv *= 0.5;
  CHECK (tv < 0.01);
  CHECK (dist.total () == doctest::Approx (1.0).epsilon (1e-12));
}

TEST_CASE ("never-empty queue reduces the chain to the saturated one")
{
  // With gamma = 0 and a frozen p the chain's tau is Bianchi's closed form,
  // whatever the other inputs.
  for (double p : {0.0, 0.1, 0.35, 0.6})
    {
      const auto in = inputs_for (1000.0, 10);
      SlotProbabilities s;
      s.p = p;
      s.p_tr = 0.5;
      s.p_s = 0.7;
      s.t_slot = 300.0;
      const auto a = arrival_probabilities (in.lambda, in.t_s, in.t_c, 20.0, s.p_tr, s.p_s);
      const auto mat = build_transition_matrix (in, s, a, 0.0);
      const auto dist = stationary_distribution (mat, ChainShape (in.params));
      CHECK (dist.tau () == doctest::Approx (bianchi_tau (p, 32, 5)).epsilon (1e-10));
      CHECK (dist.b_idle == doctest::Approx (0.0).epsilon (1e-12));
    }
}

TEST_CASE ("printed post-backoff variant gives 2/(W+2) without collisions")
{
  const auto in = inputs_for (1000.0, 10);
  SlotProbabilities s;
  s.p = 0.0;
  s.p_tr = 0.5;
  s.p_s = 1.0;
  s.t_slot = 300.0;
  const auto a = arrival_probabilities (in.lambda, in.t_s, in.t_c, 20.0, s.p_tr, s.p_s);
  const auto mat = build_transition_matrix (in, s, a, 0.0, PostBackoffDraw::uniform_from_one);
  const auto dist = stationary_distribution (mat, ChainShape (in.params));
  CHECK (dist.tau () == doctest::Approx (2.0 / 34.0).epsilon (1e-10));
}

TEST_CASE ("heavy load converges to the saturated coupled system")
{
  for (int n : {5, 10, 20})
    {
      const auto sol = solve (inputs_for (1e7, n));
      REQUIRE (sol.converged);
      CHECK (sol.saturated);
      CHECK (sol.gamma == 0.0);
      CHECK (std::abs (sol.tau - tau_saturation (sol.p, 32, 5)) < 1e-6);
      CHECK (std::abs (sol.p - (1.0 - std::pow (1.0 - sol.tau, n - 1))) < 1e-6);
      const auto b = bianchi_saturation (n, 32, 5);
      CHECK (sol.tau == doctest::Approx (b.tau).epsilon (1e-5));
    }
}

TEST_CASE ("no traffic leaves the queue empty")
{
  const auto sol = solve (inputs_for (0.0, 10));
  CHECK (sol.converged);
  CHECK (sol.gamma == 1.0);
  CHECK (sol.tau == doctest::Approx (0.0).epsilon (1e-12));
  CHECK_FALSE (sol.saturated);
}

TEST_CASE ("gamma is non-increasing in the arrival rate")
{
  double prev = 1.0;
  for (double lambda = 5.0; lambda <= 200.0; lambda += 5.0)
    {
      const auto sol = solve (inputs_for (lambda, 10));
      REQUIRE (sol.converged);
      CHECK (sol.gamma >= 0.0);
      CHECK (sol.gamma <= 1.0);
      CHECK (sol.gamma <= prev + 1e-9);
      prev = sol.gamma;
    }
  CHECK (prev == 0.0);
}

TEST_CASE ("gamma is non-increasing in the number of stations")
{
  double prev = 1.0;
  for (int n = 2; n <= 50; n += 4)
    {
      const double g = psi (26.25, n, inputs_for (0, 1).t_s, phy_preset ("dsss-11mbps"));
      CHECK (g <= prev + 1e-9);
      prev = g;
    }
}

TEST_CASE ("solution satisfies its own consistency conditions")
{
  const auto in = inputs_for (40.0, 10);
  const auto sol = solve (in);
  REQUIRE (sol.converged);
  REQUIRE (sol.gamma > 0.0);
  // gamma = 1 - lambda d_mac
  CHECK (sol.gamma == doctest::Approx (1.0 - in.lambda * 1e-6 * sol.service.d_mac).epsilon (1e-9));
  // tau is the chain's transmission probability at the solved p
  const auto s = slot_probabilities (sol.tau, in.n, in.t_s, in.t_c, in.params.slot_us);
  CHECK (s.p == doctest::Approx (sol.p).epsilon (1e-9));
  CHECK (std::abs (sol.tau - sol.dist.tau ()) < 1e-9);
  // the four service cases cover everything
  const auto &d = sol.service;
  CHECK (d.p_b2b + d.p_nob2b_idle + d.p_nob2b_tx + d.p_nob2b_cca
         == doctest::Approx (1.0).epsilon (1e-12));
  // carried traffic equals offered traffic below saturation, to first order
  CHECK (sol.throughput_bps == doctest::Approx (in.n * in.lambda * in.payload_bits).epsilon (0.02));
}

TEST_CASE ("consistent gamma solves the affine service-time equation")
{
  const auto in = inputs_for (60.0, 12);
  const auto s = slot_probabilities (0.004, in.n, in.t_s, in.t_c, in.params.slot_us);
  const auto a = arrival_probabilities (in.lambda, in.t_s, in.t_c, in.params.slot_us, s.p_tr, s.p_s);
  const double bo = mean_backoff_time (s.p, 32, 5, s.t_slot).value;
  const double g = consistent_gamma (in, s, a, bo);
  const auto svc = service_time (in, s, a, g, bo);
  CHECK (g == doctest::Approx (1.0 - std::min (1.0, in.lambda * 1e-6 * svc.d_mac)).epsilon (1e-12));

  auto heavy = in;
  heavy.lambda = 5000.0;
  const auto a2 = arrival_probabilities (heavy.lambda, in.t_s, in.t_c, in.params.slot_us, s.p_tr, s.p_s);
  CHECK (consistent_gamma (heavy, s, a2, bo) == 0.0);
}

TEST_CASE ("service time cases")
{
  const auto in = inputs_for (30.0, 10);
  const auto s = slot_probabilities (0.002, in.n, in.t_s, in.t_c, in.params.slot_us);
  const auto a = arrival_probabilities (in.lambda, in.t_s, in.t_c, in.params.slot_us, s.p_tr, s.p_s);
  const double bo = 700.0;
  const auto d = service_time (in, s, a, 0.6, bo);
  CHECK (d.d_b2b == doctest::Approx (in.t_s + in.t_c * s.p / (1.0 - s.p) + bo));
  CHECK (d.d_nob2b_idle == doctest::Approx (d.d_b2b - 32.0 * s.t_slot / 2.0));
  CHECK (d.d_nob2b_tx
         == doctest::Approx (d.d_nob2b_idle + (s.p_s * in.t_s + (1.0 - s.p_s) * in.t_c) / 2.0));
  CHECK (d.d_nob2b_cca == doctest::Approx (d.d_b2b + s.p_s * in.t_s + (1.0 - s.p_s) * in.t_c));
  CHECK (d.p_b2b == doctest::Approx (0.4));
  const double mix = d.p_b2b * d.d_b2b + d.p_nob2b_idle * d.d_nob2b_idle
                     + d.p_nob2b_tx * d.d_nob2b_tx + d.p_nob2b_cca * d.d_nob2b_cca;
  CHECK (d.d_mac == doctest::Approx (mix));
}

TEST_CASE ("bracketed and damped solvers agree away from the fold")
{
  SolverOptions damped;
  damped.method = SolverMethod::damped;
  for (double lambda : {10.0, 40.0, 70.0})
    {
      const auto in = inputs_for (lambda, 10);
      const auto a = solve (in);
      const auto b = solve (in, damped);
      REQUIRE (a.converged);
      REQUIRE (b.converged);
      CHECK (a.gamma == doctest::Approx (b.gamma).epsilon (1e-5));
      CHECK (a.tau == doctest::Approx (b.tau).epsilon (1e-5));
    }
}

TEST_CASE ("psi throws when the fixed point is not reached")
{
  SolverOptions opts;
  opts.max_iterations = 2;
  const auto in = inputs_for (80.0, 10);
  CHECK_THROWS_AS (psi (80.0, 10, in.t_s, in.params, opts), NumericError);
  CHECK_FALSE (solve (in, opts).converged);
}

TEST_CASE ("invalid model inputs")
{
  auto in = inputs_for (10.0, 10);
  in.n = 0;
  CHECK_THROWS_AS (solve (in), InvalidParameters);
  in = inputs_for (10.0, 10);
  in.t_c = in.t_s + 1.0;
  CHECK_THROWS_AS (solve (in), InvalidParameters);
  in = inputs_for (-1.0, 10);
  CHECK_THROWS_AS (solve (in), InvalidParameters);
  SolverOptions bad;
  bad.damping = 1.0;
  CHECK_THROWS_AS (solve (inputs_for (10.0, 10), bad), InvalidParameters);
}

TEST_CASE ("chain layout")
{
  const ChainShape shape (32, 5);
  CHECK (shape.index (0, 0) == 0);
  CHECK (shape.index (1, 0) == 32);
  CHECK (shape.index (2, 5) == 32 + 64 + 5);
  CHECK (shape.idle () == 32u * 63u);
  CHECK (shape.size () == 32u * 63u + 1u);
}
