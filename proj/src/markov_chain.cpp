#include "dcfcac/markov_chain.hpp"

#include "dcfcac/error.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace dcfcac {

TransitionMatrix::TransitionMatrix (std::size_t states)
  : m_rows (states)
{
}

void
TransitionMatrix::add (std::size_t from, std::size_t to, double prob)
{
  if (from >= size () || to >= size ())
    throw InternalError ("transition index out of range");
  if (prob == 0.0)
    return;
  auto &row = m_rows[from];
  for (auto &e : row)
    {
      if (e.to == to)
        {
          e.prob += prob;
          return;
        }
    }
  row.push_back ({to, prob});
}

std::span<const TransitionMatrix::Entry>
TransitionMatrix::row (std::size_t from) const
{
  return m_rows.at (from);
}

double
TransitionMatrix::probability (std::size_t from, std::size_t to) const
{
  for (const auto &e : m_rows.at (from))
    if (e.to == to)
      return e.prob;
  return 0.0;
}

double
TransitionMatrix::row_sum (std::size_t from) const
{
  double s = 0.0;
  for (const auto &e : m_rows.at (from))
    s += e.prob;
  return s;
}

void
TransitionMatrix::check_stochastic (double tol) const
{
  for (std::size_t i = 0; i < size (); ++i)
    {
      for (const auto &e : m_rows[i])
        if (e.prob < -tol || e.prob > 1.0 + tol)
          throw InternalError ("transition probability out of range in row "
                               + std::to_string (i));
      const double s = row_sum (i);
      if (std::abs (s - 1.0) > tol)
        throw InternalError ("row " + std::to_string (i) + " sums to "
                             + std::to_string (s));
    }
}

double
stationary_residual (const TransitionMatrix &matrix, std::span<const double> pi)
{
  std::vector<double> next (matrix.size (), 0.0);
  for (std::size_t i = 0; i < matrix.size (); ++i)
    for (const auto &e : matrix.row (i))
      next[e.to] += pi[i] * e.prob;
  double worst = 0.0;
  for (std::size_t j = 0; j < matrix.size (); ++j)
    worst = std::max (worst, std::abs (next[j] - pi[j]));
  return worst;
}

namespace {

using SparseLu
    = Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>;

std::vector<double>
normalised (const Eigen::VectorXd &x, std::size_t n, std::size_t skip,
            double skip_value)
{
  std::vector<double> pi (n);
  double total = 0.0;
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < n; ++i)
    {
      // Round-off can leave transient states at -1e-17.
      pi[i] = i == skip ? skip_value : std::max (0.0, x (row++));
      total += pi[i];
    }
  if (!(total > 0.0) || !std::isfinite (total))
    return {};
  for (auto &v : pi)
    v /= total;
  return pi;
}

// Fixes pi_ref = 1 and drops the balance equation of ref. Sparse, but only
// valid when ref is recurrent; the caller checks the residual.
std::vector<double>
solve_pinned (const TransitionMatrix &matrix, std::size_t ref)
{
  const std::size_t n = matrix.size ();
  auto shift = [ref] (std::size_t i) {
    return static_cast<Eigen::Index> (i < ref ? i : i - 1);
  };
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero (static_cast<Eigen::Index> (n - 1));
  for (std::size_t i = 0; i < n; ++i)
    {
      for (const auto &e : matrix.row (i))
        {
          if (e.to == ref)
            continue;
          if (i == ref)
            rhs (shift (e.to)) -= e.prob;
          else
            triplets.emplace_back (shift (e.to), shift (i), e.prob);
        }
      if (i != ref)
        triplets.emplace_back (shift (i), shift (i), -1.0);
    }
  Eigen::SparseMatrix<double> a (static_cast<Eigen::Index> (n - 1),
                                 static_cast<Eigen::Index> (n - 1));
  a.setFromTriplets (triplets.begin (), triplets.end ());
  a.makeCompressed ();
  SparseLu lu;
  lu.compute (a);
  if (lu.info () != Eigen::Success)
    return {};
  const Eigen::VectorXd x = lu.solve (rhs);
  if (lu.info () != Eigen::Success)
    return {};
  return normalised (x, n, ref, 1.0);
}

// Replaces the first balance equation by sum(pi) = 1. Always well posed
// for a single recurrent class, but the dense row causes heavy fill-in.
std::vector<double>
solve_normalised_row (const TransitionMatrix &matrix)
{
  const auto n = static_cast<Eigen::Index> (matrix.size ());
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < matrix.size (); ++i)
    {
      for (const auto &e : matrix.row (i))
        if (e.to != 0)
          triplets.emplace_back (static_cast<Eigen::Index> (e.to),
                                 static_cast<Eigen::Index> (i), e.prob);
      if (i != 0)
        triplets.emplace_back (static_cast<Eigen::Index> (i),
                               static_cast<Eigen::Index> (i), -1.0);
      triplets.emplace_back (0, static_cast<Eigen::Index> (i), 1.0);
    }
  Eigen::SparseMatrix<double> a (n, n);
  a.setFromTriplets (triplets.begin (), triplets.end ());
  a.makeCompressed ();
  SparseLu lu;
  lu.compute (a);
  if (lu.info () != Eigen::Success)
    return {};
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero (n);
  rhs (0) = 1.0;
  const Eigen::VectorXd x = lu.solve (rhs);
  return normalised (x, matrix.size (), matrix.size (), 0.0);
}

} // namespace

std::vector<double>
solve_stationary (const TransitionMatrix &matrix, double residual_tol)
{
  const std::size_t n = matrix.size ();
  if (n == 0)
    throw InvalidParameters ("empty transition matrix");
  if (n == 1)
    return {1.0};

  double best = std::numeric_limits<double>::infinity ();
  for (std::size_t ref : {n - 1, std::size_t{0}})
    {
      auto pi = solve_pinned (matrix, ref);
      if (pi.empty ())
        continue;
      const double r = stationary_residual (matrix, pi);
      if (r <= residual_tol)
        return pi;
      best = std::min (best, r);
    }
  auto pi = solve_normalised_row (matrix);
  if (!pi.empty ())
    {
      const double r = stationary_residual (matrix, pi);
      if (r <= residual_tol)
        return pi;
      best = std::min (best, r);
    }
  throw NumericError ("stationary solve did not meet tolerance", best);
}

} // namespace dcfcac
