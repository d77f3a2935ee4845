#ifndef DCFCAC_MARKOV_CHAIN_HPP
#define DCFCAC_MARKOV_CHAIN_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace dcfcac {

/// Sparse row-stochastic matrix stored as per-row (column, probability) lists.
class TransitionMatrix
{
public:
  struct Entry
  {
    std::size_t to;
    double prob;
  };

  explicit TransitionMatrix (std::size_t states);

  std::size_t size () const { return m_rows.size (); }

  /// Adds prob to the (from, to) entry. Zero probabilities are skipped.
  void add (std::size_t from, std::size_t to, double prob);

  std::span<const Entry> row (std::size_t from) const;
  double probability (std::size_t from, std::size_t to) const;
  double row_sum (std::size_t from) const;

  /// Throws InternalError if a row sum is off by more than tol or an entry
  /// lies outside [0, 1].
  void check_stochastic (double tol = 1e-9) const;

private:
  std::vector<std::vector<Entry>> m_rows;
};

/// max_j |(pi P)_j - pi_j|
double stationary_residual (const TransitionMatrix &matrix,
                            std::span<const double> pi);

/**
 * Solves pi P = pi with sum(pi) = 1 by a sparse LU factorisation of
 * (P^T - I) with one balance equation replaced by pinning a reference state,
 * then renormalises.
 * Requires a single recurrent class; periodic chains are fine.
 * Throws NumericError if the residual exceeds residual_tol.
 */
std::vector<double> solve_stationary (const TransitionMatrix &matrix,
                                      double residual_tol = 1e-12);

} // namespace dcfcac

#endif
