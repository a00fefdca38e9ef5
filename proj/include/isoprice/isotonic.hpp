#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace isoprice {

/// Weighted least-squares non-decreasing fit of commercial on pure premiums.
///
/// Knots are the pure premiums in ascending order; `values[k]` is the fitted
/// premium at `knots[k]` and `order[k]` the input index that knot came from.
/// Together they define the loading function as a right-continuous step
/// function with flat extension beyond both ends.
struct IsotonicFit {
  std::vector<double> knots;
  std::vector<double> values;
  std::vector<double> weights;
  std::vector<std::size_t> order;

  bool empty() const { return knots.empty(); }
  std::size_t size() const { return knots.size(); }

  // Fitted values in the caller's original input order.
  std::vector<double> fitted() const;
};

// Ascending on p; ties broken by ascending tiebreak, then by index.
std::vector<std::size_t> sort_permutation(std::span<const double> p,
                                          std::span<const double> tiebreak);

// Pool-adjacent-violators. Points with equal x are pooled into one block
// before fitting, so they always share a fitted value.
IsotonicFit pava_fit(std::span<const double> x, std::span<const double> y,
                     std::span<const double> w);

// Same solver on data already ordered by x; returns fitted values in that
// order. `tied[k]` marks x[k] == x[k-1].
void pava_sorted(std::span<const double> y, std::span<const double> w,
                 std::span<const bool> tied, std::span<double> fitted);

double loading_apply(const IsotonicFit& fit, double p);

}  // namespace isoprice
