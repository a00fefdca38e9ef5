#pragma once

#include <optional>
#include <span>
#include <vector>

#include "isoprice/isotonic.hpp"

namespace isoprice {

// Admissible band for the implied loss ratio pure / commercial.
struct Corridor {
  double low;
  double high;

  static Corridor make(double low, double high);
};

// Per-quote weights summing to one.
std::vector<double> uniform_weights(std::size_t n);

double rmse(std::span<const double> observed, std::span<const double> fitted,
            std::span<const double> w);

// sqrt(sum w_i * max(commercial_i - pure_i / low, 0)^2)
double reg_low(std::span<const double> commercial, std::span<const double> pure,
               std::span<const double> w, const Corridor& corridor);

// sqrt(sum w_i * max(pure_i / high - commercial_i, 0)^2)
double reg_high(std::span<const double> commercial, std::span<const double> pure,
                std::span<const double> w, const Corridor& corridor);

struct DistanceBreakdown {
  double rmse = 0.0;
  double reg_low = 0.0;
  double reg_high = 0.0;
  IsotonicFit fit;

  double total() const { return rmse + reg_low + reg_high; }
};

/// Distance between observed commercial premiums and the isotonic link fitted
/// on candidate pure premiums. Without a corridor only the RMSE term remains.
/// The corridor terms read the raw pure premiums, not the fitted link.
DistanceBreakdown distance_breakdown(std::span<const double> commercial,
                                     std::span<const double> pure,
                                     std::span<const double> rmse_weights,
                                     std::span<const double> iso_weights,
                                     const std::optional<Corridor>& corridor);

double total_distance(std::span<const double> commercial,
                      std::span<const double> pure,
                      std::span<const double> rmse_weights,
                      std::span<const double> iso_weights,
                      const std::optional<Corridor>& corridor);

}  // namespace isoprice
