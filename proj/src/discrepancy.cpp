#include "isoprice/discrepancy.hpp"

#include <algorithm>
#include <cmath>

#include "isoprice/errors.hpp"

namespace isoprice {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b,
                   std::span<const double> w, const char* who) {
  if (a.size() != b.size() || a.size() != w.size())
    throw ArgumentError(std::string(who) + ": length mismatch");
}

}  // namespace

Corridor Corridor::make(double low, double high) {
  if (!(low > 0.0 && low < high && high < 1.0))
    throw ConfigError("loss ratio corridor must satisfy 0 < low < high < 1");
  return Corridor{low, high};
}

std::vector<double> uniform_weights(std::size_t n) {
  return std::vector<double>(n, n ? 1.0 / static_cast<double>(n) : 0.0);
}

double rmse(std::span<const double> observed, std::span<const double> fitted,
            std::span<const double> w) {
  check_lengths(observed, fitted, w, "rmse");
  double s = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = observed[i] - fitted[i];
    s += w[i] * e * e;
  }
  return std::sqrt(s);
}

double reg_low(std::span<const double> commercial, std::span<const double> pure,
               std::span<const double> w, const Corridor& corridor) {
  check_lengths(commercial, pure, w, "reg_low");
  double s = 0.0;
  for (std::size_t i = 0; i < commercial.size(); ++i) {
    const double e = std::max(commercial[i] - pure[i] / corridor.low, 0.0);
    s += w[i] * e * e;
  }
  return std::sqrt(s);
}

double reg_high(std::span<const double> commercial, std::span<const double> pure,
                std::span<const double> w, const Corridor& corridor) {
  check_lengths(commercial, pure, w, "reg_high");
  double s = 0.0;
  for (std::size_t i = 0; i < commercial.size(); ++i) {
    const double e = std::max(pure[i] / corridor.high - commercial[i], 0.0);
    s += w[i] * e * e;
  }
  return std::sqrt(s);
}

DistanceBreakdown distance_breakdown(std::span<const double> commercial,
                                     std::span<const double> pure,
                                     std::span<const double> rmse_weights,
                                     std::span<const double> iso_weights,
                                     const std::optional<Corridor>& corridor) {
  check_lengths(commercial, pure, rmse_weights, "total_distance");
  if (iso_weights.size() != commercial.size())
    throw ArgumentError("total_distance: length mismatch");
  DistanceBreakdown out;
  out.fit = pava_fit(pure, commercial, iso_weights);
  const auto fitted = out.fit.fitted();
  out.rmse = rmse(commercial, fitted, rmse_weights);
  if (corridor) {
    out.reg_low = reg_low(commercial, pure, rmse_weights, *corridor);
    out.reg_high = reg_high(commercial, pure, rmse_weights, *corridor);
  }
  return out;
}

double total_distance(std::span<const double> commercial,
                      std::span<const double> pure,
                      std::span<const double> rmse_weights,
                      std::span<const double> iso_weights,
                      const std::optional<Corridor>& corridor) {
  return distance_breakdown(commercial, pure, rmse_weights, iso_weights,
                            corridor)
      .total();
}

}  // namespace isoprice
