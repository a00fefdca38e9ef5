#include "isoprice/isotonic.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include "isoprice/errors.hpp"

namespace isoprice {

std::vector<double> IsotonicFit::fitted() const {
  std::vector<double> out(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) out[order[k]] = values[k];
  return out;
}

std::vector<std::size_t> sort_permutation(std::span<const double> p,
                                          std::span<const double> tiebreak) {
  if (!tiebreak.empty() && tiebreak.size() != p.size())
    throw ArgumentError("sort_permutation: length mismatch");
  std::vector<std::size_t> idx(p.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (p[a] != p[b]) return p[a] < p[b];
    if (!tiebreak.empty() && tiebreak[a] != tiebreak[b])
      return tiebreak[a] < tiebreak[b];
    return a < b;
  });
  return idx;
}

void pava_sorted(std::span<const double> y, std::span<const double> w,
                 std::span<const bool> tied, std::span<double> fitted) {
  const std::size_t n = y.size();
  struct Block {
    double mean;
    double weight;
    std::size_t end;  // one past the last member
  };
  std::vector<Block> stack;
  stack.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Equal abscissae must share a value: pool each tie group before merging.
    double sw = w[i], swy = w[i] * y[i];
    while (i + 1 < n && tied[i + 1]) {
      ++i;
      sw += w[i];
      swy += w[i] * y[i];
    }
    stack.push_back(Block{swy / sw, sw, i + 1});
    while (stack.size() > 1 &&
           stack[stack.size() - 2].mean >= stack.back().mean) {
      Block top = stack.back();
      stack.pop_back();
      Block& prev = stack.back();
      const double tw = prev.weight + top.weight;
      prev.mean = (prev.mean * prev.weight + top.mean * top.weight) / tw;
      prev.weight = tw;
      prev.end = top.end;
    }
  }
  std::size_t start = 0;
  for (const auto& b : stack) {
    std::fill(fitted.begin() + static_cast<std::ptrdiff_t>(start),
              fitted.begin() + static_cast<std::ptrdiff_t>(b.end), b.mean);
    start = b.end;
  }
}

IsotonicFit pava_fit(std::span<const double> x, std::span<const double> y,
                     std::span<const double> w) {
  const std::size_t n = x.size();
  if (n == 0) throw ArgumentError("pava_fit: empty input");
  if (y.size() != n || w.size() != n)
    throw ArgumentError("pava_fit: length mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(w[i] > 0) || !std::isfinite(w[i]))
      throw ArgumentError("pava_fit: weight " + std::to_string(i) +
                          " is not positive");
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw ArgumentError("pava_fit: non-finite input at " + std::to_string(i));
  }

  IsotonicFit fit;
  fit.order = sort_permutation(x, y);
  fit.knots.resize(n);
  fit.weights.resize(n);
  std::vector<double> ys(n);
  auto tied = std::make_unique<bool[]>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto i = fit.order[k];
    fit.knots[k] = x[i];
    fit.weights[k] = w[i];
    ys[k] = y[i];
    tied[k] = k > 0 && fit.knots[k] == fit.knots[k - 1];
  }
  fit.values.resize(n);
  pava_sorted(ys, fit.weights, std::span<const bool>(tied.get(), n), fit.values);
  return fit;
}

double loading_apply(const IsotonicFit& fit, double p) {
  if (fit.empty()) throw StateError("loading_apply: empty isotonic fit");
  const auto it = std::upper_bound(fit.knots.begin(), fit.knots.end(), p);
  if (it == fit.knots.begin()) return fit.values.front();
  return fit.values[static_cast<std::size_t>(it - fit.knots.begin()) - 1];
}

}  // namespace isoprice
