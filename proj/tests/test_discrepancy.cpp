#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "isoprice/discrepancy.hpp"
#include "isoprice/errors.hpp"
#include "oracles.hpp"

using namespace isoprice;

TEST_CASE("rmse") {
  const std::vector<double> a{1, 2}, b{0, 2}, w{0.5, 0.5};
  CHECK(rmse(a, a, w) == 0.0);
  CHECK(rmse(a, b, w) == doctest::Approx(std::sqrt(0.5)));
  CHECK_THROWS_AS(rmse(a, std::vector<double>{1}, w), ArgumentError);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 10);
  std::vector<double> x(100), y(100);
  for (int i = 0; i < 100; ++i) {
    x[i] = u(rng);
    y[i] = u(rng);
  }
  const auto wu = uniform_weights(100);
  CHECK(rmse(x, y, wu) == doctest::Approx(oracle::naive_rmse(x, y, wu)).epsilon(1e-12));
}

TEST_CASE("corridor construction") {
  CHECK_NOTHROW(Corridor::make(0.4, 0.7));
  CHECK_THROWS_AS(Corridor::make(0.7, 0.4), ConfigError);
  CHECK_THROWS_AS(Corridor::make(0.0, 0.4), ConfigError);
  CHECK_THROWS_AS(Corridor::make(0.4, 1.0), ConfigError);
}

TEST_CASE("corridor penalties") {
  const std::vector<double> w{1};
  const auto low = Corridor::make(0.5, 0.9);
  CHECK(reg_low(std::vector<double>{10}, std::vector<double>{6}, w, low) == 0.0);
  CHECK(reg_low(std::vector<double>{10}, std::vector<double>{4}, w, low) == doctest::Approx(2.0));
  CHECK(reg_low(std::vector<double>{10}, std::vector<double>{5}, w, low) == 0.0);

  const auto high = Corridor::make(0.3, 0.7);
  CHECK(reg_high(std::vector<double>{10}, std::vector<double>{6}, w, high) == 0.0);
  CHECK(reg_high(std::vector<double>{10}, std::vector<double>{8}, w, high) ==
        doctest::Approx(8 / 0.7 - 10));
  CHECK(reg_high(std::vector<double>{10}, std::vector<double>{0}, w, high) == 0.0);
}

TEST_CASE("a monotone link inside the corridor has zero distance") {
  std::vector<double> pure{1, 2, 3, 4, 5}, commercial;
  for (double p : pure) commercial.push_back(p / 0.5);
  const auto w = uniform_weights(5);
  const std::vector<double> iso(5, 1.0);
  CHECK(total_distance(commercial, pure, w, iso, Corridor::make(0.4, 0.7)) == 0.0);
}

TEST_CASE("zero pure premiums reduce to the rmse about the mean") {
  const std::vector<double> commercial{1, 2, 3, 6};
  const std::vector<double> pure(4, 0.0);
  const auto w = uniform_weights(4);
  const std::vector<double> iso(4, 1.0);
  const auto b = distance_breakdown(commercial, pure, w, iso, Corridor::make(0.4, 0.7));
  CHECK(b.reg_high == 0.0);
  const double mean = 3.0;
  double s = 0;
  for (double c : commercial) s += 0.25 * (c - mean) * (c - mean);
  CHECK(b.rmse == doctest::Approx(std::sqrt(s)));
  for (double f : b.fit.fitted()) CHECK(f == doctest::Approx(mean));
}

TEST_CASE("distance properties on random data") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 20;
    std::vector<double> pure(n), commercial(n);
    for (std::size_t i = 0; i < n; ++i) {
      pure[i] = 1 + 5 * u(rng);
      commercial[i] = pure[i] * (1.3 + 1.5 * u(rng));
    }
    const auto w = uniform_weights(n);
    const std::vector<double> iso(n, 1.0);
    const auto none = distance_breakdown(commercial, pure, w, iso, std::nullopt);
    const auto with = distance_breakdown(commercial, pure, w, iso, Corridor::make(0.4, 0.7));
    CHECK(none.total() >= 0);
    CHECK(with.rmse == doctest::Approx(none.rmse).epsilon(1e-15));
    CHECK(with.total() >= none.total());

    // Widening the corridor never increases the distance.
    const auto wider = total_distance(commercial, pure, w, iso, Corridor::make(0.3, 0.8));
    CHECK(wider <= with.total() + 1e-15);

    // The link term sees pure premiums only through their order.
    std::vector<double> rescaled(n);
    for (std::size_t i = 0; i < n; ++i) rescaled[i] = std::exp(pure[i]) + 3;
    CHECK(total_distance(commercial, rescaled, w, iso, std::nullopt) ==
          doctest::Approx(none.total()).epsilon(1e-12));
  }
}
