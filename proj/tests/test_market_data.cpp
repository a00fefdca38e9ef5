#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "isoprice/errors.hpp"
#include "isoprice/market_data.hpp"

using namespace isoprice;

#ifndef ISOPRICE_TEST_DATA
#error "ISOPRICE_TEST_DATA must point at tests/data"
#endif

namespace {

const std::filesystem::path kData = ISOPRICE_TEST_DATA;

std::vector<Quote> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_quotes(in);
}

const char* kHeader = "specie,breed,gender,insurance_carrier,r,l,d,age,x\n";

RiskModel poisson_lognormal() {
  return RiskModel(FrequencyKind::poisson, SeverityKind::lognormal, {"lambda", "mu"},
                   {{"sigma", 1.0}});
}

}  // namespace

TEST_CASE("published rows parse to their listed values") {
  const auto q = load_quotes(kData / "table2_rows.csv");
  REQUIRE(q.size() == 5);
  CHECK(q[0].specie == "dog");
  CHECK(q[0].breed == "australian sheperd");
  CHECK(q[0].gender == "female");
  CHECK(q[0].insurance_carrier == "1");
  CHECK(q[0].age == "2 years");
  CHECK(q[0].coverage.rate == 0.60);
  CHECK(q[0].coverage.limit == 1100.0);
  CHECK(q[0].coverage.deductible == 0.0);
  CHECK(q[0].premium == 221.34);
  CHECK(q[3].coverage.rate == 1.00);
  CHECK(q[3].coverage.limit == 2500.0);
  CHECK(q[3].coverage.deductible == 75.0);
  CHECK(q[3].premium == 739.27);
}

TEST_CASE("parsing edge cases") {
  CHECK(parse(kHeader).empty());

  const auto inf = parse(std::string(kHeader) + "dog,a,f,1,1,inf,0,1 year,10\n" +
                         "dog,a,f,1,1,,0,1 year,10\n" + "dog,a,f,1,1,INF,0,1 year,10\n");
  for (const auto& q : inf) CHECK(q.coverage.unbounded());

  const auto quoted = parse(std::string(kHeader) + "dog,\"mixed, large\",f,\"carrier \"\"A\"\"\",1,100,0,4 months,10\n");
  CHECK(quoted[0].breed == "mixed, large");
  CHECK(quoted[0].insurance_carrier == "carrier \"A\"");

  const auto reordered = parse("x,age,d,l,r,insurance_carrier,gender,breed,specie\n12.5,2 years,5,inf,0.9,3,male,pug,dog\n");
  CHECK(reordered[0].premium == 12.5);
  CHECK(reordered[0].breed == "pug");
  CHECK(reordered[0].coverage.deductible == 5);
}

TEST_CASE("parse errors report the row") {
  auto row_of = [](const std::string& text) -> std::size_t {
    try {
      parse(text);
    } catch (const ParseError& e) {
      return e.row();
    }
    return 0;
  };
  CHECK(row_of(std::string(kHeader) + "dog,a,f,1,0.5,inf,0,1y,10\ndog,a,f,1,1.2,inf,0,1y,10\n") == 3);
  CHECK(row_of(std::string(kHeader) + "dog,a,f,1,abc,inf,0,1y,10\n") == 2);
  CHECK(row_of(std::string(kHeader) + "dog,a,f,1,1,inf,0,1y,-3\n") == 2);
  CHECK(row_of(std::string(kHeader) + "dog,a,f,1,1,inf,0,1y\n") == 2);
  CHECK(row_of("specie,breed,gender,r,l,d,age,x\n") == 1);
  CHECK_THROWS_AS(load_quotes(kData / "does_not_exist.csv"), IoError);
}

TEST_CASE("csv round trip is lossless") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Quote> quotes;
  for (int i = 0; i < 200; ++i) {
    Quote q;
    q.specie = "dog";
    q.breed = i % 2 ? "pug" : "mixed, large";
    q.gender = "female";
    q.insurance_carrier = std::to_string(i % 5);
    q.age = "4 months";
    std::optional<double> l;
    if (i % 4) l = 500 + 3000 * u(rng);
    q.coverage = CoverageSpec::make(0.5 + 0.5 * u(rng), 200 * u(rng), l);
    q.premium = 10 + 1000 * u(rng);
    quotes.push_back(q);
  }
  std::stringstream buf;
  write_quotes(buf, quotes);
  const auto back = parse_quotes(buf);
  REQUIRE(back.size() == quotes.size());
  for (std::size_t i = 0; i < quotes.size(); ++i) {
    CHECK(back[i].breed == quotes[i].breed);
    CHECK(std::abs(back[i].premium - quotes[i].premium) <= 1e-9);
    CHECK(std::abs(back[i].coverage.rate - quotes[i].coverage.rate) <= 1e-9);
    CHECK(std::abs(back[i].coverage.deductible - quotes[i].coverage.deductible) <= 1e-9);
    CHECK(back[i].coverage.limit.has_value() == quotes[i].coverage.limit.has_value());
    if (quotes[i].coverage.limit)
      CHECK(std::abs(*back[i].coverage.limit - *quotes[i].coverage.limit) <= 1e-9);
  }
}

TEST_CASE("risk class grouping") {
  const auto q = load_quotes(kData / "risk_classes.csv");
  CHECK(q.size() == 1080);
  const auto classes = group_risk_classes(q);
  REQUIRE(classes.size() == 12);
  for (const auto& c : classes) {
    CHECK(c.quotes.size() == 90);
    for (const auto& quote : c.quotes) CHECK(class_key(quote) == c.key);
  }
  for (std::size_t k = 1; k < classes.size(); ++k) CHECK(classes[k - 1].key < classes[k].key);

  const auto one = parse(std::string(kHeader) + "dog,a,f,1,1,inf,0,1y,10\n");
  CHECK(group_risk_classes(one).size() == 1);
  const auto carriers = parse(std::string(kHeader) + "dog,a,f,1,1,inf,0,1y,10\ndog,a,f,2,1,inf,0,1y,12\n");
  CHECK(group_risk_classes(carriers).size() == 1);

  const RiskClassKey key{"dog", "french bulldog", "female", "4 months"};
  CHECK(RiskClassKey::parse(key.label()) == key);
  CHECK_THROWS_AS(RiskClassKey::parse("dog|pug"), ConfigError);
}

TEST_CASE("synthetic market with a linear loading stays in the loss-ratio band") {
  SyntheticSpec spec{poisson_lognormal(), {0.3, 6.0}};
  spec.coverages = pet_market_coverages();
  spec.count = 200;
  spec.seed = 3;
  const auto m = generate_synthetic(spec);
  REQUIRE(m.quotes.size() == 200);
  CHECK_FALSE(m.truth.degenerate);
  for (std::size_t i = 0; i < 200; ++i) {
    const double lr = m.truth.pure[i] / m.truth.commercial[i];
    CHECK(lr >= 0.4 - 1e-12);
    CHECK(lr <= 0.7 + 1e-12);
    CHECK(m.quotes[i].premium == m.truth.commercial[i]);
  }
  // Deterministic per seed.
  const auto again = generate_synthetic(spec);
  CHECK(again.truth.commercial == m.truth.commercial);
}

TEST_CASE("constant multiplier keeps commercial premiums ordered like pure premiums") {
  SyntheticSpec spec{poisson_lognormal(), {3.0, 0.0}};
  spec.link = LinearLoading{{2.0, 2.0}, false};
  spec.count = 100;
  const auto m = generate_synthetic(spec);
  for (std::size_t i = 0; i < 100; ++i)
    for (std::size_t j = 0; j < 100; ++j)
      if (m.truth.pure[i] < m.truth.pure[j]) CHECK(m.truth.commercial[i] < m.truth.commercial[j]);
}

TEST_CASE("gompertz loading is bounded by its ceiling") {
  SyntheticSpec spec{poisson_lognormal(), {3.0, 0.0}};
  spec.link = GompertzLoading{};
  spec.count = 100;
  const auto m = generate_synthetic(spec);
  for (double c : m.truth.commercial) {
    CHECK(c > 0);
    CHECK(c <= 10);
  }
}

TEST_CASE("zero claim rate is flagged as degenerate") {
  SyntheticSpec spec{poisson_lognormal(), {0.0, 6.0}};
  spec.count = 10;
  const auto m = generate_synthetic(spec);
  CHECK(m.truth.degenerate);
  for (double p : m.truth.pure) CHECK(p == 0.0);
  for (double c : m.truth.commercial) CHECK(c == 0.0);
}

TEST_CASE("synthetic spec validation") {
  SyntheticSpec spec{poisson_lognormal(), {0.3, 6.0}};
  spec.count = 0;
  CHECK_THROWS(spec.validate());
  spec.count = 5;
  spec.link = LinearLoading{{2.0, 1.0}, false};
  CHECK_THROWS(spec.validate());
  spec.link = LinearLoading{};
  spec.theta = {0.3};
  CHECK_THROWS(spec.validate());
}

TEST_CASE("linear baseline") {
  const std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8};
  const auto fit = linear_baseline_fit(x, y);
  CHECK(fit.slope == doctest::Approx(2));
  CHECK(fit.intercept == doctest::Approx(0).epsilon(1e-12));
  for (double r : fit.residuals) CHECK(std::abs(r) < 1e-12);

  const auto two = linear_baseline_fit(std::vector<double>{1, 3}, std::vector<double>{5, -1});
  for (double r : two.residuals) CHECK(std::abs(r) < 1e-12);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 10);
  std::vector<double> p(500), c(500);
  for (int i = 0; i < 500; ++i) {
    p[i] = u(rng);
    c[i] = 3 + 1.5 * p[i] + u(rng) * std::sin(p[i]);
  }
  const auto r = linear_baseline_fit(p, c).residuals;
  double s0 = 0, s1 = 0;
  for (int i = 0; i < 500; ++i) {
    s0 += r[i];
    s1 += r[i] * p[i];
  }
  CHECK(std::abs(s0) < 1e-9);
  CHECK(std::abs(s1) < 1e-9);
}
