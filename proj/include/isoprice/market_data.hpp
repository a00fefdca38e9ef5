#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "isoprice/abc_engine.hpp"
#include "isoprice/risk_models.hpp"

namespace isoprice {

struct Quote {
  std::string specie;
  std::string breed;
  std::string gender;
  std::string insurance_carrier;
  std::string age;  // verbatim, e.g. "4 months"
  CoverageSpec coverage;
  double premium = 0.0;
  double iso_weight = 1.0;
  std::optional<double> rmse_weight;  // empty: 1/n within the fitted set
};

// Columns, in the order they are written.
inline constexpr const char* kQuoteColumns[] = {
    "specie", "breed", "gender", "insurance_carrier", "r", "l", "d", "age", "x"};

std::vector<Quote> parse_quotes(std::istream& in);
std::vector<Quote> load_quotes(const std::filesystem::path& path);
void write_quotes(std::ostream& out, std::span<const Quote> quotes);
void save_quotes(const std::filesystem::path& path, std::span<const Quote> quotes);

struct RiskClassKey {
  std::string specie;
  std::string breed;
  std::string gender;
  std::string age;

  auto operator<=>(const RiskClassKey&) const = default;
  // "specie|breed|gender|age"
  std::string label() const;
  static RiskClassKey parse(const std::string& label);
};

struct RiskClass {
  RiskClassKey key;
  std::vector<Quote> quotes;
};

RiskClassKey class_key(const Quote& q);

// Ordered by key; carrier is not part of the key.
std::vector<RiskClass> group_risk_classes(std::span<const Quote> quotes);

PricingProblem make_problem(std::span<const Quote> quotes,
                            std::optional<Corridor> corridor);

// --- synthetic markets -----------------------------------------------------

struct Range {
  double lo;
  double hi;
};

// r ~ U[rate], d ~ U[deductible], l ~ U[limit] or unbounded.
struct UniformCoverages {
  Range rate{0.5, 1.0};
  Range deductible{0.5, 6.0};
  std::optional<Range> limit;
};

// Each component drawn independently from its list; an empty optional in
// `limits` stands for an unbounded limit.
struct ChoiceCoverages {
  std::vector<double> rates;
  std::vector<double> deductibles;
  std::vector<std::optional<double>> limits;
};

// Drawn with replacement from `pool`, or taken cyclically when !resample.
struct ListCoverages {
  std::vector<CoverageSpec> pool;
  bool resample = true;
};

using CoverageSampler = std::variant<UniformCoverages, ChoiceCoverages, ListCoverages>;

// Coverage grid modelled on the published pet-insurance quote rows.
ChoiceCoverages pet_market_coverages();

// commercial = m * pure, m ~ U[lo, hi]; with one_plus_eta, m = 1 + U[lo, hi].
struct LinearLoading {
  Range multiplier{1.0 / 0.7, 1.0 / 0.4};
  bool one_plus_eta = false;
};

// commercial = a * exp(-b * exp(-c * pure)), a ~ U[a], b ~ U[b].
struct GompertzLoading {
  Range a{5.0, 10.0};
  Range b{2.0, 6.0};
  double c = 2.0;
};

using LoadingLink = std::variant<LinearLoading, GompertzLoading>;

struct SyntheticSpec {
  RiskModel model;
  std::vector<double> theta;
  CoverageSampler coverages = UniformCoverages{};
  LoadingLink link = LinearLoading{};
  std::size_t count = 100;
  std::uint64_t seed = 1;
  std::size_t oracle_replications = 100'000;

  void validate() const;
};

struct GroundTruth {
  std::string model;
  std::vector<std::string> free_params;
  std::vector<double> theta;
  std::uint64_t seed = 0;
  std::size_t oracle_replications = 0;
  std::vector<double> pure;
  std::vector<double> commercial;
  // Linear: one multiplier per quote. Gompertz: a and b per quote.
  std::vector<double> multiplier;
  std::vector<double> gompertz_a;
  std::vector<double> gompertz_b;
  bool degenerate = false;  // some commercial premium is not positive
};

struct SyntheticMarket {
  std::vector<Quote> quotes;
  GroundTruth truth;
};

SyntheticMarket generate_synthetic(const SyntheticSpec& spec);

nlohmann::json to_json(const GroundTruth& truth);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> residuals;
};

// Ordinary least squares of commercial on pure premiums.
LinearFit linear_baseline_fit(std::span<const double> pure,
                              std::span<const double> commercial);

}  // namespace isoprice
