#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "isoprice/random.hpp"

namespace isoprice {

// Claim-count families.
struct Poisson {
  double lambda;
};
struct Binomial {
  double trials;  // integral
  double prob;
};
// Mean size * (1 - prob) / prob.
struct NegBinomial {
  double size;
  double prob;
};
using FrequencyFamily = std::variant<Poisson, Binomial, NegBinomial>;

// Claim-severity families.
struct LogNormal {
  double mu;
  double sigma;
};
struct Gamma {
  double shape;
  double rate;
};
using SeverityFamily = std::variant<LogNormal, Gamma>;

enum class FrequencyKind { poisson, binomial, neg_binomial };
enum class SeverityKind { lognormal, gamma };

FrequencyKind parse_frequency_kind(const std::string& name);
SeverityKind parse_severity_kind(const std::string& name);
std::string to_string(FrequencyKind kind);
std::string to_string(SeverityKind kind);

// Throw DomainError when a parameter is outside its family's support.
void validate(const FrequencyFamily& f);
void validate(const SeverityFamily& s);

double mean_claim_count(const FrequencyFamily& f);
double prob_no_claim(const FrequencyFamily& f);
double mean_severity(const SeverityFamily& s);

/// A compound loss model X = U_1 + ... + U_N with a split of the family
/// parameters into unknowns (theta, in declaration order) and pinned values.
class RiskModel {
 public:
  RiskModel(FrequencyKind frequency, SeverityKind severity,
            std::vector<std::string> free_params,
            std::map<std::string, double> fixed_params);

  FrequencyKind frequency_kind() const { return frequency_; }
  SeverityKind severity_kind() const { return severity_; }
  const std::vector<std::string>& free_params() const { return free_; }
  const std::map<std::string, double>& fixed_params() const { return fixed_; }
  std::size_t dimension() const { return free_.size(); }
  std::string name() const;

  // Family parameter names, frequency first.
  std::vector<std::string> parameter_names() const;

  std::pair<FrequencyFamily, SeverityFamily> instantiate(
      std::span<const double> theta) const;

 private:
  FrequencyKind frequency_;
  SeverityKind severity_;
  std::vector<std::string> free_;
  std::map<std::string, double> fixed_;
};

struct CoverageSpec {
  double rate = 1.0;
  double deductible = 0.0;
  std::optional<double> limit;  // empty: unbounded

  static CoverageSpec make(double rate, double deductible,
                           std::optional<double> limit);
  bool unbounded() const { return !limit.has_value(); }
};

// min(max(r*x - d, 0), l)
double coverage_payout(double x, const CoverageSpec& cov);

struct LossSample {
  std::vector<double> draws;
  std::uint64_t seed_tag = 0;
};

LossSample sample_aggregate_losses(const FrequencyFamily& frequency,
                                   const SeverityFamily& severity,
                                   std::size_t count, Stream& stream);

LossSample sample_aggregate_losses(const RiskModel& model,
                                   std::span<const double> theta,
                                   std::size_t count, Stream& stream);

// Monte Carlo estimate of E[g_i(X)] for every coverage from one shared sample.
std::vector<double> pure_premiums(const LossSample& losses,
                                  std::span<const CoverageSpec> covs);

// Same estimator; sorts the sample's nonzero draws in place first.
std::vector<double> pure_premiums_inplace(std::vector<double>& draws,
                                          std::span<const CoverageSpec> covs);

}  // namespace isoprice
