#include "isoprice/risk_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "isoprice/errors.hpp"

namespace isoprice {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool finite(double v) { return std::isfinite(v); }

std::vector<std::string> frequency_params(FrequencyKind k) {
  switch (k) {
    case FrequencyKind::poisson: return {"lambda"};
    case FrequencyKind::binomial: return {"trials", "prob"};
    case FrequencyKind::neg_binomial: return {"size", "prob"};
  }
  return {};
}

std::vector<std::string> severity_params(SeverityKind k) {
  switch (k) {
    case SeverityKind::lognormal: return {"mu", "sigma"};
    case SeverityKind::gamma: return {"alpha", "beta"};
  }
  return {};
}

}  // namespace

FrequencyKind parse_frequency_kind(const std::string& name) {
  if (name == "poisson") return FrequencyKind::poisson;
  if (name == "binomial") return FrequencyKind::binomial;
  if (name == "negbinomial" || name == "neg_binomial" ||
      name == "negative_binomial")
    return FrequencyKind::neg_binomial;
  throw ConfigError("unknown frequency family '" + name + "'");
}

SeverityKind parse_severity_kind(const std::string& name) {
  if (name == "lognormal") return SeverityKind::lognormal;
  if (name == "gamma") return SeverityKind::gamma;
  throw ConfigError("unknown severity family '" + name + "'");
}

std::string to_string(FrequencyKind kind) {
  switch (kind) {
    case FrequencyKind::poisson: return "poisson";
    case FrequencyKind::binomial: return "binomial";
    case FrequencyKind::neg_binomial: return "negbinomial";
  }
  return "?";
}

std::string to_string(SeverityKind kind) {
  switch (kind) {
    case SeverityKind::lognormal: return "lognormal";
    case SeverityKind::gamma: return "gamma";
  }
  return "?";
}

void validate(const FrequencyFamily& f) {
  std::visit(
      overloaded{
          [](const Poisson& p) {
            if (!finite(p.lambda) || p.lambda < 0)
              throw DomainError("poisson lambda must be >= 0");
          },
          [](const Binomial& b) {
            if (!finite(b.trials) || b.trials < 0 ||
                b.trials != std::floor(b.trials))
              throw DomainError("binomial trials must be a nonnegative integer");
            if (!finite(b.prob) || b.prob < 0 || b.prob > 1)
              throw DomainError("binomial prob must lie in [0, 1]");
          },
          [](const NegBinomial& nb) {
            if (!finite(nb.size) || nb.size <= 0)
              throw DomainError("negative binomial size must be > 0");
            if (!finite(nb.prob) || nb.prob <= 0 || nb.prob > 1)
              throw DomainError("negative binomial prob must lie in (0, 1]");
          }},
      f);
}

void validate(const SeverityFamily& s) {
  std::visit(overloaded{[](const LogNormal& l) {
                          if (!finite(l.mu))
                            throw DomainError("lognormal mu must be finite");
                          if (!finite(l.sigma) || l.sigma <= 0)
                            throw DomainError("lognormal sigma must be > 0");
                        },
                        [](const Gamma& g) {
                          if (!finite(g.shape) || g.shape <= 0)
                            throw DomainError("gamma alpha must be > 0");
                          if (!finite(g.rate) || g.rate <= 0)
                            throw DomainError("gamma beta must be > 0");
                        }},
             s);
}

double mean_claim_count(const FrequencyFamily& f) {
  return std::visit(
      overloaded{[](const Poisson& p) { return p.lambda; },
                 [](const Binomial& b) { return b.trials * b.prob; },
                 [](const NegBinomial& nb) {
                   return nb.size * (1.0 - nb.prob) / nb.prob;
                 }},
      f);
}

double prob_no_claim(const FrequencyFamily& f) {
  return std::visit(
      overloaded{[](const Poisson& p) { return std::exp(-p.lambda); },
                 [](const Binomial& b) { return std::pow(1.0 - b.prob, b.trials); },
                 [](const NegBinomial& nb) { return std::pow(nb.prob, nb.size); }},
      f);
}

double mean_severity(const SeverityFamily& s) {
  return std::visit(
      overloaded{[](const LogNormal& l) {
                   return std::exp(l.mu + 0.5 * l.sigma * l.sigma);
                 },
                 [](const Gamma& g) { return g.shape / g.rate; }},
      s);
}

RiskModel::RiskModel(FrequencyKind frequency, SeverityKind severity,
                     std::vector<std::string> free_params,
                     std::map<std::string, double> fixed_params)
    : frequency_(frequency),
      severity_(severity),
      free_(std::move(free_params)),
      fixed_(std::move(fixed_params)) {
  const auto names = parameter_names();
  const std::set<std::string> known(names.begin(), names.end());
  std::set<std::string> seen;
  for (const auto& n : free_) {
    if (!known.count(n))
      throw ConfigError("unknown parameter '" + n + "' for model " + name());
    if (!seen.insert(n).second)
      throw ConfigError("parameter '" + n + "' listed twice");
  }
  for (const auto& [n, v] : fixed_) {
    if (!known.count(n))
      throw ConfigError("unknown parameter '" + n + "' for model " + name());
    if (!seen.insert(n).second)
      throw ConfigError("parameter '" + n + "' is both free and fixed");
  }
  for (const auto& n : names)
    if (!seen.count(n))
      throw ConfigError("parameter '" + n + "' is neither free nor fixed");
}

std::string RiskModel::name() const {
  return to_string(frequency_) + "-" + to_string(severity_);
}

std::vector<std::string> RiskModel::parameter_names() const {
  auto names = frequency_params(frequency_);
  auto sev = severity_params(severity_);
  names.insert(names.end(), sev.begin(), sev.end());
  return names;
}

std::pair<FrequencyFamily, SeverityFamily> RiskModel::instantiate(
    std::span<const double> theta) const {
  if (theta.size() != free_.size())
    throw ArgumentError("theta has dimension " + std::to_string(theta.size()) +
                        ", model expects " + std::to_string(free_.size()));
  auto value = [&](const std::string& n) {
    for (std::size_t k = 0; k < free_.size(); ++k)
      if (free_[k] == n) return theta[k];
    return fixed_.at(n);
  };
  FrequencyFamily f;
  switch (frequency_) {
    case FrequencyKind::poisson: f = Poisson{value("lambda")}; break;
    case FrequencyKind::binomial:
      f = Binomial{value("trials"), value("prob")};
      break;
    case FrequencyKind::neg_binomial:
      f = NegBinomial{value("size"), value("prob")};
      break;
  }
  SeverityFamily s;
  switch (severity_) {
    case SeverityKind::lognormal: s = LogNormal{value("mu"), value("sigma")}; break;
    case SeverityKind::gamma: s = Gamma{value("alpha"), value("beta")}; break;
  }
  validate(f);
  validate(s);
  return {f, s};
}

CoverageSpec CoverageSpec::make(double rate, double deductible,
                                std::optional<double> limit) {
  if (!(rate > 0.0 && rate <= 1.0))
    throw ArgumentError("coverage rate must lie in (0, 1]");
  if (!(deductible >= 0.0) || !std::isfinite(deductible))
    throw ArgumentError("deductible must be >= 0");
  if (limit && std::isinf(*limit) && *limit > 0) limit.reset();
  if (limit && !(*limit > 0.0))
    throw ArgumentError("limit must be > 0");
  return CoverageSpec{rate, deductible, limit};
}

double coverage_payout(double x, const CoverageSpec& cov) {
  const double v = std::max(cov.rate * x - cov.deductible, 0.0);
  return cov.limit ? std::min(v, *cov.limit) : v;
}

namespace {

// Draws one claim count per call; the distribution object is built once.
class CountSampler {
 public:
  explicit CountSampler(const FrequencyFamily& f) {
    if (auto* p = std::get_if<Poisson>(&f); p && p->lambda > 0)
      poisson_.emplace(p->lambda);
    if (auto* b = std::get_if<Binomial>(&f))
      binomial_.emplace(static_cast<long>(b->trials), b->prob);
    if (auto* nb = std::get_if<NegBinomial>(&f); nb && nb->prob < 1)
      mixing_.emplace(nb->size, (1.0 - nb->prob) / nb->prob);
  }

  long operator()(Engine& e) {
    if (poisson_) return (*poisson_)(e);
    if (binomial_) return (*binomial_)(e);
    if (mixing_) {
      // Gamma-Poisson mixture admits non-integral size.
      const double rate = (*mixing_)(e);
      if (!(rate > 0)) return 0;
      return std::poisson_distribution<long>(rate)(e);
    }
    return 0;
  }

 private:
  std::optional<std::poisson_distribution<long>> poisson_;
  std::optional<std::binomial_distribution<long>> binomial_;
  std::optional<std::gamma_distribution<double>> mixing_;
};

}  // namespace

LossSample sample_aggregate_losses(const FrequencyFamily& frequency,
                                   const SeverityFamily& severity,
                                   std::size_t count, Stream& stream) {
  if (count == 0) throw ArgumentError("replication count must be >= 1");
  validate(frequency);
  validate(severity);
  LossSample out;
  out.seed_tag = stream.tag;
  out.draws.resize(count);
  CountSampler counts(frequency);
  auto& e = stream.engine;
  if (auto* ln = std::get_if<LogNormal>(&severity)) {
    std::lognormal_distribution<double> sev(ln->mu, ln->sigma);
    for (auto& x : out.draws) {
      const long n = counts(e);
      double s = 0.0;
      for (long k = 0; k < n; ++k) s += sev(e);
      x = s;
    }
  } else {
    const auto& g = std::get<Gamma>(severity);
    std::gamma_distribution<double> sev(g.shape, 1.0 / g.rate);
    for (auto& x : out.draws) {
      const long n = counts(e);
      double s = 0.0;
      for (long k = 0; k < n; ++k) s += sev(e);
      x = s;
    }
  }
  return out;
}

LossSample sample_aggregate_losses(const RiskModel& model,
                                   std::span<const double> theta,
                                   std::size_t count, Stream& stream) {
  const auto [f, s] = model.instantiate(theta);
  return sample_aggregate_losses(f, s, count, stream);
}

std::vector<double> pure_premiums_inplace(std::vector<double>& draws,
                                          std::span<const CoverageSpec> covs) {
  if (draws.empty()) throw ArgumentError("loss sample is empty");
  const double total = static_cast<double>(draws.size());
  // Zero losses pay nothing under any coverage, so only the positive tail is
  // summed, in ascending order, skipping exactly the zero-payout terms.
  const auto positive_end =
      std::partition(draws.begin(), draws.end(), [](double x) { return x > 0; });
  std::sort(draws.begin(), positive_end);
  std::vector<double> out;
  out.reserve(covs.size());
  for (const auto& cov : covs) {
    const auto first = std::partition_point(
        draws.begin(), positive_end,
        [&](double x) { return cov.rate * x - cov.deductible <= 0.0; });
    double sum = 0.0;
    if (cov.limit) {
      const double l = *cov.limit;
      for (auto it = first; it != positive_end; ++it)
        sum += std::min(cov.rate * *it - cov.deductible, l);
    } else {
      for (auto it = first; it != positive_end; ++it)
        sum += cov.rate * *it - cov.deductible;
    }
    out.push_back(sum / total);
  }
  return out;
}

std::vector<double> pure_premiums(const LossSample& losses,
                                  std::span<const CoverageSpec> covs) {
  std::vector<double> draws = losses.draws;
  return pure_premiums_inplace(draws, covs);
}

}  // namespace isoprice
