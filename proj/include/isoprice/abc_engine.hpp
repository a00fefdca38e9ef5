#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "isoprice/discrepancy.hpp"
#include "isoprice/random.hpp"
#include "isoprice/risk_models.hpp"

namespace isoprice {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Independent uniform priors on a box.
struct PriorBox {
  std::vector<double> lower;
  std::vector<double> upper;

  static PriorBox make(std::vector<double> lower, std::vector<double> upper);
  std::size_t dimension() const { return lower.size(); }
  bool contains(std::span<const double> theta) const;
  double density(std::span<const double> theta) const;
  std::vector<double> sample(Stream& stream) const;
};

struct ParticleCloud {
  std::size_t generation = 0;
  double epsilon = kInfinity;           // tolerance selected for this cloud
  double previous_epsilon = kInfinity;  // acceptance threshold used to build it
  std::vector<std::vector<double>> particles;
  std::vector<double> weights;
  std::vector<double> distances;
  std::size_t proposals = 0;

  std::size_t size() const { return particles.size(); }
  std::size_t dimension() const {
    return particles.empty() ? 0 : particles.front().size();
  }
};

double ess(std::span<const double> weights);

// Weighted covariance sum_j w_j (theta_j - m)(theta_j - m)^T, row-major d x d.
std::vector<double> weighted_covariance(
    const std::vector<std::vector<double>>& particles,
    std::span<const double> weights);

/// Weighted Gaussian mixture with one bandwidth matrix shared by all centers.
class KdeProposal {
 public:
  // `bandwidth` is row-major d x d and must be symmetric positive-definite.
  KdeProposal(std::vector<std::vector<double>> centers,
              std::vector<double> weights, std::vector<double> bandwidth);

  // Bandwidth is twice the weighted covariance plus a small diagonal floor.
  static KdeProposal from_cloud(const ParticleCloud& cloud);

  std::size_t dimension() const { return dim_; }
  const std::vector<double>& bandwidth() const { return bandwidth_; }

  double density(std::span<const double> theta) const;
  double log_density(std::span<const double> theta) const;

  // Draws until the sample falls inside the prior box.
  std::vector<double> sample(Stream& stream, const PriorBox& prior,
                             std::size_t max_tries) const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::vector<double>> centers_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  std::vector<double> bandwidth_;
  std::vector<double> chol_;  // lower factor, row-major
  double log_norm_ = 0.0;
};

struct EpsilonSelection {
  double epsilon = kInfinity;
  std::vector<double> weights;  // normalized, zero for d_j >= epsilon
  double ess = 0.0;
};

/// Picks the tolerance among the observed distances and the previous
/// tolerance whose surviving importance weights have ESS closest to J/2,
/// preferring the larger tolerance on ties.
EpsilonSelection select_epsilon(double previous_epsilon,
                                std::span<const double> distances,
                                std::span<const double> ratios);

struct AbcConfig {
  std::size_t population = 1000;
  std::size_t replications = 2000;
  std::size_t max_generations = 100;
  double delta_eps = 1.0;
  // The delta_eps rule is only checked from this generation on.
  std::size_t min_generations = 1;
  double eps_min = 0.0;
  std::uint64_t seed = 1;
  std::size_t max_proposals_per_accept = 1'000'000;
  std::size_t workers = 0;  // 0: hardware concurrency

  void validate() const;
};

enum class StopReason { delta_epsilon, min_epsilon, max_generations };
std::string to_string(StopReason reason);

struct AbcResult {
  std::vector<ParticleCloud> generations;
  StopReason stop_reason = StopReason::max_generations;

  std::vector<double> epsilon_trace() const;
  const ParticleCloud& final_cloud() const { return generations.back(); }
};

// Market observations of one risk class, ready for the distance.
struct PricingProblem {
  std::vector<CoverageSpec> coverages;
  std::vector<double> commercial;
  std::vector<double> rmse_weights;
  std::vector<double> iso_weights;
  std::optional<Corridor> corridor;

  std::size_t size() const { return commercial.size(); }
  void validate() const;
};

// Simulates and scores one candidate theta; +inf marks an unusable proposal.
using DistanceFn =
    std::function<double(std::span<const double> theta, Stream& stream)>;
using GenerationCallback = std::function<void(const ParticleCloud&)>;

DistanceFn make_distance(const RiskModel& model, const PricingProblem& problem,
                         std::size_t replications);

AbcResult run_pmc_abc(const PriorBox& prior, const DistanceFn& distance,
                      const AbcConfig& config,
                      const GenerationCallback& on_generation = {});

AbcResult run_pmc_abc(const RiskModel& model, const PriorBox& prior,
                      const PricingProblem& problem, const AbcConfig& config,
                      const GenerationCallback& on_generation = {});

std::vector<double> map_estimate(const ParticleCloud& cloud);
std::vector<double> mode_estimate(const ParticleCloud& cloud);

struct PredictiveSummary {
  double mean_severity = 0.0;
  double mean_frequency = 0.0;
  double prob_no_claim = 0.0;
  double mean_total = 0.0;
  double average_loss_ratio = 0.0;
};

PredictiveSummary predictive_summary(const RiskModel& model,
                                     std::span<const double> theta,
                                     const PricingProblem& problem,
                                     std::size_t replications, Stream& stream);

// One summary per particle, each from its own substream of `seed`.
std::vector<PredictiveSummary> predictive_summaries(
    const ParticleCloud& cloud, const RiskModel& model,
    const PricingProblem& problem, std::size_t replications,
    std::uint64_t seed, std::size_t workers = 0);

PredictiveSummary weighted_mean(std::span<const PredictiveSummary> summaries,
                                std::span<const double> weights);

}  // namespace isoprice
