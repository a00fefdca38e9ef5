#include "isoprice/abc_engine.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "isoprice/errors.hpp"
#include "parallel.hpp"

namespace isoprice {

PriorBox PriorBox::make(std::vector<double> lower, std::vector<double> upper) {
  if (lower.size() != upper.size() || lower.empty())
    throw ConfigError("prior bounds must be nonempty and of equal length");
  for (std::size_t k = 0; k < lower.size(); ++k)
    if (!(std::isfinite(lower[k]) && std::isfinite(upper[k]) &&
          lower[k] < upper[k]))
      throw ConfigError("prior bound " + std::to_string(k) +
                        " must satisfy lo < hi");
  return PriorBox{std::move(lower), std::move(upper)};
}

bool PriorBox::contains(std::span<const double> theta) const {
  if (theta.size() != lower.size()) return false;
  for (std::size_t k = 0; k < theta.size(); ++k)
    if (!(theta[k] >= lower[k] && theta[k] <= upper[k])) return false;
  return true;
}

double PriorBox::density(std::span<const double> theta) const {
  if (!contains(theta)) return 0.0;
  double v = 1.0;
  for (std::size_t k = 0; k < lower.size(); ++k) v /= upper[k] - lower[k];
  return v;
}

std::vector<double> PriorBox::sample(Stream& stream) const {
  std::vector<double> theta(lower.size());
  for (std::size_t k = 0; k < theta.size(); ++k)
    theta[k] = stream.uniform(lower[k], upper[k]);
  return theta;
}

double ess(std::span<const double> weights) {
  double s1 = 0.0, s2 = 0.0;
  for (double w : weights) {
    if (!(w >= 0) || !std::isfinite(w))
      throw DegenerateWeightsError("ess: weights must be finite and >= 0");
    s1 += w;
    s2 += w * w;
  }
  if (!(s1 > 0)) throw DegenerateWeightsError("ess: all weights are zero");
  return s1 * s1 / s2;
}

std::vector<double> weighted_covariance(
    const std::vector<std::vector<double>>& particles,
    std::span<const double> weights) {
  if (particles.empty() || particles.size() != weights.size())
    throw ArgumentError("weighted_covariance: size mismatch");
  const std::size_t d = particles.front().size();
  double total = 0.0;
  std::vector<double> mean(d, 0.0);
  for (std::size_t j = 0; j < particles.size(); ++j) {
    total += weights[j];
    for (std::size_t a = 0; a < d; ++a) mean[a] += weights[j] * particles[j][a];
  }
  if (!(total > 0))
    throw DegenerateWeightsError("weighted_covariance: all weights are zero");
  for (auto& m : mean) m /= total;
  std::vector<double> cov(d * d, 0.0);
  for (std::size_t j = 0; j < particles.size(); ++j) {
    if (weights[j] == 0) continue;
    const double w = weights[j] / total;
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        cov[a * d + b] +=
            w * (particles[j][a] - mean[a]) * (particles[j][b] - mean[b]);
  }
  return cov;
}

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::optional<std::vector<double>> cholesky(const std::vector<double>& m,
                                            std::size_t d) {
  Matrix a = Eigen::Map<const Matrix>(m.data(), static_cast<Eigen::Index>(d),
                                      static_cast<Eigen::Index>(d));
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) return std::nullopt;
  Matrix l = llt.matrixL();
  for (std::size_t k = 0; k < d; ++k)
    if (!(l(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) > 0))
      return std::nullopt;
  return std::vector<double>(l.data(), l.data() + d * d);
}

}  // namespace

KdeProposal::KdeProposal(std::vector<std::vector<double>> centers,
                         std::vector<double> weights,
                         std::vector<double> bandwidth)
    : bandwidth_(std::move(bandwidth)) {
  if (centers.empty() || centers.size() != weights.size())
    throw ArgumentError("KdeProposal: centers and weights must match");
  dim_ = centers.front().size();
  if (dim_ == 0 || bandwidth_.size() != dim_ * dim_)
    throw ArgumentError("KdeProposal: bandwidth has the wrong shape");
  double total = 0.0;
  for (std::size_t j = 0; j < centers.size(); ++j) {
    if (centers[j].size() != dim_)
      throw ArgumentError("KdeProposal: ragged centers");
    if (!(weights[j] >= 0) || !std::isfinite(weights[j]))
      throw ArgumentError("KdeProposal: negative weight");
    if (weights[j] == 0) continue;
    total += weights[j];
    centers_.push_back(std::move(centers[j]));
    weights_.push_back(weights[j]);
  }
  if (!(total > 0)) throw DegenerateWeightsError("KdeProposal: zero weights");
  double run = 0.0;
  for (auto& w : weights_) {
    w /= total;
    run += w;
    cumulative_.push_back(run);
  }
  cumulative_.back() = 1.0;
  auto l = cholesky(bandwidth_, dim_);
  if (!l)
    throw ArgumentError("KdeProposal: bandwidth is not positive-definite");
  chol_ = std::move(*l);
  double log_det_half = 0.0;
  for (std::size_t k = 0; k < dim_; ++k) log_det_half += std::log(chol_[k * dim_ + k]);
  log_norm_ = -0.5 * static_cast<double>(dim_) * std::log(2.0 * std::numbers::pi) -
              log_det_half;
}

KdeProposal KdeProposal::from_cloud(const ParticleCloud& cloud) {
  const std::size_t d = cloud.dimension();
  auto h = weighted_covariance(cloud.particles, cloud.weights);
  for (auto& v : h) v *= 2.0;
  double max_diag = 0.0;
  for (std::size_t k = 0; k < d; ++k) max_diag = std::max(max_diag, h[k * d + k]);
  // Collapsed clouds have a singular covariance; grow the floor until the
  // factorization succeeds.
  double floor = 1e-12 * (max_diag > 0 ? max_diag : 1.0);
  for (int attempt = 0; attempt < 40; ++attempt, floor *= 10.0) {
    auto reg = h;
    for (std::size_t k = 0; k < d; ++k) reg[k * d + k] += floor;
    if (cholesky(reg, d)) return KdeProposal(cloud.particles, cloud.weights, reg);
  }
  throw DegenerateWeightsError("KDE bandwidth could not be regularized");
}

double KdeProposal::log_density(std::span<const double> theta) const {
  if (theta.size() != dim_) throw ArgumentError("KdeProposal: dimension mismatch");
  std::vector<double> y(dim_);
  double max_term = -kInfinity;
  std::vector<double> terms(centers_.size());
  for (std::size_t j = 0; j < centers_.size(); ++j) {
    double q = 0.0;
    for (std::size_t a = 0; a < dim_; ++a) {
      double r = theta[a] - centers_[j][a];
      for (std::size_t b = 0; b < a; ++b) r -= chol_[a * dim_ + b] * y[b];
      y[a] = r / chol_[a * dim_ + a];
      q += y[a] * y[a];
    }
    terms[j] = std::log(weights_[j]) - 0.5 * q;
    max_term = std::max(max_term, terms[j]);
  }
  if (!std::isfinite(max_term)) return -kInfinity;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - max_term);
  return log_norm_ + max_term + std::log(s);
}

double KdeProposal::density(std::span<const double> theta) const {
  return std::exp(log_density(theta));
}

std::vector<double> KdeProposal::sample(Stream& stream, const PriorBox& prior,
                                        std::size_t max_tries) const {
  std::normal_distribution<double> normal;
  std::vector<double> z(dim_), theta(dim_);
  for (std::size_t t = 0; t < max_tries; ++t) {
    const double u = stream.uniform(0.0, 1.0);
    const auto pick = static_cast<std::size_t>(
        std::upper_bound(cumulative_.begin(), cumulative_.end(), u) -
        cumulative_.begin());
    const auto& c = centers_[std::min(pick, centers_.size() - 1)];
    for (auto& v : z) v = normal(stream.engine);
    for (std::size_t a = 0; a < dim_; ++a) {
      double v = c[a];
      for (std::size_t b = 0; b <= a; ++b) v += chol_[a * dim_ + b] * z[b];
      theta[a] = v;
    }
    if (prior.contains(theta)) return theta;
  }
  throw StallError(kInfinity, "KDE proposal could not hit the prior support in " +
                                  std::to_string(max_tries) + " tries");
}

EpsilonSelection select_epsilon(double previous_epsilon,
                                std::span<const double> distances,
                                std::span<const double> ratios) {
  const std::size_t n = distances.size();
  if (n == 0 || ratios.size() != n)
    throw ArgumentError("select_epsilon: distances and ratios must match");
  for (double r : ratios)
    if (!(r >= 0) || !std::isfinite(r))
      throw DegenerateWeightsError("select_epsilon: invalid importance ratio");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return distances[a] < distances[b];
  });
  std::vector<double> sorted(n), s1(n + 1, 0.0), s2(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double r = ratios[order[k]];
    sorted[k] = distances[order[k]];
    s1[k + 1] = s1[k] + r;
    s2[k + 1] = s2[k] + r * r;
  }

  std::vector<double> candidates;
  for (std::size_t k = 0; k < n; ++k)
    if ((k == 0 || sorted[k] != sorted[k - 1]) && sorted[k] < previous_epsilon)
      candidates.push_back(sorted[k]);
  candidates.push_back(previous_epsilon);

  const double target = static_cast<double>(n) / 2.0;
  double best_gap = kInfinity;
  std::optional<std::size_t> best;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto survivors = static_cast<std::size_t>(
        std::lower_bound(sorted.begin(), sorted.end(), candidates[c]) -
        sorted.begin());
    if (!(s1[survivors] > 0)) continue;
    const double value = s1[survivors] * s1[survivors] / s2[survivors];
    const double gap = std::abs(value - target);
    if (gap <= best_gap) {
      best_gap = gap;
      best = c;
    }
  }
  if (!best)
    throw DegenerateWeightsError(
        "select_epsilon: no tolerance leaves a surviving particle");

  EpsilonSelection out;
  out.epsilon = candidates[*best];
  const auto survivors = static_cast<std::size_t>(
      std::lower_bound(sorted.begin(), sorted.end(), out.epsilon) -
      sorted.begin());
  const double total = s1[survivors];
  out.weights.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    if (distances[j] < out.epsilon) out.weights[j] = ratios[j] / total;
  out.ess = s1[survivors] * s1[survivors] / s2[survivors];
  return out;
}

void AbcConfig::validate() const {
  if (population < 2) throw ConfigError("population size J must be >= 2");
  if (replications < 1) throw ConfigError("replications R must be >= 1");
  if (max_generations < 1) throw ConfigError("max_generations must be >= 1");
  if (!(delta_eps >= 0)) throw ConfigError("delta_eps must be >= 0");
  if (min_generations < 1) throw ConfigError("min_generations must be >= 1");
  if (!(eps_min >= 0)) throw ConfigError("eps_min must be >= 0");
  if (max_proposals_per_accept < 1)
    throw ConfigError("max_proposals_per_accept must be >= 1");
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::delta_epsilon: return "delta_eps";
    case StopReason::min_epsilon: return "eps_min";
    case StopReason::max_generations: return "max_generations";
  }
  return "?";
}

std::vector<double> AbcResult::epsilon_trace() const {
  std::vector<double> out;
  out.reserve(generations.size());
  for (const auto& g : generations) out.push_back(g.epsilon);
  return out;
}

void PricingProblem::validate() const {
  const std::size_t n = commercial.size();
  if (n == 0) throw ConfigError("no quotes to fit");
  if (coverages.size() != n || rmse_weights.size() != n || iso_weights.size() != n)
    throw ArgumentError("pricing problem: inconsistent lengths");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(rmse_weights[i] > 0)) throw ConfigError("RMSE weights must be > 0");
    if (!(iso_weights[i] > 0)) throw ConfigError("isotonic weights must be > 0");
  }
}

DistanceFn make_distance(const RiskModel& model, const PricingProblem& problem,
                         std::size_t replications) {
  problem.validate();
  return [model, problem, replications](std::span<const double> theta,
                                        Stream& stream) {
    FrequencyFamily f;
    SeverityFamily s;
    try {
      std::tie(f, s) = model.instantiate(theta);
    } catch (const DomainError&) {
      return kInfinity;
    }
    auto losses = sample_aggregate_losses(f, s, replications, stream);
    const auto pure = pure_premiums_inplace(losses.draws, problem.coverages);
    return total_distance(problem.commercial, pure, problem.rmse_weights,
                          problem.iso_weights, problem.corridor);
  };
}

AbcResult run_pmc_abc(const PriorBox& prior, const DistanceFn& distance,
                      const AbcConfig& config,
                      const GenerationCallback& on_generation) {
  config.validate();
  const std::size_t J = config.population;
  AbcResult result;
  std::optional<KdeProposal> proposal;
  double previous = kInfinity;

  for (std::size_t g = 1; g <= config.max_generations; ++g) {
    ParticleCloud cloud;
    cloud.generation = g;
    cloud.previous_epsilon = previous;
    cloud.particles.resize(J);
    cloud.distances.resize(J);
    std::vector<std::size_t> attempts(J, 0);

    detail::parallel_for(J, config.workers, [&](std::size_t j) {
      for (std::size_t a = 0;; ++a) {
        if (a >= config.max_proposals_per_accept)
          throw StallError(previous,
                           "acceptance stalled at generation " +
                               std::to_string(g) + " (epsilon " +
                               std::to_string(previous) + ") after " +
                               std::to_string(a) + " proposals for one slot");
        Stream stream(config.seed, StreamTag::proposal, g, j, a);
        auto theta = proposal ? proposal->sample(stream, prior,
                                                 config.max_proposals_per_accept)
                              : prior.sample(stream);
        const double d = distance(theta, stream);
        if (d < previous) {
          cloud.particles[j] = std::move(theta);
          cloud.distances[j] = d;
          attempts[j] = a + 1;
          return;
        }
      }
    });
    cloud.proposals = std::accumulate(attempts.begin(), attempts.end(), std::size_t{0});

    std::vector<double> ratios(J, 1.0);
    if (proposal) {
      std::vector<double> log_ratio(J);
      detail::parallel_for(J, config.workers, [&](std::size_t j) {
        log_ratio[j] = std::log(prior.density(cloud.particles[j])) -
                       proposal->log_density(cloud.particles[j]);
      });
      const double shift = *std::max_element(log_ratio.begin(), log_ratio.end());
      for (std::size_t j = 0; j < J; ++j) ratios[j] = std::exp(log_ratio[j] - shift);
    }

    auto selection = select_epsilon(previous, cloud.distances, ratios);
    cloud.epsilon = selection.epsilon;
    cloud.weights = std::move(selection.weights);

    const double gap = cloud.epsilon == previous ? 0.0 : previous - cloud.epsilon;
    previous = cloud.epsilon;
    result.generations.push_back(std::move(cloud));
    const auto& last = result.generations.back();
    if (on_generation) on_generation(last);

    if (g >= config.min_generations && gap < config.delta_eps) {
      result.stop_reason = StopReason::delta_epsilon;
      break;
    }
    if (last.epsilon <= config.eps_min) {
      result.stop_reason = StopReason::min_epsilon;
      break;
    }
    if (g == config.max_generations) {
      result.stop_reason = StopReason::max_generations;
      break;
    }
    proposal = KdeProposal::from_cloud(last);
  }
  return result;
}

AbcResult run_pmc_abc(const RiskModel& model, const PriorBox& prior,
                      const PricingProblem& problem, const AbcConfig& config,
                      const GenerationCallback& on_generation) {
  if (prior.dimension() != model.dimension())
    throw ConfigError("prior dimension does not match the model's free parameters");
  return run_pmc_abc(prior, make_distance(model, problem, config.replications),
                     config, on_generation);
}

std::vector<double> map_estimate(const ParticleCloud& cloud) {
  if (cloud.particles.empty()) throw StateError("map_estimate: empty cloud");
  const std::size_t d = cloud.dimension();
  std::vector<double> m(d, 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    total += cloud.weights[j];
    for (std::size_t a = 0; a < d; ++a) m[a] += cloud.weights[j] * cloud.particles[j][a];
  }
  if (!(total > 0)) throw DegenerateWeightsError("map_estimate: zero weights");
  for (auto& v : m) v /= total;
  return m;
}

std::vector<double> mode_estimate(const ParticleCloud& cloud) {
  if (cloud.particles.empty()) throw StateError("mode_estimate: empty cloud");
  const auto kde = KdeProposal::from_cloud(cloud);
  std::size_t best = cloud.size();
  double best_value = -kInfinity;
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    if (!(cloud.weights[j] > 0)) continue;
    const double v = kde.log_density(cloud.particles[j]);
    if (best == cloud.size() || v > best_value) {
      best = j;
      best_value = v;
    }
  }
  return cloud.particles[best];
}

PredictiveSummary predictive_summary(const RiskModel& model,
                                     std::span<const double> theta,
                                     const PricingProblem& problem,
                                     std::size_t replications, Stream& stream) {
  const auto [f, s] = model.instantiate(theta);
  PredictiveSummary out;
  out.mean_frequency = mean_claim_count(f);
  out.prob_no_claim = prob_no_claim(f);
  out.mean_severity = mean_severity(s);
  out.mean_total = out.mean_frequency * out.mean_severity;
  if (problem.size() > 0) {
    auto losses = sample_aggregate_losses(f, s, replications, stream);
    const auto pure = pure_premiums_inplace(losses.draws, problem.coverages);
    double lr = 0.0;
    for (std::size_t i = 0; i < pure.size(); ++i) lr += pure[i] / problem.commercial[i];
    out.average_loss_ratio = lr / static_cast<double>(pure.size());
  }
  return out;
}

std::vector<PredictiveSummary> predictive_summaries(
    const ParticleCloud& cloud, const RiskModel& model,
    const PricingProblem& problem, std::size_t replications,
    std::uint64_t seed, std::size_t workers) {
  std::vector<PredictiveSummary> out(cloud.size());
  detail::parallel_for(cloud.size(), workers, [&](std::size_t j) {
    Stream stream(seed, StreamTag::predictive, cloud.generation, j);
    out[j] = predictive_summary(model, cloud.particles[j], problem, replications,
                                stream);
  });
  return out;
}

PredictiveSummary weighted_mean(std::span<const PredictiveSummary> summaries,
                                std::span<const double> weights) {
  if (summaries.size() != weights.size())
    throw ArgumentError("weighted_mean: size mismatch");
  PredictiveSummary m;
  double total = 0.0;
  for (std::size_t j = 0; j < summaries.size(); ++j) {
    const double w = weights[j];
    if (w == 0) continue;
    total += w;
    m.mean_severity += w * summaries[j].mean_severity;
    m.mean_frequency += w * summaries[j].mean_frequency;
    m.prob_no_claim += w * summaries[j].prob_no_claim;
    m.mean_total += w * summaries[j].mean_total;
    m.average_loss_ratio += w * summaries[j].average_loss_ratio;
  }
  if (!(total > 0)) throw DegenerateWeightsError("weighted_mean: zero weights");
  m.mean_severity /= total;
  m.mean_frequency /= total;
  m.prob_no_claim /= total;
  m.mean_total /= total;
  m.average_loss_ratio /= total;
  return m;
}

}  // namespace isoprice
