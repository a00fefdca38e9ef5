#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "isoprice/abc_engine.hpp"
#include "isoprice/config.hpp"
#include "isoprice/market_data.hpp"

namespace isoprice {

using LogFn = std::function<void(const std::string&)>;

struct MarketData {
  std::vector<Quote> quotes;
  std::optional<GroundTruth> truth;
};

// Quotes from `input`, or a synthetic market generated from `synthetic`.
MarketData load_market(const RunConfig& config);

// Classes selected by `class_key`: one named class, every class for "all",
// or the only class present when no key is given.
std::vector<RiskClass> select_classes(const RunConfig& config,
                                      std::span<const Quote> quotes);

// --- simulate ----------------------------------------------------------------

// Writes quotes.csv + truth.json, or quotes_001.csv ... for batches.
std::vector<std::filesystem::path> cmd_simulate(const RunConfig& config,
                                                const LogFn& log = {});

// --- fit -------------------------------------------------------------------

struct FitReport {
  std::string class_label;
  std::size_t quotes = 0;
  AbcResult result;
  std::vector<double> map;
  std::vector<double> mode;
  std::vector<PredictiveSummary> per_particle;
  PredictiveSummary posterior;
  PredictiveSummary at_map;
  PredictiveSummary at_mode;
};

FitReport fit_problem(const RunConfig& config, const PricingProblem& problem,
                      const std::string& label, const LogFn& log = {});

nlohmann::json run_artifact(const RunConfig& config, const FitReport& report);

std::vector<FitReport> fit_classes(const RunConfig& config, const LogFn& log = {});

// One artifact per fitted class.
std::vector<std::filesystem::path> cmd_fit(const RunConfig& config,
                                           const LogFn& log = {});

// --- distance-grid -----------------------------------------------------------

struct GridCell {
  std::vector<double> theta;
  double rmse = 0.0;
  double reg_low = 0.0;
  double reg_high = 0.0;
  double distance() const { return rmse + reg_low + reg_high; }
};

struct DistanceGrid {
  std::vector<GridAxis> axes;
  std::vector<GridCell> cells;  // row-major, last axis fastest
};

DistanceGrid distance_grid(const RunConfig& config);
void write_grid_csv(std::ostream& out, const DistanceGrid& grid);
std::filesystem::path cmd_distance_grid(const RunConfig& config,
                                        const LogFn& log = {});

// --- isotonic-link -----------------------------------------------------------

struct LinkRow {
  double pure = 0.0;
  double commercial = 0.0;
  double fitted = 0.0;
  std::string carrier;
};

// Rows ordered by pure premium.
std::vector<LinkRow> isotonic_link(const RunConfig& config,
                                   std::span<const Quote> quotes,
                                   std::span<const double> theta);

// theta from link.theta, or the MAP/MODE estimate stored in link.artifact.
std::vector<double> link_theta(const RunConfig& config);

std::filesystem::path cmd_isotonic_link(const RunConfig& config,
                                        const LogFn& log = {});

// --- compare-links -----------------------------------------------------------

struct ResidualSummary {
  std::string link;    // linear | gompertz
  std::uint64_t seed = 0;
  std::string method;  // isotonic | linear
  std::size_t n = 0;
  double min = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double max = 0.0;
  double median_abs = 0.0;
};

std::vector<ResidualSummary> compare_links(const RunConfig& config);
std::filesystem::path cmd_compare_links(const RunConfig& config,
                                        const LogFn& log = {});

// Linear-interpolation quantile of unsorted data, q in [0, 1].
double quantile(std::vector<double> values, double q);

}  // namespace isoprice
