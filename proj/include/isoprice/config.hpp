#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "isoprice/abc_engine.hpp"
#include "isoprice/market_data.hpp"
#include "isoprice/risk_models.hpp"

namespace isoprice {

inline constexpr const char* kVersion = "0.1.0";

struct GridAxis {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t points = 1;

  double value(std::size_t k) const;
};

// pure: RMSE against the true pure premiums (no isotonic link).
// commercial: isotonic distance, with corridor terms when one is configured.
enum class GridTarget { pure, commercial };

struct GridConfig {
  std::vector<GridAxis> axes;
  GridTarget target = GridTarget::commercial;
  std::optional<std::filesystem::path> truth;  // ground-truth sidecar
};

struct LinkConfig {
  std::optional<std::vector<double>> theta;
  std::optional<std::filesystem::path> artifact;
  std::string estimator = "map";
};

struct CompareConfig {
  std::size_t seeds = 50;
  std::vector<std::string> links{"linear", "gompertz"};
};

/// Everything a command needs, validated up front. `document` keeps the
/// parsed JSON (after flag overrides) for echoing into artifacts.
struct RunConfig {
  nlohmann::json document;
  RiskModel model{FrequencyKind::poisson, SeverityKind::lognormal,
                  {"lambda", "mu"}, {{"sigma", 1.0}}};
  PriorBox prior;
  AbcConfig abc;
  std::optional<Corridor> corridor;
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> input;
  std::filesystem::path output = "out";
  std::optional<std::string> class_key;  // label, or "all"
  std::optional<SyntheticSpec> synthetic;
  std::size_t batch = 1;
  std::optional<std::filesystem::path> coverage_source;  // resample pool file
  std::optional<GridConfig> grid;
  LinkConfig link;
  CompareConfig compare;
  std::size_t predictive_replications = 0;  // 0: same as abc.replications

  static RunConfig from_json(const nlohmann::json& document);
  static RunConfig from_text(const std::string& text);
};

// "lambda=0:5:21,sigma=0:2:21"
std::vector<GridAxis> parse_grid_spec(const std::string& spec);

// JSON echo with execution-only keys (output directory, worker count) removed.
nlohmann::json config_echo(const RunConfig& config);

}  // namespace isoprice
