#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "isoprice/commands.hpp"
#include "isoprice/config.hpp"
#include "isoprice/errors.hpp"
#include "isoprice/isotonic.hpp"

using namespace isoprice;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kData = ISOPRICE_TEST_DATA;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("isoprice_test_" + name);
  fs::remove_all(dir);
  return dir;
}

json small_config() {
  return json::parse(R"({
    "model": {"frequency": "poisson", "severity": "lognormal", "free": ["lambda", "sigma"], "fixed": {"mu": 0}},
    "prior": {"lambda": [0, 10], "sigma": [0, 5]},
    "abc": {"population": 60, "replications": 200, "delta_eps": 0.1, "max_generations": 4, "workers": 1},
    "corridor": [0.3, 0.66],
    "seed": 3,
    "synthetic": {
      "theta": {"lambda": 3, "sigma": 1},
      "n": 30,
      "coverages": {"kind": "uniform"},
      "loading": {"kind": "linear", "multiplier": [0.5, 2], "one_plus_eta": true},
      "oracle_replications": 20000
    }
  })");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("configuration parsing") {
  const auto cfg = RunConfig::from_json(small_config());
  CHECK(cfg.model.free_params() == std::vector<std::string>{"lambda", "sigma"});
  CHECK(cfg.prior.upper == std::vector<double>{10, 5});
  CHECK(cfg.abc.population == 60);
  CHECK(cfg.abc.seed == 3);
  CHECK(cfg.corridor->low == 0.3);
  REQUIRE(cfg.synthetic);
  CHECK(cfg.synthetic->theta == std::vector<double>{3, 1});
  CHECK(cfg.synthetic->seed == 3);

  auto doc = small_config();
  doc["corridor"] = nullptr;
  CHECK_FALSE(RunConfig::from_json(doc).corridor);

  CHECK_THROWS_AS(RunConfig::from_text("{not json"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_text("[1, 2]"), ConfigError);
  doc = small_config();
  doc["prior"].erase("sigma");
  CHECK_THROWS_AS(RunConfig::from_json(doc), ConfigError);
  doc = small_config();
  doc["abc"]["population"] = "many";
  CHECK_THROWS_AS(RunConfig::from_json(doc), ConfigError);
  doc = small_config();
  doc["corridor"] = {0.7, 0.4};
  CHECK_THROWS_AS(RunConfig::from_json(doc), ConfigError);
  doc = small_config();
  doc["model"]["severity"] = "pareto";
  CHECK_THROWS_AS(RunConfig::from_json(doc), ConfigError);
  doc = small_config();
  doc["synthetic"]["loading"] = {{"kind", "cubic"}};
  CHECK_THROWS_AS(RunConfig::from_json(doc), ConfigError);
}

TEST_CASE("echo drops execution-only keys") {
  auto doc = small_config();
  doc["output"] = "/tmp/x";
  const auto echo = config_echo(RunConfig::from_json(doc));
  CHECK_FALSE(echo.contains("output"));
  CHECK_FALSE(echo["abc"].contains("workers"));
  CHECK(echo["seed"] == 3);
}

TEST_CASE("grid specs") {
  const auto axes = parse_grid_spec("lambda=0:5:21,sigma=0:2:21");
  REQUIRE(axes.size() == 2);
  CHECK(axes[0].name == "lambda");
  CHECK(axes[0].value(12) == doctest::Approx(3.0));
  CHECK(axes[1].value(10) == doctest::Approx(1.0));
  CHECK(axes[1].value(20) == 2.0);
  CHECK_THROWS_AS(parse_grid_spec("lambda=0:5"), ConfigError);
  CHECK_THROWS_AS(parse_grid_spec("lambda=5:0:3"), ConfigError);
  CHECK_THROWS_AS(parse_grid_spec("lambda=a:b:c"), ConfigError);
}

TEST_CASE("simulate writes quotes and ground truth") {
  auto doc = small_config();
  doc["output"] = scratch("simulate").string();
  doc["synthetic"]["n"] = 1;
  auto files = cmd_simulate(RunConfig::from_json(doc));
  REQUIRE(files.size() == 2);
  CHECK(count_lines(files[0]) == 2);
  const auto truth = json::parse(slurp(files[1]));
  CHECK(truth["pure"].size() == 1);
  CHECK(truth.contains("config"));

  doc["synthetic"]["batch"] = 3;
  files = cmd_simulate(RunConfig::from_json(doc));
  CHECK(files.size() == 6);
  CHECK(fs::exists(fs::path(doc["output"].get<std::string>()) / "quotes_003.csv"));
  CHECK(slurp(files[0]) != slurp(files[2]));
}

TEST_CASE("fit artifact reproduces the in-memory trace") {
  auto doc = small_config();
  doc["output"] = scratch("fit").string();
  const auto cfg = RunConfig::from_json(doc);
  const auto reports = fit_classes(cfg);
  REQUIRE(reports.size() == 1);
  const auto paths = cmd_fit(cfg);
  REQUIRE(paths.size() == 1);
  const auto art = json::parse(slurp(paths[0]));
  const auto trace = reports[0].result.epsilon_trace();
  REQUIRE(art["epsilon_trace"].size() == trace.size());
  for (std::size_t g = 0; g < trace.size(); ++g) {
    const double stored = art["generations"][g]["epsilon"].is_null()
                              ? kInfinity
                              : art["generations"][g]["epsilon"].get<double>();
    CHECK(std::abs(stored - trace[g]) <= 1e-12 * std::max(1.0, std::abs(trace[g])));
  }
  CHECK(art["schema"] == "isoprice.run");
  CHECK(art["seed"] == 3);
  CHECK(art["version"] == kVersion);
  CHECK(art["param_names"] == json({"lambda", "sigma"}));
  CHECK(art["generations"][0]["particles"].size() == 60);
  CHECK(art["estimates"]["map"].size() == 2);
  CHECK(art["predictive"]["particles"]["mean_total"].size() == 60);
}

TEST_CASE("fit loops over every risk class") {
  auto doc = small_config();
  doc.erase("synthetic");
  doc["model"] = {{"frequency", "poisson"}, {"severity", "lognormal"},
                  {"free", {"lambda", "mu"}}, {"fixed", {{"sigma", 1}}}};
  doc["prior"] = {{"lambda", {0, 10}}, {"mu", {-10, 10}}};
  doc["abc"] = {{"population", 20}, {"replications", 50}, {"max_generations", 1}, {"workers", 1}};
  doc["corridor"] = {0.4, 0.7};
  doc["input"] = (kData / "risk_classes.csv").string();
  doc["output"] = scratch("classes").string();

  CHECK_THROWS_AS(cmd_fit(RunConfig::from_json(doc)), ConfigError);

  doc["class_key"] = "all";
  const auto paths = cmd_fit(RunConfig::from_json(doc));
  CHECK(paths.size() == 12);
  const auto first = json::parse(slurp(paths[0]));
  CHECK(first["quotes"] == 90);

  doc["class_key"] = "dog|golden-retriever|female|2 years";
  const auto one = cmd_fit(RunConfig::from_json(doc));
  REQUIRE(one.size() == 1);
  CHECK(json::parse(slurp(one[0]))["class_key"] == "dog|golden-retriever|female|2 years");

  doc["class_key"] = "cat|siamese|male|1 year";
  CHECK_THROWS_AS(cmd_fit(RunConfig::from_json(doc)), ConfigError);
}

TEST_CASE("distance grid") {
  auto doc = small_config();
  doc["output"] = scratch("grid").string();
  doc["grid"] = {{"axes", "lambda=3:3:1,sigma=1:1:1"}};
  const auto single = distance_grid(RunConfig::from_json(doc));
  CHECK(single.cells.size() == 1);
  const auto path = cmd_distance_grid(RunConfig::from_json(doc));
  CHECK(count_lines(path) == 2);

  doc["grid"] = {{"axes", "sigma=0:2:5,lambda=0:5:6"}};
  const auto reg = distance_grid(RunConfig::from_json(doc));
  doc["corridor"] = nullptr;
  const auto plain = distance_grid(RunConfig::from_json(doc));
  REQUIRE(reg.cells.size() == 30);
  for (std::size_t i = 0; i < reg.cells.size(); ++i) {
    CHECK(reg.cells[i].theta == plain.cells[i].theta);
    if (std::isinf(plain.cells[i].rmse)) continue;
    CHECK(reg.cells[i].rmse == plain.cells[i].rmse);
    CHECK(reg.cells[i].distance() >= plain.cells[i].distance());
    CHECK(plain.cells[i].reg_low == 0.0);
  }
  // sigma = 0 is outside the severity support.
  CHECK(std::isinf(reg.cells[0].distance()));
  CHECK(reg.cells[6].theta == std::vector<double>{0.5, 0.0});

  doc["grid"] = {{"axes", "lambda=0:5:3"}};
  CHECK_THROWS_AS(distance_grid(RunConfig::from_json(doc)), ConfigError);
  doc["grid"] = {{"axes", "lambda=0:5:3,mu=0:1:2"}};
  CHECK_THROWS_AS(distance_grid(RunConfig::from_json(doc)), ConfigError);
}

TEST_CASE("pure-premium grid is zero at the true parameters with a huge oracle-free check") {
  auto doc = small_config();
  doc["grid"] = {{"axes", "lambda=2:4:3,sigma=0.5:1.5:3"}, {"target", "pure"}};
  doc["abc"]["replications"] = 20000;
  const auto grid = distance_grid(RunConfig::from_json(doc));
  std::size_t best = 0;
  for (std::size_t i = 0; i < grid.cells.size(); ++i)
    if (grid.cells[i].distance() < grid.cells[best].distance()) best = i;
  CHECK(grid.cells[best].theta == std::vector<double>{3.0, 1.0});
}

TEST_CASE("isotonic link rows match a direct fit") {
  auto doc = small_config();
  doc["output"] = scratch("link").string();
  doc["link"] = {{"theta", {{"lambda", 3}, {"sigma", 1}}}};
  const auto cfg = RunConfig::from_json(doc);
  const auto market = load_market(cfg);
  const auto rows = isotonic_link(cfg, market.quotes, link_theta(cfg));
  REQUIRE(rows.size() == 30);
  std::vector<double> x, y;
  for (const auto& r : rows) {
    x.push_back(r.pure);
    y.push_back(r.commercial);
  }
  const auto fitted = pava_fit(x, y, std::vector<double>(30, 1.0)).fitted();
  for (std::size_t i = 0; i < 30; ++i) {
    CHECK(rows[i].fitted == doctest::Approx(fitted[i]).epsilon(1e-12));
    if (i) CHECK(rows[i].pure >= rows[i - 1].pure);
    if (i) CHECK(rows[i].fitted >= rows[i - 1].fitted);
  }
  const auto path = cmd_isotonic_link(cfg);
  CHECK(count_lines(path) == 31);

  // theta taken from a stored fit.
  auto fit_doc = small_config();
  fit_doc["output"] = scratch("link_fit").string();
  const auto art = cmd_fit(RunConfig::from_json(fit_doc)).front();
  doc["link"] = {{"artifact", art.string()}, {"estimator", "mode"}};
  const auto from_art = link_theta(RunConfig::from_json(doc));
  const auto stored = json::parse(slurp(art))["estimates"]["mode"].get<std::vector<double>>();
  CHECK(from_art == stored);

  doc["synthetic"]["n"] = 1;
  const auto one = RunConfig::from_json(doc);
  CHECK(isotonic_link(one, load_market(one).quotes, link_theta(one)).size() == 1);
}

TEST_CASE("noise-free links") {
  auto doc = small_config();
  doc["compare"] = {{"seeds", 3}, {"links", {"linear"}}};
  doc["synthetic"]["loading"] = {{"kind", "linear"}, {"multiplier", {2, 2}}};
  for (const auto& r : compare_links(RunConfig::from_json(doc))) {
    CHECK(std::abs(r.max) < 1e-9);
    CHECK(std::abs(r.min) < 1e-9);
  }
  doc["compare"]["links"] = {"gompertz"};
  doc["synthetic"]["loading"] = {{"kind", "gompertz"}, {"a", {8, 8}}, {"b", {3, 3}}, {"c", 2}};
  for (const auto& r : compare_links(RunConfig::from_json(doc))) {
    if (r.method == "isotonic") CHECK(std::abs(r.median_abs) < 1e-9);
    if (r.method == "linear") CHECK(r.median_abs > 1e-3);
  }
}

TEST_CASE("quantile interpolation") {
  CHECK(quantile({3, 1, 2}, 0.5) == 2);
  CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(quantile({1, 2, 3, 4}, 0.0) == 1);
  CHECK(quantile({1, 2, 3, 4}, 1.0) == 4);
  CHECK_THROWS_AS(quantile({}, 0.5), ArgumentError);
}
