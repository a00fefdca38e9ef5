// Command-line front end over the isoprice C interface.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "isoprice/isoprice.h"

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> class_key;
  std::optional<std::string> grid;
  bool corridor_off = false;
  std::optional<std::size_t> batch;
  std::optional<std::size_t> workers;
  bool quiet = false;
};

int exit_code(isp_status status) {
  switch (status) {
    case ISP_OK: return 0;
    case ISP_ERR_CONFIG: return 2;
    case ISP_ERR_STALL: return 3;
    case ISP_ERR_DEGENERATE_WEIGHTS: return 4;
    default: return 1;
  }
}

void print_line(const char* line, void*) { std::cerr << line << '\n'; }

// Loads the config document and applies flag overrides; flags win.
nlohmann::json build_document(const Options& o) {
  nlohmann::json doc = nlohmann::json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw std::runtime_error("cannot read config file " + o.config_path);
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(o.config_path + ": " + e.what());
    }
    if (!doc.is_object()) throw std::runtime_error(o.config_path + ": expected a JSON object");
  }
  if (o.seed) doc["seed"] = *o.seed;
  if (o.out) doc["output"] = *o.out;
  if (o.class_key) doc["class_key"] = *o.class_key;
  if (o.grid) doc["grid"]["axes"] = *o.grid;
  if (o.corridor_off) doc["corridor"] = nullptr;
  if (o.batch) doc["synthetic"]["batch"] = *o.batch;
  if (o.workers) doc["abc"]["workers"] = *o.workers;
  return doc;
}

using Command = isp_status (*)(const isp_config*, isp_log_fn, void*);

int run(const Options& o, Command command) {
  std::string text;
  try {
    text = build_document(o).dump();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  isp_config* config = nullptr;
  isp_status status = isp_config_parse(text.c_str(), &config);
  if (status == ISP_OK) {
    status = command(config, o.quiet ? nullptr : print_line, nullptr);
    isp_config_free(config);
  }
  if (status != ISP_OK) std::cerr << "error: " << isp_last_error() << '\n';
  return exit_code(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Infer risk-model parameters from market premiums"};
  app.set_version_flag("--version", std::string(isp_version()));
  app.require_subcommand(1);

  Options o;
  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("-c,--config", o.config_path, "JSON configuration file");
    sub->add_option("--seed", o.seed, "Master random seed");
    sub->add_option("-o,--out", o.out, "Output directory");
    sub->add_option("--workers", o.workers, "Worker threads (0: all cores)");
    sub->add_flag("-q,--quiet", o.quiet, "Suppress progress lines");
  };

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic quote file and its ground truth");
  add_common(simulate);
  simulate->add_option("--batch", o.batch, "Number of datasets (numbered files)");

  auto* fit = app.add_subcommand("fit", "Run the particle sampler on one or all risk classes");
  add_common(fit);
  fit->add_option("--class-key", o.class_key, "Risk class label specie|breed|gender|age, or 'all'");
  fit->add_flag("--corridor-off", o.corridor_off, "Drop the loss-ratio corridor terms");

  auto* grid = app.add_subcommand("distance-grid", "Evaluate the distance over a parameter grid");
  add_common(grid);
  grid->add_option("--grid", o.grid, "Axes as name=lo:hi:points,...");
  grid->add_option("--class-key", o.class_key, "Risk class label");
  grid->add_flag("--corridor-off", o.corridor_off, "Drop the loss-ratio corridor terms");

  auto* link = app.add_subcommand("isotonic-link", "Emit the fitted pure-to-commercial link");
  add_common(link);
  link->add_option("--class-key", o.class_key, "Risk class label");

  auto* compare = app.add_subcommand("compare-links", "Residuals of isotonic and linear links");
  add_common(compare);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (simulate->parsed()) return run(o, isp_cmd_simulate);
  if (fit->parsed()) return run(o, isp_cmd_fit);
  if (grid->parsed()) return run(o, isp_cmd_distance_grid);
  if (link->parsed()) return run(o, isp_cmd_isotonic_link);
  return run(o, isp_cmd_compare_links);
}
