#include "isoprice/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "isoprice/discrepancy.hpp"
#include "isoprice/errors.hpp"
#include "isoprice/isotonic.hpp"
#include "parallel.hpp"

namespace isoprice {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& doc) {
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

std::string numbered(const std::string& stem, std::size_t k, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%03zu", k);
  return stem + buf + ext;
}

std::string slug(const std::string& label) {
  std::string out;
  for (char c : label) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '-';
    if (keep) out += c;
    else if (out.empty() || out.back() != '_') out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

void emit(const LogFn& log, const std::string& line) {
  if (log) log(line);
}

std::size_t prediction_draws(const RunConfig& c) {
  return c.predictive_replications ? c.predictive_replications : c.abc.replications;
}

json summary_json(const PredictiveSummary& s) {
  return json{{"mean_severity", s.mean_severity},
              {"mean_frequency", s.mean_frequency},
              {"prob_no_claim", s.prob_no_claim},
              {"mean_total", s.mean_total},
              {"average_loss_ratio", s.average_loss_ratio}};
}

// Quotes of the single class a command works on.
std::vector<Quote> single_class(const RunConfig& c, const std::vector<Quote>& quotes,
                                const char* command) {
  if (c.class_key && *c.class_key == "all")
    throw ConfigError(std::string(command) + " works on one risk class; 'all' is not accepted");
  if (!c.class_key) return quotes;
  return select_classes(c, quotes).front().quotes;
}

}  // namespace

MarketData load_market(const RunConfig& c) {
  if (c.input) return MarketData{load_quotes(*c.input), std::nullopt};
  if (c.synthetic) {
    auto market = generate_synthetic(*c.synthetic);
    return MarketData{std::move(market.quotes), std::move(market.truth)};
  }
  throw ConfigError("no market data: set 'input' or provide a 'synthetic' block");
}

std::vector<RiskClass> select_classes(const RunConfig& c, std::span<const Quote> quotes) {
  auto classes = group_risk_classes(quotes);
  if (classes.empty()) throw ConfigError("the quote set is empty");
  if (!c.class_key) {
    if (classes.size() == 1) return classes;
    throw ConfigError("input holds " + std::to_string(classes.size()) +
                      " risk classes; choose one with --class-key or pass 'all'");
  }
  if (*c.class_key == "all") return classes;
  const auto key = RiskClassKey::parse(*c.class_key);
  for (auto& cls : classes)
    if (cls.key == key) return {std::move(cls)};
  throw ConfigError("risk class '" + *c.class_key + "' not found in the input");
}

// --- simulate ----------------------------------------------------------------

std::vector<fs::path> cmd_simulate(const RunConfig& c, const LogFn& log) {
  if (!c.synthetic) throw ConfigError("simulate needs a 'synthetic' block");
  ensure_dir(c.output);
  std::vector<fs::path> written;
  for (std::size_t k = 1; k <= c.batch; ++k) {
    SyntheticSpec spec = *c.synthetic;
    spec.seed = c.synthetic->seed + (k - 1);
    const auto market = generate_synthetic(spec);
    const bool single = c.batch == 1;
    const fs::path csv = c.output / (single ? std::string("quotes.csv") : numbered("quotes", k, ".csv"));
    const fs::path truth = c.output / (single ? std::string("truth.json") : numbered("truth", k, ".json"));
    save_quotes(csv, market.quotes);
    json doc = to_json(market.truth);
    doc["version"] = kVersion;
    doc["config"] = config_echo(c);
    write_json(truth, doc);
    if (market.truth.degenerate)
      emit(log, "warning: " + csv.string() + " has non-positive commercial premiums");
    emit(log, "wrote " + csv.string() + " (" + std::to_string(market.quotes.size()) + " quotes)");
    written.push_back(csv);
    written.push_back(truth);
  }
  return written;
}

// --- fit -------------------------------------------------------------------

FitReport fit_problem(const RunConfig& c, const PricingProblem& problem,
                      const std::string& label, const LogFn& log) {
  AbcConfig abc = c.abc;
  abc.seed = c.seed;
  FitReport report;
  report.class_label = label;
  report.quotes = problem.size();
  report.result = run_pmc_abc(c.model, c.prior, problem, abc, [&](const ParticleCloud& g) {
    std::ostringstream line;
    line << "[" << label << "] generation " << g.generation << ": epsilon=" << num(g.epsilon)
         << " proposals=" << g.proposals;
    emit(log, line.str());
  });
  const auto& cloud = report.result.final_cloud();
  report.map = map_estimate(cloud);
  report.mode = mode_estimate(cloud);
  const std::size_t R = prediction_draws(c);
  report.per_particle = predictive_summaries(cloud, c.model, problem, R, c.seed, abc.workers);
  report.posterior = weighted_mean(report.per_particle, cloud.weights);
  Stream at_map(c.seed, StreamTag::predictive, 0, 1);
  report.at_map = predictive_summary(c.model, report.map, problem, R, at_map);
  Stream at_mode(c.seed, StreamTag::predictive, 0, 2);
  report.at_mode = predictive_summary(c.model, report.mode, problem, R, at_mode);
  return report;
}

json run_artifact(const RunConfig& c, const FitReport& r) {
  json doc;
  doc["schema"] = "isoprice.run";
  doc["schema_version"] = 1;
  doc["version"] = kVersion;
  doc["seed"] = c.seed;
  doc["config"] = config_echo(c);
  doc["class_key"] = r.class_label;
  doc["quotes"] = r.quotes;
  doc["model"] = c.model.name();
  doc["param_names"] = c.model.free_params();
  doc["prior"] = {{"lower", c.prior.lower}, {"upper", c.prior.upper}};
  doc["stop_reason"] = to_string(r.result.stop_reason);
  doc["epsilon_trace"] = r.result.epsilon_trace();

  json gens = json::array();
  for (const auto& g : r.result.generations) {
    gens.push_back({{"generation", g.generation},
                    {"epsilon", g.epsilon},
                    {"previous_epsilon", g.previous_epsilon},
                    {"accepted", g.size()},
                    {"proposals", g.proposals},
                    {"ess", ess(g.weights)},
                    {"particles", g.particles},
                    {"weights", g.weights},
                    {"distances", g.distances}});
  }
  doc["generations"] = std::move(gens);
  doc["estimates"] = {{"map", r.map}, {"mode", r.mode}};

  json per = {{"mean_severity", json::array()}, {"mean_frequency", json::array()},
              {"prob_no_claim", json::array()}, {"mean_total", json::array()},
              {"average_loss_ratio", json::array()}};
  for (const auto& s : r.per_particle) {
    per["mean_severity"].push_back(s.mean_severity);
    per["mean_frequency"].push_back(s.mean_frequency);
    per["prob_no_claim"].push_back(s.prob_no_claim);
    per["mean_total"].push_back(s.mean_total);
    per["average_loss_ratio"].push_back(s.average_loss_ratio);
  }
  doc["predictive"] = {{"replications", prediction_draws(c)},
                       {"posterior_mean", summary_json(r.posterior)},
                       {"map", summary_json(r.at_map)},
                       {"mode", summary_json(r.at_mode)},
                       {"particles", std::move(per)}};
  return doc;
}

std::vector<FitReport> fit_classes(const RunConfig& c, const LogFn& log) {
  const auto market = load_market(c);
  std::vector<FitReport> reports;
  for (const auto& cls : select_classes(c, market.quotes))
    reports.push_back(fit_problem(c, make_problem(cls.quotes, c.corridor), cls.key.label(), log));
  return reports;
}

std::vector<fs::path> cmd_fit(const RunConfig& c, const LogFn& log) {
  const auto market = load_market(c);
  const auto classes = select_classes(c, market.quotes);
  const bool many = c.class_key && *c.class_key == "all";
  ensure_dir(c.output);
  std::vector<fs::path> written;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const auto& cls = classes[k];
    const auto report = fit_problem(c, make_problem(cls.quotes, c.corridor), cls.key.label(), log);
    const fs::path path =
        c.output / (many ? numbered("fit", k + 1, "_" + slug(cls.key.label()) + ".json")
                         : std::string("fit.json"));
    write_json(path, run_artifact(c, report));
    emit(log, "wrote " + path.string() + " (stop: " + to_string(report.result.stop_reason) + ")");
    written.push_back(path);
  }
  return written;
}

// --- distance-grid -----------------------------------------------------------

DistanceGrid distance_grid(const RunConfig& c) {
  if (!c.grid || c.grid->axes.empty())
    throw ConfigError("distance-grid needs grid axes (--grid or grid.axes)");
  const auto& axes = c.grid->axes;
  const auto& names = c.model.free_params();
  if (axes.size() != names.size())
    throw ConfigError("grid axes must cover every free parameter exactly once");
  std::vector<std::size_t> slot(axes.size());
  std::set<std::size_t> seen;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    const auto it = std::find(names.begin(), names.end(), axes[a].name);
    if (it == names.end())
      throw ConfigError("grid axis '" + axes[a].name + "' is not a free parameter");
    slot[a] = static_cast<std::size_t>(it - names.begin());
    if (!seen.insert(slot[a]).second)
      throw ConfigError("grid axis '" + axes[a].name + "' appears twice");
  }

  const auto market = load_market(c);
  const auto quotes = single_class(c, market.quotes, "distance-grid");
  const bool pure_target = c.grid->target == GridTarget::pure;
  const auto problem = make_problem(quotes, pure_target ? std::nullopt : c.corridor);

  std::vector<double> truth;
  if (pure_target) {
    if (c.grid->truth) {
      std::ifstream in(*c.grid->truth);
      if (!in) throw IoError("cannot read " + c.grid->truth->string());
      try {
        truth = json::parse(in).at("pure").get<std::vector<double>>();
      } catch (const json::exception& e) {
        throw ConfigError("malformed truth file: " + std::string(e.what()));
      }
    } else if (market.truth) {
      truth = market.truth->pure;
    } else {
      throw ConfigError("the pure-premium grid needs ground truth (synthetic data or grid.truth)");
    }
    if (truth.size() != quotes.size())
      throw ConfigError("ground truth does not match the selected quotes");
  }

  std::size_t total = 1;
  for (const auto& a : axes) total *= a.points;

  DistanceGrid grid;
  grid.axes = axes;
  grid.cells.resize(total);
  const std::size_t R = c.abc.replications;
  detail::parallel_for(total, c.abc.workers, [&](std::size_t i) {
    GridCell& cell = grid.cells[i];
    cell.theta.assign(axes.size(), 0.0);
    std::size_t rest = i;
    for (std::size_t a = axes.size(); a-- > 0;) {
      cell.theta[slot[a]] = axes[a].value(rest % axes[a].points);
      rest /= axes[a].points;
    }
    // Every cell reuses the same stream so differences come from theta alone.
    Stream stream(c.seed, StreamTag::grid);
    try {
      auto sample = sample_aggregate_losses(c.model, cell.theta, R, stream);
      const auto pure = pure_premiums_inplace(sample.draws, problem.coverages);
      if (pure_target) {
        cell.rmse = rmse(truth, pure, problem.rmse_weights);
      } else {
        const auto b = distance_breakdown(problem.commercial, pure, problem.rmse_weights,
                                          problem.iso_weights, problem.corridor);
        cell.rmse = b.rmse;
        cell.reg_low = b.reg_low;
        cell.reg_high = b.reg_high;
      }
    } catch (const DomainError&) {
      cell.rmse = kInfinity;
    }
  });
  // Report theta in axis order.
  for (auto& cell : grid.cells) {
    std::vector<double> ordered(axes.size());
    for (std::size_t a = 0; a < axes.size(); ++a) ordered[a] = cell.theta[slot[a]];
    cell.theta = std::move(ordered);
  }
  return grid;
}

void write_grid_csv(std::ostream& out, const DistanceGrid& grid) {
  for (const auto& a : grid.axes) out << a.name << ',';
  out << "rmse,reg_low,reg_high,distance\n";
  for (const auto& cell : grid.cells) {
    for (double v : cell.theta) out << num(v) << ',';
    out << num(cell.rmse) << ',' << num(cell.reg_low) << ',' << num(cell.reg_high) << ','
        << num(cell.distance()) << '\n';
  }
}

fs::path cmd_distance_grid(const RunConfig& c, const LogFn& log) {
  const auto grid = distance_grid(c);
  ensure_dir(c.output);
  const fs::path path = c.output / "distance_grid.csv";
  auto out = open_out(path);
  write_grid_csv(out, grid);
  if (!out) throw IoError("failed writing " + path.string());
  emit(log, "wrote " + path.string() + " (" + std::to_string(grid.cells.size()) + " cells)");
  return path;
}

// --- isotonic-link -----------------------------------------------------------

std::vector<double> link_theta(const RunConfig& c) {
  if (c.link.theta) return *c.link.theta;
  if (!c.link.artifact) throw ConfigError("isotonic-link needs link.theta or link.artifact");
  std::ifstream in(*c.link.artifact);
  if (!in) throw IoError("cannot read " + c.link.artifact->string());
  try {
    const auto doc = json::parse(in);
    const auto names = doc.at("param_names").get<std::vector<std::string>>();
    if (names != c.model.free_params())
      throw ConfigError("artifact parameters do not match the configured model");
    return doc.at("estimates").at(c.link.estimator).get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ConfigError("malformed run artifact: " + std::string(e.what()));
  }
}

std::vector<LinkRow> isotonic_link(const RunConfig& c, std::span<const Quote> quotes,
                                   std::span<const double> theta) {
  const auto problem = make_problem(quotes, std::nullopt);
  Stream stream(c.seed, StreamTag::link);
  auto sample = sample_aggregate_losses(c.model, theta, prediction_draws(c), stream);
  const auto pure = pure_premiums_inplace(sample.draws, problem.coverages);
  const auto fit = pava_fit(pure, problem.commercial, problem.iso_weights);
  const auto fitted = fit.fitted();
  std::vector<LinkRow> rows;
  rows.reserve(quotes.size());
  for (std::size_t i : sort_permutation(pure, problem.commercial))
    rows.push_back({pure[i], problem.commercial[i], fitted[i], quotes[i].insurance_carrier});
  return rows;
}

fs::path cmd_isotonic_link(const RunConfig& c, const LogFn& log) {
  const auto theta = link_theta(c);
  if (theta.size() != c.model.dimension())
    throw ConfigError("link theta must have one entry per free parameter");
  const auto market = load_market(c);
  const auto quotes = single_class(c, market.quotes, "isotonic-link");
  const auto rows = isotonic_link(c, quotes, theta);
  ensure_dir(c.output);
  const fs::path path = c.output / "isotonic_link.csv";
  auto out = open_out(path);
  out << "pure_premium,commercial_premium,fitted_premium,insurance_carrier\n";
  for (const auto& r : rows)
    out << num(r.pure) << ',' << num(r.commercial) << ',' << num(r.fitted) << ','
        << csv_field(r.carrier) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
  emit(log, "wrote " + path.string() + " (" + std::to_string(rows.size()) + " rows)");
  return path;
}

// --- compare-links -----------------------------------------------------------

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw ArgumentError("quantile of an empty set");
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

namespace {

ResidualSummary summarize(const std::string& link, std::uint64_t seed,
                          const std::string& method, const std::vector<double>& res) {
  std::vector<double> abs_res(res.size());
  std::transform(res.begin(), res.end(), abs_res.begin(), [](double x) { return std::abs(x); });
  ResidualSummary s;
  s.link = link;
  s.seed = seed;
  s.method = method;
  s.n = res.size();
  s.min = quantile(res, 0.0);
  s.q25 = quantile(res, 0.25);
  s.median = quantile(res, 0.5);
  s.q75 = quantile(res, 0.75);
  s.max = quantile(res, 1.0);
  s.median_abs = quantile(abs_res, 0.5);
  return s;
}

}  // namespace

std::vector<ResidualSummary> compare_links(const RunConfig& c) {
  if (!c.synthetic) throw ConfigError("compare-links needs a 'synthetic' block");
  if (c.compare.seeds < 1) throw ConfigError("compare.seeds must be >= 1");
  std::vector<ResidualSummary> out;
  for (const auto& link : c.compare.links) {
    for (std::size_t s = 0; s < c.compare.seeds; ++s) {
      SyntheticSpec spec = *c.synthetic;
      spec.seed = c.synthetic->seed + s;
      if (link == "linear" && !std::holds_alternative<LinearLoading>(spec.link))
        spec.link = LinearLoading{};
      if (link == "gompertz" && !std::holds_alternative<GompertzLoading>(spec.link))
        spec.link = GompertzLoading{};
      const auto market = generate_synthetic(spec);
      const auto& pure = market.truth.pure;
      const auto& com = market.truth.commercial;

      const std::vector<double> ones(pure.size(), 1.0);
      const auto fitted = pava_fit(pure, com, ones).fitted();
      std::vector<double> iso(pure.size());
      for (std::size_t i = 0; i < pure.size(); ++i) iso[i] = com[i] - fitted[i];

      out.push_back(summarize(link, spec.seed, "isotonic", iso));
      out.push_back(summarize(link, spec.seed, "linear", linear_baseline_fit(pure, com).residuals));
    }
  }
  return out;
}

fs::path cmd_compare_links(const RunConfig& c, const LogFn& log) {
  const auto rows = compare_links(c);
  ensure_dir(c.output);
  const fs::path path = c.output / "compare_links.csv";
  auto out = open_out(path);
  out << "link,seed,method,n,min,q25,median,q75,max,median_abs\n";
  for (const auto& r : rows)
    out << r.link << ',' << r.seed << ',' << r.method << ',' << r.n << ',' << num(r.min) << ','
        << num(r.q25) << ',' << num(r.median) << ',' << num(r.q75) << ',' << num(r.max) << ','
        << num(r.median_abs) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
  emit(log, "wrote " + path.string() + " (" + std::to_string(rows.size()) + " rows)");
  return path;
}

}  // namespace isoprice
