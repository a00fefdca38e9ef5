#include "isoprice/config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "isoprice/errors.hpp"

namespace isoprice {

using nlohmann::json;

namespace {

double number(const json& j, const std::string& what) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "Inf" || s == "INF") return kInfinity;
  }
  if (!j.is_number()) throw ConfigError(what + " must be a number");
  return j.get<double>();
}

std::size_t count(const json& j, const std::string& what) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    throw ConfigError(what + " must be an integer");
  const auto v = j.get<long long>();
  if (v < 0) throw ConfigError(what + " must be >= 0");
  return static_cast<std::size_t>(v);
}

Range range(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2)
    throw ConfigError(what + " must be a [lo, hi] pair");
  return Range{number(j[0], what), number(j[1], what)};
}

std::optional<double> limit_value(const json& j) {
  if (j.is_null()) return std::nullopt;
  const double v = number(j, "limit");
  if (std::isinf(v)) return std::nullopt;
  return v;
}

// Values keyed by free-parameter name, returned in model order.
std::vector<double> by_name(const json& j, const RiskModel& model,
                            const std::string& what) {
  if (j.is_array()) {
    if (j.size() != model.dimension())
      throw ConfigError(what + " must have one entry per free parameter");
    std::vector<double> out;
    for (const auto& v : j) out.push_back(number(v, what));
    return out;
  }
  if (!j.is_object()) throw ConfigError(what + " must be an object");
  std::vector<double> out;
  for (const auto& name : model.free_params()) {
    if (!j.contains(name)) throw ConfigError(what + " is missing '" + name + "'");
    out.push_back(number(j.at(name), what + "." + name));
  }
  return out;
}

RiskModel parse_model(const json& j) {
  if (!j.is_object()) throw ConfigError("model must be an object");
  const auto freq = parse_frequency_kind(j.value("frequency", std::string("poisson")));
  const auto sev = parse_severity_kind(j.value("severity", std::string("lognormal")));
  std::vector<std::string> free;
  for (const auto& v : j.value("free", json::array())) free.push_back(v.get<std::string>());
  std::map<std::string, double> fixed;
  const auto fixed_doc = j.value("fixed", json::object());
  for (const auto& [k, v] : fixed_doc.items())
    fixed[k] = number(v, "model.fixed." + k);
  if (free.empty()) throw ConfigError("model.free must list at least one parameter");
  return RiskModel(freq, sev, free, fixed);
}

CoverageSampler parse_coverages(const json& j, RunConfig& cfg) {
  const auto kind = j.value("kind", std::string("uniform"));
  if (kind == "uniform") {
    UniformCoverages u;
    if (j.contains("rate")) u.rate = range(j["rate"], "coverages.rate");
    if (j.contains("deductible")) u.deductible = range(j["deductible"], "coverages.deductible");
    if (j.contains("limit") && !j["limit"].is_null()) u.limit = range(j["limit"], "coverages.limit");
    return u;
  }
  if (kind == "pet_market") return pet_market_coverages();
  if (kind == "choice") {
    ChoiceCoverages c;
    for (const auto& v : j.at("rates")) c.rates.push_back(number(v, "rates"));
    for (const auto& v : j.at("deductibles")) c.deductibles.push_back(number(v, "deductibles"));
    for (const auto& v : j.at("limits")) c.limits.push_back(limit_value(v));
    return c;
  }
  if (kind == "list") {
    ListCoverages l;
    l.resample = j.value("resample", true);
    for (const auto& row : j.at("pool")) {
      if (!row.is_array() || row.size() != 3)
        throw ConfigError("coverage pool entries must be [r, d, l]");
      try {
        l.pool.push_back(CoverageSpec::make(number(row[0], "r"), number(row[1], "d"),
                                            limit_value(row[2])));
      } catch (const ArgumentError& e) {
        throw ConfigError(std::string("coverage pool: ") + e.what());
      }
    }
    return l;
  }
  if (kind == "resample") {
    cfg.coverage_source = j.at("path").get<std::string>();
    ListCoverages l;
    for (const auto& q : load_quotes(*cfg.coverage_source)) l.pool.push_back(q.coverage);
    return l;
  }
  throw ConfigError("unknown coverage sampler '" + kind + "'");
}

LoadingLink parse_loading(const json& j) {
  const auto kind = j.value("kind", std::string("linear"));
  if (kind == "linear") {
    LinearLoading l;
    if (j.contains("multiplier")) l.multiplier = range(j["multiplier"], "loading.multiplier");
    l.one_plus_eta = j.value("one_plus_eta", false);
    return l;
  }
  if (kind == "gompertz") {
    GompertzLoading g;
    if (j.contains("a")) g.a = range(j["a"], "loading.a");
    if (j.contains("b")) g.b = range(j["b"], "loading.b");
    if (j.contains("c")) g.c = number(j["c"], "loading.c");
    return g;
  }
  throw ConfigError("unknown loading link '" + kind + "'");
}

GridAxis parse_axis(const json& j) {
  GridAxis a;
  a.name = j.at("name").get<std::string>();
  const auto r = range(j.at("range"), "grid axis range");
  a.lo = r.lo;
  a.hi = r.hi;
  a.points = count(j.value("points", json(1)), "grid axis points");
  return a;
}

void check_axis(const GridAxis& a) {
  if (a.points < 1) throw ConfigError("grid axis '" + a.name + "' needs >= 1 point");
  if (!(a.lo <= a.hi)) throw ConfigError("grid axis '" + a.name + "' has lo > hi");
}

}  // namespace

double GridAxis::value(std::size_t k) const {
  if (points <= 1) return lo;
  return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
}

std::vector<GridAxis> parse_grid_spec(const std::string& spec) {
  std::vector<GridAxis> axes;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw ConfigError("grid spec entries must read name=lo:hi:points");
    GridAxis a;
    a.name = item.substr(0, eq);
    std::vector<std::string> parts;
    std::stringstream ps(item.substr(eq + 1));
    std::string p;
    while (std::getline(ps, p, ':')) parts.push_back(p);
    if (parts.size() != 3) throw ConfigError("grid spec entries must read name=lo:hi:points");
    try {
      a.lo = std::stod(parts[0]);
      a.hi = std::stod(parts[1]);
      a.points = static_cast<std::size_t>(std::stoul(parts[2]));
    } catch (const std::exception&) {
      throw ConfigError("grid spec '" + item + "' is not numeric");
    }
    check_axis(a);
    axes.push_back(a);
  }
  return axes;
}

RunConfig RunConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  RunConfig cfg;
  cfg.document = doc;
  try {
    if (doc.contains("model")) cfg.model = parse_model(doc["model"]);

    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();

    std::vector<double> lo, hi;
    const auto prior = doc.value("prior", json::object());
    for (const auto& name : cfg.model.free_params()) {
      if (!prior.contains(name))
        throw ConfigError("prior is missing bounds for '" + name + "'");
      const auto r = range(prior[name], "prior." + name);
      lo.push_back(r.lo);
      hi.push_back(r.hi);
    }
    cfg.prior = PriorBox::make(lo, hi);

    const auto abc = doc.value("abc", json::object());
    cfg.abc.population = count(abc.value("population", json(1000)), "abc.population");
    cfg.abc.replications = count(abc.value("replications", json(2000)), "abc.replications");
    cfg.abc.max_generations = count(abc.value("max_generations", json(100)), "abc.max_generations");
    cfg.abc.delta_eps = number(abc.value("delta_eps", json(1.0)), "abc.delta_eps");
    cfg.abc.min_generations =
        count(abc.value("min_generations", json(1)), "abc.min_generations");
    cfg.abc.eps_min = number(abc.value("eps_min", json(0.0)), "abc.eps_min");
    cfg.abc.max_proposals_per_accept =
        count(abc.value("max_proposals_per_accept", json(1000000)), "abc.max_proposals_per_accept");
    cfg.abc.workers = count(abc.value("workers", json(0)), "abc.workers");
    cfg.abc.seed = cfg.seed;
    cfg.abc.validate();
    cfg.predictive_replications =
        count(doc.value("predictive_replications", json(0)), "predictive_replications");

    if (doc.contains("corridor") && !doc["corridor"].is_null()) {
      const auto r = range(doc["corridor"], "corridor");
      cfg.corridor = Corridor::make(r.lo, r.hi);
    }

    if (doc.contains("input") && !doc["input"].is_null())
      cfg.input = doc["input"].get<std::string>();
    if (doc.contains("output")) cfg.output = doc["output"].get<std::string>();
    if (doc.contains("class_key") && !doc["class_key"].is_null())
      cfg.class_key = doc["class_key"].get<std::string>();

    if (doc.contains("synthetic") && !doc["synthetic"].is_null()) {
      const auto& s = doc["synthetic"];
      SyntheticSpec spec{cfg.model, by_name(s.at("theta"), cfg.model, "synthetic.theta")};
      if (s.contains("coverages")) spec.coverages = parse_coverages(s["coverages"], cfg);
      if (s.contains("loading")) spec.link = parse_loading(s["loading"]);
      spec.count = count(s.value("n", json(100)), "synthetic.n");
      spec.seed = s.contains("seed") ? s["seed"].get<std::uint64_t>() : cfg.seed;
      spec.oracle_replications =
          count(s.value("oracle_replications", json(100000)), "synthetic.oracle_replications");
      spec.validate();
      cfg.batch = count(s.value("batch", json(1)), "synthetic.batch");
      if (cfg.batch < 1) throw ConfigError("synthetic.batch must be >= 1");
      cfg.synthetic = std::move(spec);
    }

    if (doc.contains("grid") && !doc["grid"].is_null()) {
      const auto& g = doc["grid"];
      GridConfig grid;
      if (g.contains("axes")) {
        if (g["axes"].is_string()) {
          grid.axes = parse_grid_spec(g["axes"].get<std::string>());
        } else {
          for (const auto& a : g["axes"]) grid.axes.push_back(parse_axis(a));
        }
      }
      for (const auto& a : grid.axes) check_axis(a);
      const auto target = g.value("target", std::string("commercial"));
      if (target == "pure") grid.target = GridTarget::pure;
      else if (target == "commercial") grid.target = GridTarget::commercial;
      else throw ConfigError("grid.target must be 'pure' or 'commercial'");
      if (g.contains("truth")) grid.truth = g["truth"].get<std::string>();
      cfg.grid = std::move(grid);
    }

    if (doc.contains("link")) {
      const auto& l = doc["link"];
      if (l.contains("theta")) cfg.link.theta = by_name(l["theta"], cfg.model, "link.theta");
      if (l.contains("artifact")) cfg.link.artifact = l["artifact"].get<std::string>();
      cfg.link.estimator = l.value("estimator", std::string("map"));
      if (cfg.link.estimator != "map" && cfg.link.estimator != "mode")
        throw ConfigError("link.estimator must be 'map' or 'mode'");
    }

    if (doc.contains("compare")) {
      const auto& c = doc["compare"];
      cfg.compare.seeds = count(c.value("seeds", json(50)), "compare.seeds");
      if (c.contains("links")) {
        cfg.compare.links.clear();
        for (const auto& v : c["links"]) {
          const auto s = v.get<std::string>();
          if (s != "linear" && s != "gompertz")
            throw ConfigError("compare.links entries must be 'linear' or 'gompertz'");
          cfg.compare.links.push_back(s);
        }
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

RunConfig RunConfig::from_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }
  return from_json(doc);
}

json config_echo(const RunConfig& config) {
  json echo = config.document;
  echo.erase("output");
  if (echo.contains("abc") && echo["abc"].is_object()) echo["abc"].erase("workers");
  return echo;
}

}  // namespace isoprice
