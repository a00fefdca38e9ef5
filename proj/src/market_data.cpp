#include "isoprice/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "isoprice/errors.hpp"

namespace isoprice {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// RFC 4180 fields; quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_csv(const std::string& line, std::size_t row) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw ParseError(row, "unterminated quoted field");
  out.push_back(trim(field));
  return out;
}

double parse_number(const std::string& text, std::size_t row, const char* column) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (text.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v))
    throw ParseError(row, std::string("column '") + column +
                              "' is not a number: '" + text + "'");
  return v;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string quote_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::vector<Quote> parse_quotes(std::istream& in) {
  std::string line;
  std::size_t row = 1;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv(line, row);
  std::map<std::string, std::size_t> column;
  for (std::size_t k = 0; k < header.size(); ++k) column[lower(header[k])] = k;
  for (const char* name : kQuoteColumns)
    if (!column.count(name))
      throw ParseError(1, std::string("missing column '") + name + "'");
  const auto optional_column = [&](const char* name) -> std::optional<std::size_t> {
    auto it = column.find(name);
    if (it == column.end()) return std::nullopt;
    return it->second;
  };
  const auto w_iso = optional_column("w_iso");
  const auto w_rmse = optional_column("w_rmse");

  std::vector<Quote> quotes;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line, row);
    if (f.size() < header.size())
      throw ParseError(row, "expected " + std::to_string(header.size()) +
                                " fields, found " + std::to_string(f.size()));
    auto get = [&](const char* name) -> const std::string& { return f[column.at(name)]; };
    Quote q;
    q.specie = get("specie");
    q.breed = get("breed");
    q.gender = get("gender");
    q.insurance_carrier = get("insurance_carrier");
    q.age = get("age");
    const double r = parse_number(get("r"), row, "r");
    const double d = parse_number(get("d"), row, "d");
    std::optional<double> l;
    const auto& ltext = get("l");
    if (!ltext.empty() && lower(ltext) != "inf" && lower(ltext) != "+inf")
      l = parse_number(ltext, row, "l");
    q.premium = parse_number(get("x"), row, "x");
    if (!(r > 0 && r <= 1)) throw ParseError(row, "r must lie in (0, 1]");
    if (!(d >= 0)) throw ParseError(row, "d must be >= 0");
    if (l && !(*l > 0)) throw ParseError(row, "l must be > 0");
    if (!(q.premium > 0)) throw ParseError(row, "x must be > 0");
    q.coverage = CoverageSpec{r, d, l};
    if (w_iso && !f[*w_iso].empty()) {
      q.iso_weight = parse_number(f[*w_iso], row, "w_iso");
      if (!(q.iso_weight > 0)) throw ParseError(row, "w_iso must be > 0");
    }
    if (w_rmse && !f[*w_rmse].empty()) {
      q.rmse_weight = parse_number(f[*w_rmse], row, "w_rmse");
      if (!(*q.rmse_weight > 0)) throw ParseError(row, "w_rmse must be > 0");
    }
    quotes.push_back(std::move(q));
  }
  return quotes;
}

std::vector<Quote> load_quotes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open quote file " + path.string());
  return parse_quotes(in);
}

void write_quotes(std::ostream& out, std::span<const Quote> quotes) {
  const bool with_iso = std::any_of(quotes.begin(), quotes.end(),
                                    [](const Quote& q) { return q.iso_weight != 1.0; });
  const bool with_rmse = std::any_of(quotes.begin(), quotes.end(),
                                     [](const Quote& q) { return q.rmse_weight.has_value(); });
  out << "specie,breed,gender,insurance_carrier,r,l,d,age,x";
  if (with_iso) out << ",w_iso";
  if (with_rmse) out << ",w_rmse";
  out << '\n';
  for (const auto& q : quotes) {
    out << quote_field(q.specie) << ',' << quote_field(q.breed) << ','
        << quote_field(q.gender) << ',' << quote_field(q.insurance_carrier) << ','
        << format_number(q.coverage.rate) << ','
        << (q.coverage.limit ? format_number(*q.coverage.limit) : "inf") << ','
        << format_number(q.coverage.deductible) << ',' << quote_field(q.age) << ','
        << format_number(q.premium);
    if (with_iso) out << ',' << format_number(q.iso_weight);
    if (with_rmse) out << ',' << (q.rmse_weight ? format_number(*q.rmse_weight) : "");
    out << '\n';
  }
}

void save_quotes(const std::filesystem::path& path, std::span<const Quote> quotes) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_quotes(out, quotes);
  if (!out) throw IoError("failed writing " + path.string());
}

std::string RiskClassKey::label() const {
  return specie + "|" + breed + "|" + gender + "|" + age;
}

RiskClassKey RiskClassKey::parse(const std::string& label) {
  std::vector<std::string> parts;
  std::stringstream ss(label);
  std::string part;
  while (std::getline(ss, part, '|')) parts.push_back(trim(part));
  if (parts.size() != 4)
    throw ConfigError("class key must read 'specie|breed|gender|age', got '" +
                      label + "'");
  return RiskClassKey{parts[0], parts[1], parts[2], parts[3]};
}

RiskClassKey class_key(const Quote& q) {
  return RiskClassKey{q.specie, q.breed, q.gender, q.age};
}

std::vector<RiskClass> group_risk_classes(std::span<const Quote> quotes) {
  std::map<RiskClassKey, std::vector<Quote>> groups;
  for (const auto& q : quotes) groups[class_key(q)].push_back(q);
  std::vector<RiskClass> out;
  out.reserve(groups.size());
  for (auto& [key, qs] : groups) out.push_back(RiskClass{key, std::move(qs)});
  return out;
}

PricingProblem make_problem(std::span<const Quote> quotes,
                            std::optional<Corridor> corridor) {
  PricingProblem p;
  p.corridor = corridor;
  const auto defaults = uniform_weights(quotes.size());
  for (std::size_t i = 0; i < quotes.size(); ++i) {
    p.coverages.push_back(quotes[i].coverage);
    p.commercial.push_back(quotes[i].premium);
    p.iso_weights.push_back(quotes[i].iso_weight);
    p.rmse_weights.push_back(quotes[i].rmse_weight.value_or(defaults[i]));
  }
  return p;
}

ChoiceCoverages pet_market_coverages() {
  ChoiceCoverages c;
  c.rates = {0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  c.deductibles = {0, 20, 30, 50, 75, 100, 150};
  c.limits = {1000.0, 1100.0, 1500.0, 1800.0, 2000.0,
              2200.0, 2500.0, 3000.0, std::nullopt};
  return c;
}

void SyntheticSpec::validate() const {
  if (count < 1) throw ConfigError("synthetic sample size n must be >= 1");
  if (theta.size() != model.dimension())
    throw ConfigError("synthetic theta does not match the model's free parameters");
  if (oracle_replications < 1) throw ConfigError("oracle replications must be >= 1");
  auto check = [](Range r, const char* what) {
    if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi))
      throw ConfigError(std::string(what) + " range is empty");
  };
  if (auto* u = std::get_if<UniformCoverages>(&coverages)) {
    check(u->rate, "rate");
    check(u->deductible, "deductible");
    if (!(u->rate.lo > 0 && u->rate.hi <= 1)) throw ConfigError("rate range must lie in (0, 1]");
    if (!(u->deductible.lo >= 0)) throw ConfigError("deductible range must be >= 0");
    if (u->limit) {
      check(*u->limit, "limit");
      if (!(u->limit->lo > 0)) throw ConfigError("limit range must be > 0");
    }
  } else if (auto* c = std::get_if<ChoiceCoverages>(&coverages)) {
    if (c->rates.empty() || c->deductibles.empty() || c->limits.empty())
      throw ConfigError("coverage choice lists must be nonempty");
  } else {
    if (std::get<ListCoverages>(coverages).pool.empty())
      throw ConfigError("coverage pool is empty");
  }
  if (auto* l = std::get_if<LinearLoading>(&link)) {
    check(l->multiplier, "multiplier");
  } else {
    const auto& g = std::get<GompertzLoading>(link);
    check(g.a, "gompertz a");
    check(g.b, "gompertz b");
  }
}

SyntheticMarket generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t n = spec.count;
  Stream cov_stream(spec.seed, StreamTag::coverage);
  std::vector<CoverageSpec> covs;
  covs.reserve(n);
  auto pick = [&](std::size_t size) {
    return std::uniform_int_distribution<std::size_t>(0, size - 1)(cov_stream.engine);
  };
  for (std::size_t i = 0; i < n; ++i) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, UniformCoverages>) {
            const double r = cov_stream.uniform(s.rate.lo, s.rate.hi);
            const double d = cov_stream.uniform(s.deductible.lo, s.deductible.hi);
            std::optional<double> l;
            if (s.limit) l = cov_stream.uniform(s.limit->lo, s.limit->hi);
            covs.push_back(CoverageSpec::make(r, d, l));
          } else if constexpr (std::is_same_v<T, ChoiceCoverages>) {
            const double r = s.rates[pick(s.rates.size())];
            const double d = s.deductibles[pick(s.deductibles.size())];
            const auto l = s.limits[pick(s.limits.size())];
            covs.push_back(CoverageSpec::make(r, d, l));
          } else {
            covs.push_back(s.resample ? s.pool[pick(s.pool.size())]
                                      : s.pool[i % s.pool.size()]);
          }
        },
        spec.coverages);
  }

  Stream oracle(spec.seed, StreamTag::oracle);
  auto losses = sample_aggregate_losses(spec.model, spec.theta,
                                        spec.oracle_replications, oracle);
  const auto pure = pure_premiums_inplace(losses.draws, covs);

  SyntheticMarket out;
  auto& t = out.truth;
  t.model = spec.model.name();
  t.free_params = spec.model.free_params();
  t.theta = spec.theta;
  t.seed = spec.seed;
  t.oracle_replications = spec.oracle_replications;
  t.pure = pure;
  Stream load_stream(spec.seed, StreamTag::loading);
  for (std::size_t i = 0; i < n; ++i) {
    double x = 0.0;
    if (auto* lin = std::get_if<LinearLoading>(&spec.link)) {
      const double u = load_stream.uniform(lin->multiplier.lo, lin->multiplier.hi);
      const double m = lin->one_plus_eta ? 1.0 + u : u;
      t.multiplier.push_back(m);
      x = m * pure[i];
    } else {
      const auto& g = std::get<GompertzLoading>(spec.link);
      const double a = load_stream.uniform(g.a.lo, g.a.hi);
      const double b = load_stream.uniform(g.b.lo, g.b.hi);
      t.gompertz_a.push_back(a);
      t.gompertz_b.push_back(b);
      x = a * std::exp(-b * std::exp(-g.c * pure[i]));
    }
    t.commercial.push_back(x);
    if (!(x > 0)) t.degenerate = true;

    Quote q;
    q.specie = "dog";
    q.breed = "synthetic";
    q.gender = "female";
    q.age = "4 years";
    q.insurance_carrier = std::to_string(1 + i % 5);
    q.coverage = covs[i];
    q.premium = x;
    out.quotes.push_back(std::move(q));
  }
  return out;
}

nlohmann::json to_json(const GroundTruth& truth) {
  nlohmann::json j;
  j["model"] = truth.model;
  j["free_params"] = truth.free_params;
  j["theta"] = truth.theta;
  j["seed"] = truth.seed;
  j["oracle_replications"] = truth.oracle_replications;
  j["degenerate"] = truth.degenerate;
  j["pure_premium"] = truth.pure;
  j["commercial_premium"] = truth.commercial;
  std::vector<double> lr;
  for (std::size_t i = 0; i < truth.pure.size(); ++i)
    lr.push_back(truth.commercial[i] > 0 ? truth.pure[i] / truth.commercial[i] : 0.0);
  j["loss_ratio"] = lr;
  if (!truth.multiplier.empty()) j["multiplier"] = truth.multiplier;
  if (!truth.gompertz_a.empty()) {
    j["gompertz_a"] = truth.gompertz_a;
    j["gompertz_b"] = truth.gompertz_b;
  }
  return j;
}

LinearFit linear_baseline_fit(std::span<const double> pure,
                              std::span<const double> commercial) {
  const std::size_t n = pure.size();
  if (n == 0 || commercial.size() != n)
    throw ArgumentError("linear_baseline_fit: length mismatch or empty input");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += pure[i];
    my += commercial[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (pure[i] - mx) * (pure[i] - mx);
    sxy += (pure[i] - mx) * (commercial[i] - my);
  }
  LinearFit fit;
  fit.slope = sxx > 0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  fit.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    fit.residuals[i] = commercial[i] - (fit.slope * pure[i] + fit.intercept);
  return fit;
}

}  // namespace isoprice
