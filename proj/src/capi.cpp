#include "isoprice/isoprice.h"

#include <cmath>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "isoprice/commands.hpp"
#include "isoprice/config.hpp"
#include "isoprice/discrepancy.hpp"
#include "isoprice/errors.hpp"
#include "isoprice/isotonic.hpp"
#include "isoprice/market_data.hpp"

struct isp_quotes {
  std::vector<isoprice::Quote> quotes;
  std::vector<std::string> labels;
};

struct isp_config {
  isoprice::RunConfig config;
};

struct isp_fit {
  isoprice::FitReport report;
  std::string artifact;
};

namespace {

thread_local std::string last_error;

isp_status fail(isp_status status, const char* what) {
  last_error = what;
  return status;
}

template <class F>
isp_status guarded(F&& body) {
  last_error.clear();
  try {
    body();
    return ISP_OK;
  } catch (const isoprice::Error& e) {
    return fail(static_cast<isp_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(ISP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(ISP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(ISP_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw isoprice::ArgumentError(what);
}

isoprice::LogFn logger(isp_log_fn log, void* user) {
  if (!log) return {};
  return [log, user](const std::string& line) { log(line.c_str(), user); };
}

std::optional<double> limit_of(double l) {
  if (std::isinf(l) && l > 0) return std::nullopt;
  return l;
}

}  // namespace

extern "C" {

const char* isp_version(void) { return isoprice::kVersion; }

const char* isp_last_error(void) { return last_error.c_str(); }

isp_status isp_coverage_payout(double x, double rate, double deductible, double limit,
                               double* out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    *out = isoprice::coverage_payout(
        x, isoprice::CoverageSpec::make(rate, deductible, limit_of(limit)));
  });
}

isp_status isp_pava_fit(const double* x, const double* y, const double* w, size_t n,
                        double* fitted) {
  return guarded([&] {
    require(n == 0 || (x && y && w && fitted), "null array argument");
    const auto fit = isoprice::pava_fit({x, n}, {y, n}, {w, n});
    const auto values = fit.fitted();
    std::copy(values.begin(), values.end(), fitted);
  });
}

isp_status isp_total_distance(const double* commercial, const double* pure,
                              const double* rmse_weights, const double* iso_weights,
                              size_t n, int use_corridor, double lr_low, double lr_high,
                              double* out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    require(n == 0 || (commercial && pure && rmse_weights && iso_weights),
            "null array argument");
    std::optional<isoprice::Corridor> corridor;
    if (use_corridor) corridor = isoprice::Corridor::make(lr_low, lr_high);
    *out = isoprice::total_distance({commercial, n}, {pure, n}, {rmse_weights, n},
                                    {iso_weights, n}, corridor);
  });
}

isp_status isp_ess(const double* weights, size_t n, double* out) {
  return guarded([&] {
    require(out != nullptr && (n == 0 || weights), "null argument");
    *out = isoprice::ess({weights, n});
  });
}

isp_status isp_quotes_load(const char* path, isp_quotes** out) {
  return guarded([&] {
    require(path && out, "null argument");
    auto handle = std::make_unique<isp_quotes>();
    handle->quotes = isoprice::load_quotes(path);
    for (const auto& cls : isoprice::group_risk_classes(handle->quotes))
      handle->labels.push_back(cls.key.label());
    *out = handle.release();
  });
}

void isp_quotes_free(isp_quotes* quotes) { delete quotes; }

size_t isp_quotes_count(const isp_quotes* quotes) {
  return quotes ? quotes->quotes.size() : 0;
}

isp_status isp_quotes_get(const isp_quotes* quotes, size_t index, double* rate,
                          double* deductible, double* limit, double* premium) {
  return guarded([&] {
    require(quotes != nullptr, "quotes is null");
    require(index < quotes->quotes.size(), "quote index out of range");
    const auto& q = quotes->quotes[index];
    if (rate) *rate = q.coverage.rate;
    if (deductible) *deductible = q.coverage.deductible;
    if (limit) *limit = q.coverage.limit.value_or(INFINITY);
    if (premium) *premium = q.premium;
  });
}

size_t isp_quotes_class_count(const isp_quotes* quotes) {
  return quotes ? quotes->labels.size() : 0;
}

isp_status isp_quotes_class_label(const isp_quotes* quotes, size_t k, const char** label,
                                  size_t* size) {
  return guarded([&] {
    require(quotes && label, "null argument");
    require(k < quotes->labels.size(), "class index out of range");
    *label = quotes->labels[k].c_str();
    if (size) *size = quotes->labels[k].size();
  });
}

isp_status isp_config_parse(const char* json_text, isp_config** out) {
  return guarded([&] {
    require(json_text && out, "null argument");
    auto handle = std::make_unique<isp_config>();
    handle->config = isoprice::RunConfig::from_text(json_text);
    *out = handle.release();
  });
}

void isp_config_free(isp_config* config) { delete config; }

isp_status isp_fit_run(const isp_config* config, isp_log_fn log, void* user, isp_fit** out) {
  return guarded([&] {
    require(config && out, "null argument");
    const auto& c = config->config;
    if (c.class_key && *c.class_key == "all")
      throw isoprice::ConfigError("isp_fit_run fits one risk class; use isp_cmd_fit for 'all'");
    const auto market = isoprice::load_market(c);
    const auto cls = isoprice::select_classes(c, market.quotes).front();
    auto handle = std::make_unique<isp_fit>();
    handle->report = isoprice::fit_problem(c, isoprice::make_problem(cls.quotes, c.corridor),
                                           cls.key.label(), logger(log, user));
    handle->artifact = isoprice::run_artifact(c, handle->report).dump(2);
    *out = handle.release();
  });
}

void isp_fit_free(isp_fit* fit) { delete fit; }

size_t isp_fit_dimension(const isp_fit* fit) { return fit ? fit->report.map.size() : 0; }

size_t isp_fit_generations(const isp_fit* fit) {
  return fit ? fit->report.result.generations.size() : 0;
}

isp_status isp_fit_epsilons(const isp_fit* fit, double* out) {
  return guarded([&] {
    require(fit && out, "null argument");
    const auto trace = fit->report.result.epsilon_trace();
    std::copy(trace.begin(), trace.end(), out);
  });
}

isp_status isp_fit_map(const isp_fit* fit, double* out) {
  return guarded([&] {
    require(fit && out, "null argument");
    std::copy(fit->report.map.begin(), fit->report.map.end(), out);
  });
}

isp_status isp_fit_mode(const isp_fit* fit, double* out) {
  return guarded([&] {
    require(fit && out, "null argument");
    std::copy(fit->report.mode.begin(), fit->report.mode.end(), out);
  });
}

isp_status isp_fit_artifact(const isp_fit* fit, const char** json_text, size_t* size) {
  return guarded([&] {
    require(fit && json_text, "null argument");
    *json_text = fit->artifact.c_str();
    if (size) *size = fit->artifact.size();
  });
}

isp_status isp_cmd_simulate(const isp_config* config, isp_log_fn log, void* user) {
  return guarded([&] {
    require(config != nullptr, "config is null");
    isoprice::cmd_simulate(config->config, logger(log, user));
  });
}

isp_status isp_cmd_fit(const isp_config* config, isp_log_fn log, void* user) {
  return guarded([&] {
    require(config != nullptr, "config is null");
    isoprice::cmd_fit(config->config, logger(log, user));
  });
}

isp_status isp_cmd_distance_grid(const isp_config* config, isp_log_fn log, void* user) {
  return guarded([&] {
    require(config != nullptr, "config is null");
    isoprice::cmd_distance_grid(config->config, logger(log, user));
  });
}

isp_status isp_cmd_isotonic_link(const isp_config* config, isp_log_fn log, void* user) {
  return guarded([&] {
    require(config != nullptr, "config is null");
    isoprice::cmd_isotonic_link(config->config, logger(log, user));
  });
}

isp_status isp_cmd_compare_links(const isp_config* config, isp_log_fn log, void* user) {
  return guarded([&] {
    require(config != nullptr, "config is null");
    isoprice::cmd_compare_links(config->config, logger(log, user));
  });
}

}  // extern "C"
