/* Exercises the C interface from plain C. */

#include <math.h>
#include <stdio.h>
#include <string.h>

#include "isoprice/isoprice.h"

static int failures = 0;

#define EXPECT(cond)                                              \
  do {                                                            \
    if (!(cond)) {                                                \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                 \
    }                                                             \
  } while (0)

static void count_lines(const char* line, void* user) {
  (void)line;
  ++*(int*)user;
}

int main(void) {
  double out = 0;
  EXPECT(strlen(isp_version()) > 0);

  EXPECT(isp_coverage_payout(10, 0.6, 2, 3, &out) == ISP_OK && out == 3);
  EXPECT(isp_coverage_payout(100, 1, 0, INFINITY, &out) == ISP_OK && out == 100);
  EXPECT(isp_coverage_payout(1, 1.5, 0, INFINITY, &out) == ISP_ERR_ARGUMENT);
  EXPECT(strlen(isp_last_error()) > 0);

  {
    const double x[] = {1, 2, 3}, y[] = {3, 1, 2}, w[] = {1, 1, 1};
    double fitted[3];
    EXPECT(isp_pava_fit(x, y, w, 3, fitted) == ISP_OK);
    EXPECT(fabs(fitted[0] - 2) < 1e-12 && fabs(fitted[2] - 2) < 1e-12);
    const double bad[] = {1, 0, 1};
    EXPECT(isp_pava_fit(x, y, bad, 3, fitted) == ISP_ERR_ARGUMENT);
  }
  {
    const double c[] = {2, 4}, p[] = {1, 2}, rw[] = {0.5, 0.5}, iw[] = {1, 1};
    EXPECT(isp_total_distance(c, p, rw, iw, 2, 1, 0.4, 0.7, &out) == ISP_OK && out == 0);
    EXPECT(isp_total_distance(c, p, rw, iw, 2, 1, 0.7, 0.4, &out) == ISP_ERR_CONFIG);
  }
  {
    const double w[] = {0.5, 0.25, 0.25}, z[] = {0, 0};
    EXPECT(isp_ess(w, 3, &out) == ISP_OK && fabs(out - 8.0 / 3.0) < 1e-12);
    EXPECT(isp_ess(z, 2, &out) == ISP_ERR_DEGENERATE_WEIGHTS);
  }
  {
    isp_quotes* q = NULL;
    double r, d, l, x;
    const char* label = NULL;
    EXPECT(isp_quotes_load(ISOPRICE_TEST_DATA "/table2_rows.csv", &q) == ISP_OK);
    EXPECT(isp_quotes_count(q) == 5);
    EXPECT(isp_quotes_get(q, 0, &r, &d, &l, &x) == ISP_OK);
    EXPECT(r == 0.60 && d == 0 && l == 1100 && x == 221.34);
    EXPECT(isp_quotes_get(q, 5, &r, &d, &l, &x) == ISP_ERR_ARGUMENT);
    EXPECT(isp_quotes_class_count(q) == 1);
    EXPECT(isp_quotes_class_label(q, 0, &label, NULL) == ISP_OK);
    EXPECT(strcmp(label, "dog|australian sheperd|female|2 years") == 0);
    isp_quotes_free(q);
    EXPECT(isp_quotes_load(ISOPRICE_TEST_DATA "/missing.csv", &q) == ISP_ERR_IO);
  }
  {
    isp_config* cfg = NULL;
    EXPECT(isp_config_parse("{\"prior\": 3}", &cfg) == ISP_ERR_CONFIG);
    EXPECT(isp_config_parse(
               "{\"model\": {\"frequency\": \"poisson\", \"severity\": \"lognormal\","
               " \"free\": [\"lambda\", \"sigma\"], \"fixed\": {\"mu\": 0}},"
               " \"prior\": {\"lambda\": [0, 10], \"sigma\": [0, 5]},"
               " \"abc\": {\"population\": 40, \"replications\": 100, \"max_generations\": 3,"
               "  \"delta_eps\": 0.1, \"workers\": 1},"
               " \"corridor\": [0.3, 0.66], \"seed\": 2,"
               " \"synthetic\": {\"theta\": [3, 1], \"n\": 20, \"oracle_replications\": 5000,"
               "  \"loading\": {\"kind\": \"linear\", \"multiplier\": [0.5, 2], \"one_plus_eta\": true}}}",
               &cfg) == ISP_OK);
    isp_fit* fit = NULL;
    int lines = 0;
    EXPECT(isp_fit_run(cfg, count_lines, &lines, &fit) == ISP_OK);
    EXPECT(lines >= 1);
    EXPECT(isp_fit_dimension(fit) == 2);
    {
      const size_t g = isp_fit_generations(fit);
      double eps[16], map[2];
      const char* text = NULL;
      size_t size = 0;
      EXPECT(g >= 1 && g <= 3);
      EXPECT(isp_fit_epsilons(fit, eps) == ISP_OK);
      for (size_t k = 1; k < g; ++k) EXPECT(eps[k] <= eps[k - 1]);
      EXPECT(isp_fit_map(fit, map) == ISP_OK);
      EXPECT(map[0] >= 0 && map[0] <= 10 && map[1] >= 0 && map[1] <= 5);
      EXPECT(isp_fit_artifact(fit, &text, &size) == ISP_OK);
      EXPECT(size > 100 && strstr(text, "\"epsilon_trace\"") != NULL);
    }
    isp_fit_free(fit);
    isp_config_free(cfg);
  }

  if (failures) fprintf(stderr, "%d failure(s)\n", failures);
  return failures ? 1 : 0;
}
