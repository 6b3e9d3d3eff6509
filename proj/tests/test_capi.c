/* Exercises the C interface from C. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "sglab.h"

static int failures = 0;
#define EXPECT(cond)                                             \
  do {                                                           \
    if (!(cond)) {                                               \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                \
    }                                                            \
  } while (0)

int main(void) {
  int count = 0;
  for (const char* const* s = sgl_subcommands(); *s; ++s) ++count;
  EXPECT(count == 8);

  sgl_field* rho = NULL;
  EXPECT(sgl_field_preset("perturbed", 32, &rho) == SGL_OK);
  EXPECT(sgl_field_n(rho) == 32);

  sgl_potential* p = NULL;
  EXPECT(sgl_ma_solve(rho, 0.7, 1.3, 0.0, &p) == SGL_OK);
  EXPECT(sgl_potential_residual(p) < 1e-6);
  EXPECT(sgl_potential_newton_iters(p) > 0);

  sgl_field* q = NULL;
  EXPECT(sgl_potential_periodic(p, &q) == SGL_OK);
  double* v = malloc(32 * 32 * sizeof(double));
  EXPECT(sgl_field_values(q, v, 32 * 32) == SGL_OK);
  double mean = 0.0;
  for (int k = 0; k < 32 * 32; ++k) mean += v[k];
  EXPECT(fabs(mean / (32 * 32)) < 1e-12);
  EXPECT(sgl_field_values(q, v, 10) == SGL_INVALID_ARGUMENT);
  free(v);

  /* Errors carry a code, a name and a message. */
  sgl_potential* bad = NULL;
  const sgl_status s = sgl_ma_solve(rho, 0.9, 1.1, 0.0, &bad);
  EXPECT(s == SGL_BAD_DENSITY);
  EXPECT(bad == NULL);
  EXPECT(strcmp(sgl_status_name(s), "BadDensity") == 0);
  EXPECT(strlen(sgl_last_error()) > 0);
  EXPECT(sgl_exit_status(s) == 2);
  EXPECT(sgl_exit_status(SGL_CONFIG) == 1);
  EXPECT(sgl_exit_status(SGL_INVARIANT_VIOLATION) == 3);
  sgl_field* none = NULL;
  EXPECT(sgl_field_preset("nope", 32, &none) == SGL_CONFIG);
  EXPECT(none == NULL);
  EXPECT(sgl_ma_solve(NULL, 0.7, 1.3, 0.0, &p) == SGL_INVALID_ARGUMENT);

  sgl_config* cfg = sgl_config_new();
  EXPECT(sgl_config_parse(cfg, "n = 16\nrho0 = uniform\n") == SGL_OK);
  EXPECT(sgl_config_parse(cfg, "broken line") == SGL_CONFIG);
  EXPECT(sgl_config_set(cfg, "out", "sglab_capi_out") == SGL_OK);
  EXPECT(sgl_run("ma-solve", cfg) == 0);
  EXPECT(sgl_run("no-such-command", cfg) == 1);
  EXPECT(sgl_config_load(cfg, "/nonexistent/x.cfg") == SGL_CONFIG);
  sgl_config_free(cfg);

  sgl_field_free(q);
  sgl_potential_free(p);
  sgl_field_free(rho);
  if (failures) fprintf(stderr, "%d failures\n", failures);
  else printf("C interface: all checks passed\n");
  return failures ? 1 : 0;
}
