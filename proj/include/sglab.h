/* C interface to libsglab. All handles are opaque; every function that can
 * fail returns an sgl_status and leaves a message for sgl_last_error(). */
#ifndef SGLAB_H
#define SGLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SGL_API __declspec(dllexport)
#else
#define SGL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sgl_status {
  SGL_OK = 0,
  SGL_INVALID_ARGUMENT = 10,
  SGL_IO = 11,
  SGL_CONFIG = 12,
  SGL_GRID_MISMATCH = 13,
  SGL_INSUFFICIENT_SAMPLES = 14,
  SGL_NON_CONVERGENCE = 20,
  SGL_LOST_CONVEXITY = 21,
  SGL_BAD_DENSITY = 22,
  SGL_NON_CONVEX_INPUT = 23,
  SGL_SOLVER_STALL = 24,
  SGL_INDEFINITE_OPERATOR = 25,
  SGL_CFL_VIOLATION = 26,
  SGL_DEGENERATE_MAP = 27,
  SGL_FACTORIZATION_RESIDUAL = 28,
  SGL_SECTION_WRAPS_TORUS = 30,
  SGL_EMPTY_SECTION = 31,
  SGL_DEGENERATE_SECTION = 32,
  SGL_RESIDUAL_TOO_LARGE = 33,
  SGL_NEGATIVE_INPUT = 34,
  SGL_ZERO_ENERGY = 35,
  SGL_INVARIANT_VIOLATION = 40,
  SGL_INTERNAL = 99
} sgl_status;

typedef struct sgl_config sgl_config;
typedef struct sgl_field sgl_field;
typedef struct sgl_potential sgl_potential;

/* Message of the last failure on the calling thread ("" if none). */
SGL_API const char* sgl_last_error(void);
SGL_API const char* sgl_status_name(sgl_status s);
/* Process exit status for a status: 0 ok, 1 config, 2 solver, 3 invariant. */
SGL_API int sgl_exit_status(sgl_status s);

/* ---- configuration ---- */
SGL_API sgl_config* sgl_config_new(void);
SGL_API void sgl_config_free(sgl_config* cfg);
SGL_API sgl_status sgl_config_load(sgl_config* cfg, const char* path);
SGL_API sgl_status sgl_config_parse(sgl_config* cfg, const char* text);
SGL_API sgl_status sgl_config_set(sgl_config* cfg, const char* key, const char* value);

/* Runs a subcommand; reports go to the `out` directory of the config.
 * Returns the process exit status. */
SGL_API int sgl_run(const char* subcommand, const sgl_config* cfg);
/* NULL-terminated list of subcommand names. */
SGL_API const char* const* sgl_subcommands(void);

/* ---- fields ---- */
SGL_API sgl_status sgl_field_preset(const char* name, int n, sgl_field** out);
SGL_API sgl_status sgl_field_read(const char* path, sgl_field** out);
SGL_API sgl_status sgl_field_write(const sgl_field* f, const char* path);
SGL_API int sgl_field_n(const sgl_field* f);
/* Copies n*n values, row-major. */
SGL_API sgl_status sgl_field_values(const sgl_field* f, double* dst, size_t count);
SGL_API void sgl_field_free(sgl_field* f);

/* ---- Monge-Ampere ---- */
SGL_API sgl_status sgl_ma_solve(const sgl_field* rho, double lambda, double Lambda, double tol,
                                sgl_potential** out);
/* New field holding the periodic part q of P* = |x|^2/2 + q. */
SGL_API sgl_status sgl_potential_periodic(const sgl_potential* p, sgl_field** out);
SGL_API double sgl_potential_residual(const sgl_potential* p);
SGL_API int sgl_potential_newton_iters(const sgl_potential* p);
SGL_API void sgl_potential_free(sgl_potential* p);

#ifdef __cplusplus
}
#endif

#endif
