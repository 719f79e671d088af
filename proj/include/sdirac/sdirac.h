#ifndef SDIRAC_SDIRAC_H
#define SDIRAC_SDIRAC_H

/* C interface of libsdirac: radial shooting for the cubic Dirac ground
 * state. Handles are opaque; every call returns a status code and, on
 * failure, leaves a message for sdirac_last_error() on the calling thread. */

#include <stddef.h>

#if defined(_WIN32)
#  if defined(SDIRAC_BUILDING_LIBRARY)
#    define SDIRAC_API __declspec(dllexport)
#  else
#    define SDIRAC_API __declspec(dllimport)
#  endif
#else
#  define SDIRAC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sdirac_status {
  SDIRAC_OK = 0,
  SDIRAC_E_USAGE = 1,       /* bad key, value or parameters */
  SDIRAC_E_COMPUTE = 2,     /* integration or bracketing failed */
  SDIRAC_E_VERIFY = 3,      /* the verification suite found a failure */
  SDIRAC_E_ARGUMENT = 4,    /* null handle or pointer */
  SDIRAC_E_IO = 5,          /* file could not be read or written */
  SDIRAC_E_INTERNAL = 6
} sdirac_status;

typedef struct sdirac_config sdirac_config;
typedef struct sdirac_result sdirac_result;

SDIRAC_API const char* sdirac_version(void);
/* Message of the last failing call on this thread ("" if none). */
SDIRAC_API const char* sdirac_last_error(void);

SDIRAC_API sdirac_status sdirac_config_create(sdirac_config** out);
SDIRAC_API void sdirac_config_destroy(sdirac_config* cfg);
/* Keys as in the config file; lambda and epsilon append. */
SDIRAC_API sdirac_status sdirac_config_set(sdirac_config* cfg, const char* key, const char* value);
SDIRAC_API sdirac_status sdirac_config_clear(sdirac_config* cfg, const char* key);
SDIRAC_API sdirac_status sdirac_config_load_file(sdirac_config* cfg, const char* path);
SDIRAC_API sdirac_status sdirac_config_load_text(sdirac_config* cfg, const char* text);

/* Runs a command (ground-state, classify, asymptotics, portrait, verify).
 * A result is produced whenever the command name is known, also for
 * failed runs; its exit code says how the run went. The return value is
 * the same code as a status. */
SDIRAC_API sdirac_status sdirac_run(const sdirac_config* cfg, const char* command,
                                    sdirac_result** out);
SDIRAC_API void sdirac_result_destroy(sdirac_result* res);

SDIRAC_API int sdirac_result_exit_code(const sdirac_result* res);
/* JSON envelope; owned by the result. */
SDIRAC_API const char* sdirac_result_json(const sdirac_result* res);
SDIRAC_API size_t sdirac_result_table_count(const sdirac_result* res);
SDIRAC_API const char* sdirac_result_table_name(const sdirac_result* res, size_t index);
SDIRAC_API const char* sdirac_result_table_csv(const sdirac_result* res, size_t index);
SDIRAC_API size_t sdirac_result_diagnostic_count(const sdirac_result* res);
SDIRAC_API const char* sdirac_result_diagnostic(const sdirac_result* res, size_t index);
/* Writes per the run's format/out settings (stdout when out is empty). */
SDIRAC_API sdirac_status sdirac_result_write(const sdirac_result* res);

/* Pointwise primitives. */
SDIRAC_API sdirac_status sdirac_hamiltonian(double m, double omega, double u, double v, double* H);
SDIRAC_API sdirac_status sdirac_rhs_radial(double m, double omega, double r, double u, double v,
                                           double* du, double* dv);
SDIRAC_API sdirac_status sdirac_taylor_start(double m, double omega, double lambda, double r0,
                                             double* u, double* v);
SDIRAC_API sdirac_status sdirac_bubble(double r, double* U, double* V);

typedef enum sdirac_verdict {
  SDIRAC_VERDICT_A = 0,
  SDIRAC_VERDICT_ICANDIDATE = 1,
  SDIRAC_VERDICT_UNDECIDED = 2
} sdirac_verdict;

typedef struct sdirac_classification {
  double lambda;
  sdirac_verdict verdict;
  int k;
  int node_count;
  double evidence_r;
  double evidence_H;
  int has_certificate;
  double certificate_R;
} sdirac_classification;

/* Classifies one datum with the config's parameters and tolerances. */
SDIRAC_API sdirac_status sdirac_classify(const sdirac_config* cfg, double lambda,
                                         sdirac_classification* out);

#ifdef __cplusplus
}
#endif

#endif
