#ifndef COHPROJ_H
#define COHPROJ_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CpStatus {
  CP_STATUS_OK = 0,
  CP_STATUS_NULL_POINTER = 1,
  CP_STATUS_INVALID_ARGUMENT = 2,
  CP_STATUS_USAGE = 3,
  CP_STATUS_NUMERIC = 4,
  CP_STATUS_PANIC = 5,
} CpStatus;

typedef struct CpProjector CpProjector;

typedef struct CpReport CpReport;

typedef struct CpComplex {
  double re;
  double im;
} CpComplex;

/**
 * One result row. `quantity` points into the owning report.
 */
typedef struct CpRow {
  const char *quantity;
  struct CpComplex value;
  double tolerance;
  double residual;
  bool pass;
} CpRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null after a successful one. The pointer
 * stays valid until the next call on the same thread.
 */
const char *cp_last_error(void);

/**
 * Closed-form overlap `<p2,q2|p1,q1>` of single-mode ground-state coherent states.
 */
enum CpStatus cp_overlap_closed(double p2,
                                double q2,
                                double p1,
                                double q1,
                                struct CpComplex *result);

/**
 * Spin-`two_s / 2` projected two-mode kernel between `z2[0..2]` and `z1[0..2]`.
 */
enum CpStatus cp_su2_projected_kernel(const struct CpComplex *z2,
                                      const struct CpComplex *z1,
                                      double two_s,
                                      struct CpComplex *result);

/**
 * Projector onto `Phi^2 <= delta^2` for the hermitian `dim x dim` matrix given as row-major real
 * and imaginary parts. `imag` may be null for a real matrix.
 */
enum CpStatus cp_projector_spectral(const double *real,
                                    const double *imag,
                                    size_t dim,
                                    double delta,
                                    struct CpProjector **projector);

enum CpStatus cp_projector_rank(const struct CpProjector *projector, size_t *rank);

enum CpStatus cp_projector_entry(const struct CpProjector *projector,
                                 size_t row,
                                 size_t col,
                                 struct CpComplex *entry);

void cp_projector_free(struct CpProjector *projector);

size_t cp_experiment_count(void);

/**
 * Static name of the experiment at `index`, or null when out of range.
 */
const char *cp_experiment_name(size_t index);

/**
 * Runs a registered experiment at its defaults.
 */
enum CpStatus cp_experiment_run(const char *name, uint64_t seed, struct CpReport **report);

enum CpStatus cp_report_passed(const struct CpReport *report, bool *passed);

enum CpStatus cp_report_row_count(const struct CpReport *report, size_t *count);

enum CpStatus cp_report_row(const struct CpReport *report, size_t index, struct CpRow *row);

void cp_report_free(struct CpReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COHPROJ_H */
