#ifndef DQIP_H
#define DQIP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success; the rest mirror the library's error kinds.
 */
typedef enum DqipStatus {
  DQIP_STATUS_OK = 0,
  DQIP_STATUS_LAYOUT = 1,
  DQIP_STATUS_VALIDATION = 2,
  DQIP_STATUS_DISCONNECTED = 3,
  DQIP_STATUS_CAPACITY = 4,
  DQIP_STATUS_PROTOCOL = 5,
  DQIP_STATUS_SHAPE = 6,
  DQIP_STATUS_CONFIG = 7,
  DQIP_STATUS_UNSUPPORTED = 8,
  DQIP_STATUS_IO = 9,
  DQIP_STATUS_JSON = 10,
  DQIP_STATUS_NULL_POINTER = 11,
  DQIP_STATUS_INVALID_UTF8 = 12,
  DQIP_STATUS_PANIC = 13,
} DqipStatus;

/**
 * Result of one experiment config.
 */
typedef struct DqipReport DqipReport;

/**
 * Pure state on a fixed number of qubits.
 */
typedef struct DqipState DqipState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *dqip_last_error(void);

/**
 * Library version as a static string.
 */
const char *dqip_version(void);

/**
 * Allocates `|0...0>` on `num_qubits` qubits.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum DqipStatus dqip_state_new(size_t num_qubits, struct DqipState **out);

/**
 * Releases a state. Null is ignored.
 *
 * # Safety
 * `state` must come from [`dqip_state_new`] and not be used afterwards.
 */
void dqip_state_free(struct DqipState *state);

/**
 * Applies a named gate (`h`, `x`, `z`, `cnot`, `cz`, `swap`, `cswap`).
 * Multi-qubit gates take `[control, target]` or `[control, a, b]`.
 *
 * # Safety
 * `state` must be live, `name` a NUL-terminated string and `targets` point
 * to `num_targets` entries.
 */
enum DqipStatus dqip_state_apply(struct DqipState *state,
                                 const char *name,
                                 const size_t *targets,
                                 size_t num_targets);

/**
 * Probability that measuring `qubit` gives 1.
 *
 * # Safety
 * `state` must be live and `out` writable.
 */
enum DqipStatus dqip_state_prob_one(const struct DqipState *state, size_t qubit, double *out);

/**
 * Fidelity `|<a|b>|` of two states of equal size.
 *
 * # Safety
 * Both states must be live and `out` writable.
 */
enum DqipStatus dqip_state_fidelity(const struct DqipState *a,
                                    const struct DqipState *b,
                                    double *out);

/**
 * Honest run of the GHZ certification protocol on a path of `nodes` nodes
 * with `copies` test copies per node.
 *
 * # Safety
 * `acceptance` and `output_fidelity` must be writable.
 */
enum DqipStatus dqip_ghz_certify_path(size_t nodes,
                                      size_t copies,
                                      double *acceptance,
                                      double *output_fidelity);

/**
 * Runs an experiment given as JSON text.
 *
 * # Safety
 * `config_json` must be NUL-terminated and `out` writable.
 */
enum DqipStatus dqip_run(const char *config_json, struct DqipReport **out);

/**
 * Scalar metric of a report by name.
 *
 * # Safety
 * `report` must be live, `name` NUL-terminated and `out` writable.
 */
enum DqipStatus dqip_report_metric(const struct DqipReport *report, const char *name, double *out);

/**
 * JSON text of a report, owned by the report.
 *
 * # Safety
 * `report` must be live; the string dies with it.
 */
const char *dqip_report_json(const struct DqipReport *report);

/**
 * CSV text of a report, owned by the report.
 *
 * # Safety
 * `report` must be live; the string dies with it.
 */
const char *dqip_report_csv(const struct DqipReport *report);

/**
 * Releases a report. Null is ignored.
 *
 * # Safety
 * `report` must come from [`dqip_run`] and not be used afterwards.
 */
void dqip_report_free(struct DqipReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DQIP_H */
