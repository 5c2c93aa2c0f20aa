#ifndef NOETHER_H
#define NOETHER_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Success.
 */
#define NOETHER_OK 0

/**
 * A pointer argument was null.
 */
#define NOETHER_ERR_NULL 1

/**
 * A string argument was not valid UTF-8.
 */
#define NOETHER_ERR_UTF8 2

/**
 * Parse or configuration failure; see `noether_last_error`.
 */
#define NOETHER_ERR_PARSE 3

/**
 * Unknown builtin system or integral name.
 */
#define NOETHER_ERR_NAME 4

/**
 * The coordinate buffer length does not match `2n + 1`.
 */
#define NOETHER_ERR_DIM 5

/**
 * Evaluation failed (singular point, contact degeneracy, math domain).
 */
#define NOETHER_ERR_EVAL 6

/**
 * Opaque handle to a compiled Hamiltonian system.
 */
typedef struct noether_system noether_system;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create a system from the builtin catalog. `name` is one of the strings
 * reported by `noether catalog --list`.
 */
int noether_system_builtin(const char *name, struct noether_system **out);

/**
 * Create a system from a JSON spec string (same schema as the CLI's
 * `--system` file argument).
 */
int noether_system_from_json(const char *json, struct noether_system **out);

/**
 * Release a system handle. Passing null is a no-op.
 */
void noether_system_free(struct noether_system *sys);

/**
 * Number of degrees of freedom `n`; coordinate buffers have length `2n+1`
 * in the order `t, q1..qn, p1..pn`.
 */
int noether_system_dof(const struct noether_system *sys, uintptr_t *out);

/**
 * Evaluate the Hamiltonian at a point.
 */
int noether_hamiltonian(const struct noether_system *sys,
                        const double *coords,
                        uintptr_t len,
                        double *out);

/**
 * Evaluate the elementary action `rho = p . dH/dp - H` at a point.
 */
int noether_elementary_action(const struct noether_system *sys,
                              const double *coords,
                              uintptr_t len,
                              double *out);

/**
 * Evaluate the characteristic field `Z = (1, dH/dp, -dH/dq)` into a buffer
 * of length `2n+1` (components ordered `tau, xi1..xin, eta1..etan`).
 */
int noether_characteristic_field(const struct noether_system *sys,
                                 const double *coords,
                                 uintptr_t len,
                                 double *out);

/**
 * Derive the Noether symmetry of the named integral at a point. The output
 * buffer must have length `2n+1` (`tau, xi1..xin, eta1..etan`).
 */
int noether_derive_symmetry(const struct noether_system *sys,
                            const char *integral,
                            const double *coords,
                            uintptr_t len,
                            double eps_rho,
                            double *out);

/**
 * Maximum relative residual of the symmetry conditions for the symmetry
 * derived from the named integral, evaluated at a point.
 */
int noether_symmetry_residual(const struct noether_system *sys,
                              const char *integral,
                              const double *coords,
                              uintptr_t len,
                              double *out);

/**
 * Contraction `i_v alpha` of the Poincare-Cartan form with a field given
 * as a `2n+1` component buffer.
 */
int noether_pc_contract(const struct noether_system *sys,
                        const double *coords,
                        uintptr_t len,
                        const double *field,
                        uintptr_t field_len,
                        double *out);

/**
 * Copy the most recent error message on this thread into `buf` (truncated
 * to `cap - 1` bytes, always NUL-terminated when `cap > 0`). Returns the
 * full message length in bytes.
 */
uintptr_t noether_last_error(char *buf, uintptr_t cap);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* NOETHER_H */
