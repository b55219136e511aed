#ifndef DIFFOPTS_H
#define DIFFOPTS_H

/* Generated from the diffopts-capi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Operation succeeded.
 */
#define DIFFOPTS_OK 0

/**
 * A required pointer argument was null.
 */
#define DIFFOPTS_ERR_NULL_ARGUMENT 1

/**
 * A string argument was not valid UTF-8.
 */
#define DIFFOPTS_ERR_INVALID_UTF8 2

/**
 * The operation failed; details via `diffopts_last_error`.
 */
#define DIFFOPTS_ERR_RUNTIME 3

/**
 * Opaque handle to a loaded domain with its graph and walk spectrum.
 */
typedef struct DiffoptsDomain DiffoptsDomain;

/**
 * Opaque handle to a discovered option set.
 */
typedef struct DiffoptsOptionSet DiffoptsOptionSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread.
 *
 * The pointer is owned by the library and stays valid until the next
 * failing call on the same thread. Never null; empty before any failure.
 */
const char *diffopts_last_error(void);

/**
 * Load a domain from ASCII map text and precompute its graph and walk
 * spectrum.
 *
 * On success writes a handle to `out`; release it with
 * `diffopts_domain_free`.
 *
 * # Safety
 *
 * `map_text` must point to a NUL-terminated string and `out` to writable
 * pointer storage.
 */
int diffopts_domain_load(const char *map_text, struct DiffoptsDomain **out);

/**
 * Release a domain handle. Null is ignored.
 *
 * # Safety
 *
 * `domain` must be null or a pointer produced by `diffopts_domain_load`
 * that has not been freed yet.
 */
void diffopts_domain_free(struct DiffoptsDomain *domain);

/**
 * Number of free cells (states) in the domain.
 *
 * # Safety
 *
 * `domain` must be a live handle and `out` writable.
 */
int diffopts_domain_num_states(const struct DiffoptsDomain *domain, size_t *out);

/**
 * Discover diffusion options at scale `t`.
 *
 * On success writes a handle to `out`; release it with
 * `diffopts_options_free`.
 *
 * # Safety
 *
 * `domain` must be a live handle and `out` writable pointer storage.
 */
int diffopts_discover(const struct DiffoptsDomain *domain,
                      uint32_t t,
                      struct DiffoptsOptionSet **out);

/**
 * Release an option-set handle. Null is ignored.
 *
 * # Safety
 *
 * `set` must be null or a pointer produced by `diffopts_discover` that has
 * not been freed yet.
 */
void diffopts_options_free(struct DiffoptsOptionSet *set);

/**
 * Number of options in the set.
 *
 * # Safety
 *
 * `set` must be a live handle and `out` writable.
 */
int diffopts_options_count(const struct DiffoptsOptionSet *set, size_t *out);

/**
 * Goal state index of option `index`.
 *
 * # Safety
 *
 * `set` must be a live handle and `out` writable.
 */
int diffopts_option_goal(const struct DiffoptsOptionSet *set, size_t index, size_t *out);

/**
 * Evaluate the scale-`t` score field into `out`, one value per state.
 *
 * `len` must equal the domain's state count.
 *
 * # Safety
 *
 * `domain` must be a live handle and `out` must point to `len` writable
 * doubles.
 */
int diffopts_score_field(const struct DiffoptsDomain *domain, uint32_t t, double *out, size_t len);

/**
 * Compute the domain-difficulty index.
 *
 * # Safety
 *
 * `domain` must be a live handle and `out` writable.
 */
int diffopts_difficulty(const struct DiffoptsDomain *domain, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIFFOPTS_H */
