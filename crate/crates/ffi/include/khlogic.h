#ifndef KHLOGIC_H
#define KHLOGIC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum KhStatus {
  KH_STATUS_OK = 0,
  KH_STATUS_NULL_POINTER = 1,
  KH_STATUS_INVALID_UTF8 = 2,
  KH_STATUS_PARSE_ERROR = 3,
  KH_STATUS_MODEL_ERROR = 4,
  KH_STATUS_UNKNOWN_STATE = 5,
  KH_STATUS_UNDECLARED_AGENT = 6,
  KH_STATUS_RESOURCE_CAP = 7,
  KH_STATUS_PROOF_ERROR = 8,
  KH_STATUS_PANIC = 9,
} KhStatus;

/**
 * A parsed formula.
 */
typedef struct KhFormula KhFormula;

/**
 * A validated LTS^U.
 */
typedef struct KhModel KhModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message of this thread; empty after a successful call. The
 * pointer stays valid until the next call into this library on the thread.
 */
const char *kh_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void kh_string_free(char *s);

/**
 * Loads and validates a model from its JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum KhStatus kh_model_from_json(const char *json, struct KhModel **out);

/**
 * # Safety
 * `m` must come from [`kh_model_from_json`] and not have been freed, or be null.
 */
void kh_model_free(struct KhModel *m);

/**
 * Number of states of the model.
 *
 * # Safety
 * `m` must be a live model handle; `out` must be writable.
 */
enum KhStatus kh_model_num_states(const struct KhModel *m, uintptr_t *out);

/**
 * Parses a formula; `agents` is a comma-separated agent list.
 *
 * # Safety
 * `formula` and `agents` must be NUL-terminated strings; `out` must be writable.
 */
enum KhStatus kh_formula_parse(const char *formula, const char *agents, struct KhFormula **out);

/**
 * # Safety
 * `f` must come from [`kh_formula_parse`] and not have been freed, or be null.
 */
void kh_formula_free(struct KhFormula *f);

/**
 * Renders a formula in core syntax.
 *
 * # Safety
 * `f` must be a live formula handle; `out` must be writable.
 */
enum KhStatus kh_formula_render(const struct KhFormula *f, char **out);

/**
 * Truth of a formula at the named state.
 *
 * # Safety
 * Handles must be live; `state` NUL-terminated; `out` writable.
 */
enum KhStatus kh_check(const struct KhModel *m,
                       const char *state,
                       const struct KhFormula *f,
                       bool *out);

/**
 * States satisfying a formula, as a JSON array of state names.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum KhStatus kh_extension(const struct KhModel *m, const struct KhFormula *f, char **out);

/**
 * Decides satisfiability. On sat, `certificate` receives the model JSON
 * with its `designated` state; otherwise it is set to null.
 *
 * # Safety
 * `f` must be live; `agents` NUL-terminated; outputs writable.
 */
enum KhStatus kh_satisfiable(const struct KhFormula *f,
                             const char *agents,
                             bool *is_sat,
                             char **certificate);

/**
 * Decides validity. When not valid, `countermodel` receives the model
 * JSON; otherwise it is set to null.
 *
 * # Safety
 * `f` must be live; `agents` NUL-terminated; outputs writable.
 */
enum KhStatus kh_valid(const struct KhFormula *f,
                       const char *agents,
                       bool *is_valid,
                       char **countermodel);

/**
 * Checks a proof script. `system` is `"KH"` or `"KHi"`, or null to use
 * the script's header. A rejected proof returns `KH_STATUS_PROOF_ERROR`
 * with the offending line in the error message.
 *
 * # Safety
 * `script` must be NUL-terminated; `system` NUL-terminated or null.
 */
enum KhStatus kh_prove(const char *script, const char *system);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KHLOGIC_H */
