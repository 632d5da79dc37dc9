/* C ABI for the delaydist delay-distribution estimation library. */

#ifndef DELAYDIST_H
#define DELAYDIST_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every fallible function.
typedef enum ddist_status {
  DDIST_STATUS_OK = 0,
  // Invalid input: malformed JSON/CSV, bad parameters, broken invariants.
  DDIST_STATUS_INVALID_INPUT = 2,
  // The operation finished but the result carries nonconvergence flags.
  DDIST_STATUS_NOT_CONVERGED = 3,
  DDIST_STATUS_NULL_POINTER = 4,
  // A caller-supplied string is not valid UTF-8.
  DDIST_STATUS_INVALID_UTF8 = 5,
  // An internal panic was caught at the boundary.
  DDIST_STATUS_PANIC = 6,
} ddist_status;

// Opaque fit handle.
typedef struct ddist_fit ddist_fit;

// Opaque linelist handle.
typedef struct ddist_linelist ddist_linelist;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or NULL.
//
// The pointer stays valid until the next `ddist_*` call on the thread.
const char *ddist_last_error(void);

// Library version as a static NUL-terminated string.
const char *ddist_version(void);

// Frees a string returned through an out-pointer.
//
// # Safety
// `s` must be a pointer previously returned by this library (or NULL).
void ddist_string_free(char *s);

// Parses a linelist from CSV text plus sidecar-metadata JSON
// (`meta_json` may be NULL for defaults).
//
// # Safety
// `csv_text` (and `meta_json` when non-NULL) must be NUL-terminated strings;
// `out` must be a valid pointer.
enum ddist_status ddist_linelist_parse(const char *csv_text,
                                       const char *meta_json,
                                       struct ddist_linelist **out);

// Simulates a synthetic outbreak from a scenario JSON document; optionally
// returns the ground-truth CSV through `out_truth_csv` (pass NULL to skip).
//
// # Safety
// `scenario_json` must be NUL-terminated; `out` must be valid;
// `out_truth_csv` may be NULL.
enum ddist_status ddist_simulate(const char *scenario_json,
                                 struct ddist_linelist **out,
                                 char **out_truth_csv);

// Number of cases.
//
// # Safety
// `linelist` must be a live handle from this library (or NULL, giving 0).
size_t ddist_linelist_len(const struct ddist_linelist *linelist);

// Releases a linelist handle.
//
// # Safety
// `linelist` must be a handle from this library, passed at most once.
void ddist_linelist_free(struct ddist_linelist *linelist);

// Fits a delay distribution. `config_json` carries the family, the
// adjustment spec and optional fit options, mirroring the CLI:
// `{"family": "lognormal", "adjust": "censoring,truncation", "options": {...}}`.
//
// Returns `DDIST_STATUS_NOT_CONVERGED` (with a live handle in `out`) when
// the fit finished but failed its convergence diagnostics.
//
// # Safety
// `linelist` must be a live handle; `config_json` NUL-terminated; `out`
// valid.
enum ddist_status ddist_fit_run(const struct ddist_linelist *linelist,
                                const char *config_json,
                                struct ddist_fit **out);

// 1 when the fit passed its convergence diagnostics, else 0.
//
// # Safety
// `fit` must be a live handle (or NULL, giving 0).
int ddist_fit_converged(const struct ddist_fit *fit);

// Serializes the fit document (same schema as the CLI's fit.json).
//
// # Safety
// `fit` must be a live handle; `out_json` valid.
enum ddist_status ddist_fit_document_json(const struct ddist_fit *fit, char **out_json);

// Releases a fit handle.
//
// # Safety
// `fit` must be a handle from this library, passed at most once.
void ddist_fit_free(struct ddist_fit *fit);

// Ranks fits (same data, same adjustments, same method) by information
// criterion; the result is the comparison-table JSON.
//
// # Safety
// `fits` must point to `n_fits` live fit handles; `out_json` valid.
enum ddist_status ddist_compare(const struct ddist_fit *const *fits,
                                size_t n_fits,
                                char **out_json);

// Builds the reporting-checklist document for a fit over its linelist.
//
// `report_config_json` may be NULL for an empty config; otherwise it is the
// JSON form of the report options (unadjusted summary, comparison table,
// narrative notes, data-export reference). The epidemic curve and growth
// rate are computed from the linelist unless `include_curve` is 0.
// `as_markdown` selects the output format (1 markdown, 0 JSON).
//
// # Safety
// `fit` and `linelist` must be live handles; `report_config_json` may be
// NULL; `out_text` valid.
enum ddist_status ddist_report(const struct ddist_fit *fit,
                               const struct ddist_linelist *linelist,
                               const char *report_config_json,
                               int include_curve,
                               int as_markdown,
                               char **out_text);

// Runs the bias-adjustment decision tree. `growth_rate` is read only when
// `growth_rate_known` is nonzero. The chosen adjustment set is returned as
// JSON.
//
// # Safety
// `out_json` must be a valid pointer.
enum ddist_status ddist_check_adjustments(int real_time,
                                          int backward,
                                          int growth_rate_known,
                                          double growth_rate,
                                          int surveillance_ended_early,
                                          char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DELAYDIST_H */
