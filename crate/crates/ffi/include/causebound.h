#ifndef CAUSEBOUND_H
#define CAUSEBOUND_H

/* Generated by cbindgen from causebound-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define CB_OK 0

#define CB_ERR_PARSE 2

#define CB_ERR_MISMATCH 3

#define CB_ERR_INFEASIBLE 4

#define CB_ERR_SOLVER 5

// Null handle or argument.
#define CB_ERR_NULL 6

// Opaque dataset handle.
typedef struct CbDataset CbDataset;

// Opaque graph handle.
typedef struct CbGraph CbGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent error on this thread. Valid until the next
// failing call; do not free.
const char *cb_last_error(void);

// Engine version as a static string; do not free.
const char *cb_version(void);

// Parses a graph from its JSON form into a new handle.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be a valid pointer.
int32_t cb_graph_parse(const char *json, struct CbGraph **out);

// # Safety
// `g` must come from `cb_graph_parse` and not have been freed.
void cb_graph_free(struct CbGraph *g);

// Parses a CSV dataset (header row of variable names, integer-coded rows)
// against a graph's declared cardinalities.
//
// # Safety
// `csv` must be NUL-terminated, `g` a live graph handle, `out` valid.
int32_t cb_dataset_parse_csv(const char *csv, const struct CbGraph *g, struct CbDataset **out);

// # Safety
// `d` must come from `cb_dataset_parse_csv` and not have been freed.
void cb_dataset_free(struct CbDataset *d);

// Frees a string returned by this library.
//
// # Safety
// `s` must have been returned by a `cb_*` function and not yet freed.
void cb_string_free(char *s);

// Exact LP bounds on the empirical joint of the dataset (no candidate
// search). Writes the interval into `lower`/`upper`.
//
// # Safety
// Handles must be live; name pointers NUL-terminated; out pointers valid.
int32_t cb_bounds_lp(const struct CbGraph *g,
                     const struct CbDataset *d,
                     const char *treatment,
                     const char *outcome,
                     int32_t treatment_value,
                     int32_t outcome_value,
                     bool ate,
                     double *lower,
                     double *upper);

// Full pipeline: confidence box, candidate net, per-candidate bounds,
// decomposition, decision. On success writes the report JSON into
// `report_json` (free with `cb_string_free`) and the verdict into
// `decision`: 10 return, 11 observe, 12 collect.
//
// `gamma` below 0 means "use the empirical outcome rate"; `solver` is
// 0 = lp, 1 = gradient, 2 = both.
//
// # Safety
// Handles must be live; name pointers NUL-terminated; out pointers valid.
int32_t cb_decompose(const struct CbGraph *g,
                     const struct CbDataset *d,
                     const char *treatment,
                     const char *outcome,
                     int32_t treatment_value,
                     int32_t outcome_value,
                     bool ate,
                     double alpha,
                     double eps_s,
                     size_t net_samples,
                     uint64_t seed,
                     int32_t solver,
                     double gamma,
                     char **report_json,
                     int32_t *decision);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAUSEBOUND_H */
