/* C interface to the LIA simulation core. All strings passed in are UTF-8 and
 * NUL-terminated. Strings returned through `char**` belong to the caller and
 * must be released with lia_string_free. Handles are released with the
 * matching *_free function. Every call returns a lia_status; on failure the
 * message is available from lia_last_error() on the same thread. */
#ifndef LIA_H
#define LIA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LIA_API __declspec(dllexport)
#else
#define LIA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lia_status {
    LIA_OK = 0,
    LIA_ERR_INVALID_ARG = 1, /* malformed input or out-of-range argument */
    LIA_ERR_CONFIG = 2,      /* configuration rejected */
    LIA_ERR_IO = 3,          /* file could not be read or written */
    LIA_ERR_ASSERTION = 4,   /* an inline invariant check failed */
    LIA_ERR_INTERNAL = 5
} lia_status;

typedef enum lia_run_kind { LIA_RUN_SWEEP = 0, LIA_RUN_ROBUSTNESS = 1, LIA_RUN_LARGE = 2, LIA_RUN_LAI = 3 } lia_run_kind;

typedef struct lia_topology lia_topology;
typedef struct lia_run lia_run;

LIA_API const char* lia_last_error(void);
LIA_API const char* lia_version(void);
LIA_API void lia_string_free(char* s);

/* ---- topologies ---- */

/* kind: "starlink", "internet" or "dsn". */
LIA_API lia_status lia_topology_generate(const char* kind, uint64_t seed, lia_topology** out);
LIA_API lia_status lia_topology_load(const char* path, lia_topology** out);
LIA_API lia_status lia_topology_save(const lia_topology* topo, const char* path);
LIA_API void lia_topology_free(lia_topology* topo);
LIA_API lia_status lia_topology_node_count(const lia_topology* topo, size_t* out);
/* JSON object: kind, nodes, links, regions, pairwise delay min/median/max. */
LIA_API lia_status lia_topology_info(const lia_topology* topo, char** json_out);
/* Shortest delays (ms) from every node to `horizon_node`; `out` must hold
 * node_count doubles. Unreachable nodes get +inf. */
LIA_API lia_status lia_topology_distances(const lia_topology* topo, size_t horizon_node, double* out, size_t out_len);

/* ---- single-instance clearing ---- */

/* instance_json: {topology_ref, horizon:{node,time_ms}, bids:[...]};
 * mechanism_json: {"mechanism": "lia", "lambda_per_s": 1, "batch_ms": 50, "k": 1}
 * (only "mechanism" is required). An optional "error_model" entry in the
 * mechanism object is applied with "noise_seed". Writes the outcome JSON. */
LIA_API lia_status lia_clear_json(const lia_topology* topo, const char* instance_json, const char* mechanism_json, char** outcome_json);

/* ---- experiment runs ---- */

/* config_json may be NULL or "" for the run kind's defaults; its fields
 * override those defaults. */
LIA_API lia_status lia_run_execute(lia_run_kind kind, const char* config_json, lia_run** out);
LIA_API void lia_run_free(lia_run* run);
LIA_API lia_status lia_run_record_count(const lia_run* run, size_t* out);
LIA_API lia_status lia_run_write_records(const lia_run* run, const char* path);
LIA_API lia_status lia_run_write_summary(const lia_run* run, const char* path);
LIA_API lia_status lia_run_write_lai_curves(const lia_run* run, const char* path);
LIA_API lia_status lia_run_summary(const lia_run* run, char** json_out);
LIA_API lia_status lia_run_table(const lia_run* run, char** text_out);
/* Nonzero when every inline check (welfare bound, Sync/HoldBack agreement,
 * clock-bias invariance) passed. */
LIA_API lia_status lia_run_checks_ok(const lia_run* run, int* ok);

/* ---- self-verification ---- */

/* Runs every golden check. options_json may be NULL; it accepts
 * {instances, large_instances, spread_instances, jobs, seed}. */
LIA_API lia_status lia_verify(const char* options_json, char** report_text, size_t* failures);

#ifdef __cplusplus
}
#endif

#endif
