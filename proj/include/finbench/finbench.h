/* C interface to the finbench harness.
 *
 * Every call returns an fb_status; FB_OK is zero. On failure the session keeps
 * a message retrievable with fb_last_error(). Successful stage calls leave a
 * JSON summary in fb_last_output(). Returned strings stay valid until the next
 * call on the same session. Sessions are not thread-safe; use one per thread.
 */
#ifndef FINBENCH_FINBENCH_H
#define FINBENCH_FINBENCH_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fb_status {
  FB_OK = 0,
  FB_INVALID_ARGUMENT = 2,
  FB_MISSING_FILE = 3,
  FB_MALFORMED_ROW = 4,
  FB_COUNT_MISMATCH = 5,
  FB_UNKNOWN_LABEL = 6,
  FB_MISSING_QUESTION_ANSWER = 7,
  FB_POOL_TASK_MISMATCH = 8,
  FB_ZERO_SHOT_ON_GENERATION_TASK = 9,
  FB_EMPTY_GROUP = 10,
  FB_MISSING_TASK = 11,
  FB_LENGTH_MISMATCH = 12,
  FB_UNKNOWN_PHASE = 13,
  FB_INVALID_OVERRIDE = 14,
  FB_ADAPTER_NOT_FOUND = 15,
  FB_ADAPTER_FAILED = 16,
  FB_PROTOCOL_VIOLATION = 17,
  FB_EMPTY_RECORDS = 18,
  FB_COUNT_VALIDATION_FAILED = 19,
  FB_IO = 20,
  FB_MALFORMED_MANIFEST = 21,
  FB_LEAK_DETECTED = 22,
  FB_INTERNAL = 70
} fb_status;

typedef struct fb_session fb_session;

const char* fb_version(void);
/* Symbolic name such as "ProtocolViolation"; "Unknown" for other values. */
const char* fb_status_name(int status);

/* config_path may be NULL: FINBENCH_CONFIG is consulted, then defaults. The
 * session is returned even when loading fails, for fb_last_error(). */
fb_status fb_session_create(const char* config_path, fb_session** out);
void fb_session_destroy(fb_session* session);

/* key: work_dir, runs_dir, prompt_pool, manifests, adapter, seed. */
fb_status fb_session_set(fb_session* session, const char* key, const char* value);
/* JSON object merged into the overrides for one phase. */
fb_status fb_session_set_overrides(fb_session* session, const char* phase, const char* overrides_json);

const char* fb_last_error(const fb_session* session);
const char* fb_last_output(const fb_session* session);

/* manifests_path NULL: the session's manifests setting. A failing count
 * check returns FB_COUNT_VALIDATION_FAILED with the report still written. */
fb_status fb_ingest(fb_session* session, const char* manifests_path);

/* seed NULL: the session seed. mode: "standard" or "zeroshot". */
fb_status fb_build(fb_session* session, const char* task, const char* mode, const uint64_t* seed);

/* task may be NULL. */
fb_status fb_mix(fb_session* session, const char* phase, const uint64_t* seed, const char* task);

/* adapter NULL: the session adapter, then FINBENCH_ADAPTER. task may be NULL. */
fb_status fb_run(fb_session* session, const char* phase, const char* model, const char* adapter,
                 const char* task, const uint64_t* seed);

/* output and samples_dir may be NULL. */
fb_status fb_score(fb_session* session, const char* gold_path, const char* completions_path,
                   const char* output_path, const char* samples_dir);

/* runs_dir NULL: the session runs_dir. out_dir NULL: runs_dir. */
fb_status fb_report(fb_session* session, const char* runs_dir, const char* out_dir);

/* Writes the amount in currency units with two decimals, e.g. "302.40". */
fb_status fb_cost(double gpu_hours, double hourly_rate, char* buffer, size_t buffer_size);

#ifdef __cplusplus
}
#endif

#endif
