#ifndef CONFSCAN_H
#define CONFSCAN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ConfscanStatus {
  CONFSCAN_STATUS_OK = 0,
  CONFSCAN_STATUS_NULL_POINTER = 1,
  CONFSCAN_STATUS_INVALID_UTF8 = 2,
  /**
   * A file or directory could not be read or is malformed.
   */
  CONFSCAN_STATUS_IO = 3,
  /**
   * The input was read but could not be analyzed.
   */
  CONFSCAN_STATUS_INVALID_INPUT = 4,
  CONFSCAN_STATUS_PANIC = 5,
} ConfscanStatus;

/**
 * Opaque handle to a loaded index snapshot.
 */
typedef struct ConfscanSnapshot ConfscanSnapshot;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads a snapshot JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ConfscanStatus confscan_snapshot_load(const char *path, struct ConfscanSnapshot **out);

/**
 * Number of packages in the snapshot, 0 for a null handle.
 *
 * # Safety
 * `snapshot` must be null or a live handle.
 */
size_t confscan_snapshot_package_count(const struct ConfscanSnapshot *snapshot);

/**
 * # Safety
 * `snapshot` must be null or a handle from [`confscan_snapshot_load`]
 * not yet freed.
 */
void confscan_snapshot_free(struct ConfscanSnapshot *snapshot);

/**
 * Checks the project in `project_dir` in static mode. On success `*out_json`
 * holds a report document with one report and `*out_validated` (when
 * non-null) whether the release passed all checks.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum ConfscanStatus confscan_check_project(const struct ConfscanSnapshot *snapshot,
                                           const char *project_dir,
                                           char **out_json,
                                           bool *out_validated);

/**
 * Checks every `<name>-<version>/` release under `corpus_dir` with up to
 * `jobs` threads (0 means one).
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum ConfscanStatus confscan_check_corpus(const struct ConfscanSnapshot *snapshot,
                                          const char *corpus_dir,
                                          uint32_t jobs,
                                          char **out_json);

/**
 * Message of the last failed call on this thread, or null. Valid until
 * the next call into this library on the same thread.
 */
const char *confscan_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void confscan_string_free(char *s);

/**
 * Library version, static storage.
 */
const char *confscan_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONFSCAN_H */
