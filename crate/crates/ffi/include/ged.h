#ifndef GED_H
#define GED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum GedStatus {
  GED_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  GED_STATUS_NULL_ARGUMENT = 1,
  /**
   * The source text was not valid UTF-8.
   */
  GED_STATUS_INVALID_UTF8 = 2,
  /**
   * The source did not parse; the message starts with `LINE:COL:`.
   */
  GED_STATUS_PARSE_ERROR = 3,
  /**
   * The program parsed but the design could not be built.
   */
  GED_STATUS_BUILD_ERROR = 4,
  /**
   * The design is invalid or cannot be turned into a table.
   */
  GED_STATUS_SERVE_ERROR = 5,
  /**
   * An internal error was caught at the boundary.
   */
  GED_STATUS_PANIC = 6,
} GedStatus;

/**
 * Opaque handle to a built design.
 */
typedef struct GedDesign GedDesign;

/**
 * Bytes owned by the caller. `data[len]` is always a NUL byte, so text
 * output can be used as a C string when it has no interior NUL.
 */
typedef struct GedBuffer {
  uint8_t *data;
  size_t len;
} GedBuffer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses and builds a design. When `has_seed` is non-zero, `seed` replaces
 * the seed given in the source (it has no effect without an `assign`
 * block). On success `*out` receives a handle to free with
 * [`ged_design_free`].
 *
 * # Safety
 * `source` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum GedStatus ged_design_from_source(const char *source,
                                      int32_t has_seed,
                                      uint64_t seed,
                                      struct GedDesign **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `design` must be null or a handle from [`ged_design_from_source`] that
 * has not been freed.
 */
void ged_design_free(struct GedDesign *design);

/**
 * Writes the design table as CSV into `*out`.
 *
 * # Safety
 * `design` must be a live handle and `out` a valid pointer.
 */
enum GedStatus ged_design_serve_csv(const struct GedDesign *design, struct GedBuffer *out);

/**
 * Writes the factor graph in DOT format into `*out`.
 *
 * # Safety
 * `design` must be a live handle and `out` a valid pointer.
 */
enum GedStatus ged_design_factor_dot(const struct GedDesign *design, struct GedBuffer *out);

/**
 * Writes the level graph in DOT format into `*out`.
 *
 * # Safety
 * `design` must be a live handle and `out` a valid pointer.
 */
enum GedStatus ged_design_level_dot(const struct GedDesign *design, struct GedBuffer *out);

/**
 * Stores the number of structural violations in `*count`; zero means the
 * design is valid.
 *
 * # Safety
 * `design` must be a live handle and `count` a valid pointer.
 */
enum GedStatus ged_design_violation_count(const struct GedDesign *design, size_t *count);

/**
 * Message for the last failed call on this thread, or null if the last
 * call succeeded. The pointer stays valid until the next call into this
 * library on the same thread.
 */
const char *ged_last_error(void);

/**
 * Releases a buffer returned by this library. Empty buffers are ignored.
 *
 * # Safety
 * `buffer` must come from this library and not have been freed.
 */
void ged_buffer_free(struct GedBuffer buffer);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ged_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GED_H */
