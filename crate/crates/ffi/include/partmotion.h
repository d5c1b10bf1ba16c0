#ifndef PARTMOTION_H
#define PARTMOTION_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PmStatus {
  PM_STATUS_OK = 0,
  PM_STATUS_NULL_POINTER = 1,
  PM_STATUS_INVALID_UTF8 = 2,
  PM_STATUS_INVALID_ARGUMENT = 3,
  PM_STATUS_SHAPE = 4,
  PM_STATUS_DATA = 5,
  PM_STATUS_CONFIG = 6,
  PM_STATUS_TRANSPORT = 7,
  PM_STATUS_IO = 8,
  PM_STATUS_BUFFER_TOO_SMALL = 9,
  PM_STATUS_PANIC = 10,
} PmStatus;

/**
 * A trained model bundle loaded from a checkpoint directory.
 */
typedef struct PmBundle PmBundle;

/**
 * One generated motion with the parts it was conditioned on.
 */
typedef struct PmMotion PmMotion;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on the same thread.
 */
const char *pm_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *pm_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void pm_string_free(char *s);

/**
 * Keyword-based interaction extraction. Writes a newly allocated
 * `part: phrase` listing (or `none`) to `out`.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum PmStatus pm_extract_fallback(const char *text, char **out);

/**
 * # Safety
 * `dir` must be a NUL-terminated path; `out` must be writable.
 */
enum PmStatus pm_bundle_load(const char *dir, struct PmBundle **out);

/**
 * # Safety
 * `bundle` must be null or a handle from [`pm_bundle_load`], freed once.
 */
void pm_bundle_free(struct PmBundle *bundle);

/**
 * Generates a motion from `text`, extracting parts with the keyword
 * extractor. `frames` of 0 uses the bundle default; a negative
 * `guidance_scale` uses the bundle default.
 *
 * # Safety
 * `bundle` must be a live handle, `text` NUL-terminated, `out` writable.
 */
enum PmStatus pm_generate(const struct PmBundle *bundle,
                          const char *text,
                          uint64_t seed,
                          size_t frames,
                          double guidance_scale,
                          bool deterministic,
                          struct PmMotion **out);

/**
 * # Safety
 * `motion` must be null or a handle from [`pm_generate`], freed once.
 */
void pm_motion_free(struct PmMotion *motion);

/**
 * Number of frames, or 0 for a null handle.
 *
 * # Safety
 * `motion` must be null or a live handle.
 */
size_t pm_motion_frames(const struct PmMotion *motion);

/**
 * Feature width of one frame, or 0 for a null handle.
 *
 * # Safety
 * `motion` must be null or a live handle.
 */
size_t pm_motion_dim(const struct PmMotion *motion);

/**
 * Comma-separated interacting part names, empty when none. Owned by the
 * handle.
 *
 * # Safety
 * `motion` must be null or a live handle.
 */
const char *pm_motion_parts(const struct PmMotion *motion);

/**
 * Copies the frames row-major into `buf` (frames × dim values).
 *
 * # Safety
 * `motion` must be a live handle and `buf` valid for `len` doubles.
 */
enum PmStatus pm_motion_copy(const struct PmMotion *motion, double *buf, size_t len);

/**
 * Copies joint positions into `buf` as frames × joints × 3 values.
 *
 * # Safety
 * `motion` must be a live handle and `buf` valid for `len` doubles.
 */
enum PmStatus pm_motion_joint_positions(const struct PmMotion *motion, double *buf, size_t len);

/**
 * The generation trace as JSON, newly allocated.
 *
 * # Safety
 * `motion` must be a live handle; `out` writable.
 */
enum PmStatus pm_motion_trace_json(const struct PmMotion *motion, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PARTMOTION_H */
