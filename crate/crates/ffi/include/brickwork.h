#ifndef BRICKWORK_H
#define BRICKWORK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum BwStatus {
  BW_STATUS_OK = 0,
  BW_STATUS_NULL_POINTER = 1,
  BW_STATUS_INVALID_ARGUMENT = 2,
  BW_STATUS_PARSE_ERROR = 3,
  BW_STATUS_SOLVER_ERROR = 4,
  BW_STATUS_PANIC = 5,
} BwStatus;

typedef enum BwMode {
  BW_MODE_OPEN_LOOP = 0,
  BW_MODE_ADAPTIVE = 1,
} BwMode;

typedef enum BwOutcome {
  BW_OUTCOME_COMPLETED = 0,
  BW_OUTCOME_COLLISION_FAILURE = 1,
  BW_OUTCOME_BOND_GAP_FAILURE = 2,
} BwOutcome;

/**
 * Opaque binary mask.
 */
typedef struct BwMask BwMask;

/**
 * Opaque projector model.
 */
typedef struct BwProjector BwProjector;

typedef struct BwVec3 {
  double x;
  double y;
  double z;
} BwVec3;

/**
 * Rigid transform: unit quaternion `(w, x, y, z)` and translation.
 */
typedef struct BwPose {
  double rotation_wxyz[4];
  struct BwVec3 translation;
} BwPose;

typedef struct BwImagePoint {
  double u;
  double v;
  bool in_frame;
} BwImagePoint;

typedef struct BwBuildSummary {
  size_t placed;
  size_t unplaced;
  enum BwOutcome outcome;
} BwBuildSummary;

typedef struct BwCoverageReport {
  double region_coverage;
  double exposed_adhesive;
  double largest_missed_patch;
} BwCoverageReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. Valid until the next
 * failing call on the same thread; never null.
 */
const char *bw_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bw_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void bw_string_free(char *s);

/**
 * `out = a * b`.
 *
 * # Safety
 * Pointers must be null or valid for reads (`a`, `b`) and writes (`out`).
 */
enum BwStatus bw_pose_compose(const struct BwPose *a, const struct BwPose *b, struct BwPose *out);

/**
 * `out = pose^-1`.
 *
 * # Safety
 * Pointers must be null or valid for reads (`pose`) and writes (`out`).
 */
enum BwStatus bw_pose_inverse(const struct BwPose *pose, struct BwPose *out);

/**
 * Creates a projector model from its TCP-to-projector extrinsic and field
 * of view angles, each in (0, pi).
 *
 * # Safety
 * `extrinsic` must be null or readable; `out` null or writable.
 */
enum BwStatus bw_projector_new(const struct BwPose *extrinsic,
                               double fov_x,
                               double fov_y,
                               struct BwProjector **out);

/**
 * The reference mount used by the shipped scenarios.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum BwStatus bw_projector_reference(struct BwProjector **out);

/**
 * # Safety
 * `p` must be null or a handle from this library, not yet freed.
 */
void bw_projector_free(struct BwProjector *p);

/**
 * Reads back a projector model. Any out pointer may be null.
 *
 * # Safety
 * `p` must be a live handle; out pointers null or writable.
 */
enum BwStatus bw_projector_get(const struct BwProjector *p,
                               struct BwPose *extrinsic,
                               double *fov_x,
                               double *fov_y);

/**
 * Normalized image coordinates of a projector-frame point. Points at or
 * behind the projector plane fail with `InvalidArgument`.
 *
 * # Safety
 * `p` must be a live handle; `point` readable; `out` writable.
 */
enum BwStatus bw_project_point(const struct BwProjector *p,
                               const struct BwVec3 *point,
                               struct BwImagePoint *out);

/**
 * Projector-frame point at depth `z` that projects to `(u, v)`.
 *
 * # Safety
 * `p` must be a live handle; `out` writable.
 */
enum BwStatus bw_unproject(const struct BwProjector *p,
                           double u,
                           double v,
                           double z,
                           struct BwVec3 *out);

/**
 * TCP pose that places the projector at `projector_pose`.
 *
 * # Safety
 * `p` must be a live handle; `projector_pose` readable; `out` writable.
 */
enum BwStatus bw_tcp_pose_for_projection(const struct BwProjector *p,
                                         const struct BwPose *projector_pose,
                                         struct BwPose *out);

/**
 * Calibrates from a session JSON document. On success `out_model`
 * receives a new projector handle and, when `out_result_json` is not null,
 * the full result document.
 *
 * # Safety
 * `session_json` must be a NUL-terminated string; out pointers writable
 * (`out_result_json` may be null).
 */
enum BwStatus bw_calibrate_json(const char *session_json,
                                struct BwProjector **out_model,
                                char **out_result_json);

/**
 * Runs one build from JSON design, noise and timing documents with the
 * default adaptive configuration. `out_build_json` may be null.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out_summary` writable;
 * `out_build_json` null or writable.
 */
enum BwStatus bw_simulate_json(const char *design_json,
                               const char *noise_json,
                               const char *timing_json,
                               enum BwMode mode,
                               struct BwBuildSummary *out_summary,
                               char **out_build_json);

/**
 * Creates an empty mask; `scale` is meters per pixel.
 *
 * # Safety
 * `out` must be writable.
 */
enum BwStatus bw_mask_new(size_t width, size_t height, double scale, struct BwMask **out);

/**
 * Decodes a binary PGM (P5) image; pixels of 128 or more are adhesive.
 *
 * # Safety
 * `data` must be readable for `len` bytes; `out` writable.
 */
enum BwStatus bw_mask_from_pgm(const uint8_t *data, size_t len, struct BwMask **out);

/**
 * # Safety
 * `m` must be a live handle.
 */
enum BwStatus bw_mask_set(struct BwMask *m, size_t x, size_t y, bool value);

/**
 * # Safety
 * `m` must be null or a handle from this library, not yet freed.
 */
void bw_mask_free(struct BwMask *m);

/**
 * Scores `mask` against a polygon given as `vertex_count` (x, y) pairs in
 * pixel coordinates.
 *
 * # Safety
 * `xy` must be readable for `2 * vertex_count` doubles; `mask` live;
 * `out` writable.
 */
enum BwStatus bw_coverage_analyze(const double *xy,
                                  size_t vertex_count,
                                  const struct BwMask *mask,
                                  struct BwCoverageReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BRICKWORK_H */
