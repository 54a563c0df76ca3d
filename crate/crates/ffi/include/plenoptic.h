/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef PLENOPTIC_H
#define PLENOPTIC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Per-point observer status values written by `plen_cloud_status`.
 */
#define PLEN_POINT_UNVISITED 0

#define PLEN_POINT_UPDATED 1

#define PLEN_POINT_OUTSIDE_APERTURE 2

#define PLEN_POINT_BEHIND_CAMERA 3

/**
 * Gradient failures are reported as `PLEN_POINT_GRADIENT_ERROR_BASE + code`.
 */
#define PLEN_POINT_GRADIENT_ERROR_BASE 1000

typedef struct PlenCamera PlenCamera;

typedef struct PlenCloud PlenCloud;

typedef struct PlenLightField PlenLightField;

typedef struct PlenPath PlenPath;

typedef struct PlenScene PlenScene;

typedef int32_t PlenStatus;

/**
 * Camera intrinsics; lengths in metres.
 */
typedef struct PlenIntrinsics {
  double focal_length_m;
  double lens_to_pupilar_m;
  double pupilar_to_retinal_m;
  double aperture_radius_m;
  double pixel_pitch_m;
  double lenslet_pitch_m;
  uint32_t lenslet_rows;
  uint32_t lenslet_cols;
  uint32_t subimage_rows;
  uint32_t subimage_cols;
} PlenIntrinsics;

/**
 * Rigid camera-to-world transform: unit quaternion (w, x, y, z) and
 * translation in metres.
 */
typedef struct PlenPose {
  double rotation_wxyz[4];
  double translation[3];
} PlenPose;

#define PLEN_OK 0

#define PLEN_ERR_DEGENERATE_PROJECTION 1

#define PLEN_ERR_INVALID_CONE 2

#define PLEN_ERR_AT_FOCAL_PLANE 3

#define PLEN_ERR_INVALID_INTRINSICS 4

#define PLEN_ERR_BELOW_MIN_DEPTH 5

#define PLEN_ERR_TOO_CLOSE 6

#define PLEN_ERR_DEGENERATE_PREFACTOR 7

#define PLEN_ERR_OUT_OF_SUBIMAGE 8

#define PLEN_ERR_NO_INTERSECTION 9

#define PLEN_ERR_DEGENERATE_ORIENTATION 10

#define PLEN_ERR_INVALID_SCENE 11

#define PLEN_ERR_CONFIG 12

#define PLEN_ERR_PARSE 13

#define PLEN_ERR_IO 14

/**
 * A required pointer argument was null.
 */
#define PLEN_ERR_NULL 100

/**
 * A buffer was too small or an argument out of range.
 */
#define PLEN_ERR_ARGUMENT 101

#define PLEN_ERR_PANIC 102

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static, NUL-terminated description of a status code.
 */
const char *plen_status_message(PlenStatus status);

/**
 * Fills `out` with the default desk-scale intrinsics.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
PlenStatus plen_intrinsics_default(struct PlenIntrinsics *out);

/**
 * # Safety
 * `intrinsics` must be null or point to a valid struct; `out` must be null
 * or valid for writes.
 */
PlenStatus plen_camera_new(const struct PlenIntrinsics *intrinsics, struct PlenCamera **out);

/**
 * # Safety
 * `camera` must be null or a handle from `plen_camera_new` not yet freed.
 */
void plen_camera_free(struct PlenCamera *camera);

/**
 * Minimum admissible scene depth.
 *
 * # Safety
 * Pointers must be null or valid.
 */
PlenStatus plen_camera_min_depth(const struct PlenCamera *camera, double *out);

/**
 * Sphere with the coordinate RGB texture of spatial frequency `frequency`
 * (rad/m).
 *
 * # Safety
 * `center` must be null or point to 3 doubles; `out` null or writable.
 */
PlenStatus plen_scene_sphere(const double *center,
                             double radius,
                             double frequency,
                             struct PlenScene **out);

/**
 * # Safety
 * `scene` must be null or a live handle.
 */
void plen_scene_free(struct PlenScene *scene);

/**
 * Unsigned distance from `point` (3 doubles) to the scene surface.
 *
 * # Safety
 * Pointers must be null or valid.
 */
PlenStatus plen_scene_point_distance(const struct PlenScene *scene,
                                     const double *point,
                                     double *out);

/**
 * Lissajous path; each argument points to 3 doubles (amplitudes in metres,
 * angular frequencies in rad/frame, phases in rad, centre in metres).
 *
 * # Safety
 * Pointers must be null or valid.
 */
PlenStatus plen_path_new(const double *amplitudes,
                         const double *frequencies,
                         const double *phases,
                         const double *center,
                         struct PlenPath **out);

/**
 * # Safety
 * `path` must be null or a live handle.
 */
void plen_path_free(struct PlenPath *path);

/**
 * Outward-facing camera pose at frame `t`.
 *
 * # Safety
 * Pointers must be null or valid.
 */
PlenStatus plen_path_pose_at(const struct PlenPath *path, double t, struct PlenPose *out);

/**
 * Ray-traces one light-field frame.
 *
 * # Safety
 * Pointers must be null or valid handles/structs.
 */
PlenStatus plen_render(const struct PlenScene *scene,
                       const struct PlenCamera *camera,
                       const struct PlenPose *pose,
                       struct PlenLightField **out);

/**
 * # Safety
 * `lf` must be null or a live handle.
 */
void plen_light_field_free(struct PlenLightField *lf);

/**
 * Image size in pixels.
 *
 * # Safety
 * Pointers must be null or valid.
 */
PlenStatus plen_light_field_dims(const struct PlenLightField *lf, size_t *rows, size_t *cols);

/**
 * Copies the image as row-major interleaved RGB doubles into `buf`, which
 * must hold `3 * rows * cols` values.
 *
 * # Safety
 * `buf` must be null or valid for `len` writes.
 */
PlenStatus plen_light_field_copy_rgb(const struct PlenLightField *lf, double *buf, size_t len);

/**
 * Cloud from `n` points given as `3n` doubles.
 *
 * # Safety
 * `points` must be valid for `3n` reads (or null when `n == 0`).
 */
PlenStatus plen_cloud_new(const double *points, size_t n, struct PlenCloud **out);

/**
 * # Safety
 * `cloud` must be null or a live handle.
 */
void plen_cloud_free(struct PlenCloud *cloud);

/**
 * # Safety
 * Pointers must be null or valid.
 */
PlenStatus plen_cloud_len(const struct PlenCloud *cloud, size_t *out);

/**
 * Copies the `3n` point coordinates into `buf`.
 *
 * # Safety
 * `buf` must be null or valid for `len` writes.
 */
PlenStatus plen_cloud_points(const struct PlenCloud *cloud, double *buf, size_t len);

/**
 * Per-point status codes (`PLEN_POINT_*`) and cumulative update counts of
 * the last step; either buffer may be null to skip it.
 *
 * # Safety
 * Non-null buffers must be valid for `len` writes.
 */
PlenStatus plen_cloud_status(const struct PlenCloud *cloud,
                             int32_t *status,
                             uint32_t *updates,
                             size_t len);

/**
 * One observer step of the cloud in place with gain `gain`, using the
 * light field captured at `pose`.
 *
 * # Safety
 * Pointers must be null or valid handles/structs.
 */
PlenStatus plen_cloud_step(struct PlenCloud *cloud,
                           const struct PlenCamera *camera,
                           const struct PlenLightField *lf,
                           const struct PlenPose *pose,
                           double gain);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLENOPTIC_H */
