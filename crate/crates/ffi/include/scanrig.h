#ifndef SCANRIG_H
#define SCANRIG_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ScanrigStatus {
  SCANRIG_STATUS_OK = 0,
  SCANRIG_STATUS_INVALID_ARGUMENT = 1,
  SCANRIG_STATUS_NULL_POINTER = 2,
  SCANRIG_STATUS_IO = 3,
  SCANRIG_STATUS_PARSE = 4,
  SCANRIG_STATUS_NUMERICAL = 5,
  SCANRIG_STATUS_BUFFER_TOO_SMALL = 6,
  SCANRIG_STATUS_PANIC = 7,
} ScanrigStatus;

/**
 * A parametric body model.
 */
typedef struct ScanrigBody ScanrigBody;

/**
 * Result of fitting a body to a scan.
 */
typedef struct ScanrigFit ScanrigFit;

/**
 * A triangle mesh.
 */
typedef struct ScanrigMesh ScanrigMesh;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *scanrig_version(void);

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the buffer size needed for the whole message.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t scanrig_last_error(char *buf, size_t len);

/**
 * The built-in 24-joint demo body.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum ScanrigStatus scanrig_body_demo(struct ScanrigBody **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string, `out` a valid pointer to a handle slot.
 */
enum ScanrigStatus scanrig_body_load(const char *path, struct ScanrigBody **out);

/**
 * # Safety
 * `body` must be null or a handle from this library, not yet freed.
 */
void scanrig_body_free(struct ScanrigBody *body);

/**
 * # Safety
 * `body` must be null or a live handle.
 */
size_t scanrig_body_num_joints(const struct ScanrigBody *body);

/**
 * # Safety
 * `body` must be null or a live handle.
 */
size_t scanrig_body_num_shapes(const struct ScanrigBody *body);

/**
 * Length of the parameter vector `[global 6 | translation 3 | joints 6J | shape S]`.
 *
 * # Safety
 * `body` must be null or a live handle.
 */
size_t scanrig_body_param_count(const struct ScanrigBody *body);

/**
 * Pose the body with a packed parameter vector.
 *
 * # Safety
 * `params` must point to `len` doubles, `out` to a handle slot.
 */
enum ScanrigStatus scanrig_body_pose(const struct ScanrigBody *body,
                                     const double *params,
                                     size_t len,
                                     struct ScanrigMesh **out);

/**
 * Read an OBJ file. Degenerate faces are dropped.
 *
 * # Safety
 * `path` must be a NUL-terminated string, `out` a valid pointer to a handle slot.
 */
enum ScanrigStatus scanrig_mesh_load_obj(const char *path, struct ScanrigMesh **out);

/**
 * # Safety
 * `mesh` must be a live handle, `path` a NUL-terminated string.
 */
enum ScanrigStatus scanrig_mesh_save_obj(const struct ScanrigMesh *mesh, const char *path);

/**
 * # Safety
 * `mesh` must be null or a handle from this library, not yet freed.
 */
void scanrig_mesh_free(struct ScanrigMesh *mesh);

/**
 * # Safety
 * `mesh` must be null or a live handle.
 */
size_t scanrig_mesh_vertex_count(const struct ScanrigMesh *mesh);

/**
 * # Safety
 * `mesh` must be null or a live handle.
 */
size_t scanrig_mesh_face_count(const struct ScanrigMesh *mesh);

/**
 * Copy vertex positions as `x0 y0 z0 x1 ...`; `len` must be at least 3 × vertex count.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum ScanrigStatus scanrig_mesh_copy_vertices(const struct ScanrigMesh *mesh,
                                              double *out,
                                              size_t len);

/**
 * Generalized winding number of `point` (3 doubles) with respect to the mesh.
 *
 * # Safety
 * `point` must point to 3 doubles, `out` to one.
 */
enum ScanrigStatus scanrig_mesh_winding_number(const struct ScanrigMesh *mesh,
                                               const double *point,
                                               double *out);

/**
 * Mean per-vertex distance between two meshes with equal vertex counts, mm.
 *
 * # Safety
 * Both meshes must be live handles, `out` must point to one double.
 */
enum ScanrigStatus scanrig_v2v_mm(const struct ScanrigMesh *a,
                                  const struct ScanrigMesh *b,
                                  double *out);

/**
 * Symmetric vertex-to-surface Chamfer distance, mm.
 *
 * # Safety
 * Both meshes must be live handles, `out` must point to one double.
 */
enum ScanrigStatus scanrig_chamfer_mm(const struct ScanrigMesh *a,
                                      const struct ScanrigMesh *b,
                                      double *out);

/**
 * Fit the body to a scan with default settings.
 *
 * `joints` holds 3 × `joint_count` doubles of 3D keypoints; `valid` holds one
 * flag per joint (nonzero = observed) or is null when all are observed.
 *
 * # Safety
 * Pointers must reference buffers of the stated sizes; `out` a handle slot.
 */
enum ScanrigStatus scanrig_fit(const struct ScanrigBody *body,
                               const struct ScanrigMesh *scan,
                               const double *joints,
                               const uint8_t *valid,
                               size_t joint_count,
                               struct ScanrigFit **out);

/**
 * # Safety
 * `fit` must be null or a handle from this library, not yet freed.
 */
void scanrig_fit_free(struct ScanrigFit *fit);

/**
 * Copy the fitted packed parameter vector (see [`scanrig_body_param_count`]).
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum ScanrigStatus scanrig_fit_copy_params(const struct ScanrigFit *fit, double *out, size_t len);

/**
 * Fraction of fitted vertices inside the scan, or NaN for a null handle.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
double scanrig_fit_inside_fraction(const struct ScanrigFit *fit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCANRIG_H */
